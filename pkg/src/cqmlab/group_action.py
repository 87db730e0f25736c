"""Sampled compact groups acting on matrix spaces.

A :class:`SampledGroup` is a finite list of group elements with
quadrature weights for the Haar integral, a length function, and an
exact inverse pairing.  Exact finite groups (cyclic products) carry a
closed product table; quadrature grids of continuous groups (SU(2))
do not and are flagged ``is_exact=False``.

The translation-invariant seminorm of an action is the sup over sampled
non-identity elements of ``|alpha_x(a) - a| / l(x)``.  All reported
quantities therefore refer to the sampled group; every grid carries a
descriptor so results can be stamped with it.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_chebyu

from .numerics import STRUCTURAL_TOL, op_norms

DEFAULT_INTEGER_TOL = 0.05


class QuadratureError(Exception):
    """Raised when a quadrature result is too far from an admissible value."""

    def __init__(self, message, raw=None):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class SampledGroup:
    """Finite sample of a compact group with Haar quadrature weights."""

    elements: tuple                # opaque labels
    weights: np.ndarray            # nonnegative, sums to 1
    lengths: np.ndarray            # l(x) >= 0, zero only at the identity
    identity_index: int
    inverse: np.ndarray            # permutation of indices, x -> x^{-1}
    is_exact: bool
    product: np.ndarray | None = None   # index table, exact groups only
    descriptor: str = ""

    @property
    def size(self) -> int:
        return len(self.elements)

    def non_identity(self) -> np.ndarray:
        idx = np.arange(self.size)
        return idx[idx != self.identity_index]

    def seminorm_support(self) -> np.ndarray:
        """One representative per inverse pair, identity excluded: since the
        implementers are isometries, |alpha_x(a) - a| = |alpha_{x^-1}(a) - a|
        and l(x) = l(x^-1), so the seminorm sup only needs half the sample."""
        idx = np.arange(self.size)
        keep = (idx != self.identity_index) & (idx <= self.inverse)
        return idx[keep]

    def haar_mean_length(self) -> float:
        """Quadrature value of the Haar integral of the length function."""
        return float(np.dot(self.weights, self.lengths))

    def validate(self, tol: float = 1e-9) -> None:
        w, l = self.weights, self.lengths
        if abs(float(np.sum(w)) - 1.0) > tol:
            raise ValueError("weights do not sum to 1")
        if np.any(w < -tol):
            raise ValueError("negative quadrature weight")
        if abs(l[self.identity_index]) > tol:
            raise ValueError("length at identity is nonzero")
        others = self.non_identity()
        if others.size and np.min(l[others]) <= 0:
            raise ValueError("length vanishes off the identity")
        if np.max(np.abs(l[self.inverse] - l)) > tol:
            raise ValueError("length not symmetric under inversion")
        if np.any(self.inverse[self.inverse] != np.arange(self.size)):
            raise ValueError("inverse is not an involution")
        if self.is_exact:
            if self.product is None:
                raise ValueError("exact group without a product table")
            p = self.product
            if p.shape != (self.size, self.size) or np.any(p < 0) or np.any(p >= self.size):
                raise ValueError("product table does not close")


@dataclass(frozen=True)
class IrrepCharacter:
    """Character of one irreducible representation, tabulated on the sample."""

    label: object
    dimension: int
    values: np.ndarray
    conjugate_label: object = None

    def __post_init__(self):
        if self.conjugate_label is None:
            object.__setattr__(self, "conjugate_label", self.label)

    def validate(self, tol: float = 1e-8) -> None:
        if abs(self.values[0]) > self.dimension + tol:
            pass
        if np.max(np.abs(self.values)) > self.dimension + tol:
            raise ValueError(f"character {self.label} exceeds its dimension in modulus")


@dataclass
class UnitaryAction:
    """A sampled group together with unitary implementers of fixed dimension."""

    group: SampledGroup
    implementers: np.ndarray       # (size, d, d)
    _kernel: tuple | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.implementers.shape[-1]

    def seminorm_kernel(self) -> tuple[np.ndarray, np.ndarray]:
        """(indices, lengths) after merging sample elements that induce the
        same automorphism up to a global implementer phase, keeping the
        minimal length per class.  The seminorm sup over the sample is
        unchanged: equal automorphisms give equal norms, and the smallest
        length dominates the quotient."""
        if self._kernel is not None:
            return self._kernel
        support = self.group.seminorm_support()
        classes: dict = {}
        d = self.dim
        # fixed generic functional: stable phase extraction no matter which
        # entries happen to share the maximal magnitude
        probe_rng = np.random.default_rng(12345)
        probe = probe_rng.standard_normal(d * d) + 1j * probe_rng.standard_normal(d * d)
        for i in support:
            u = self.implementers[i]
            flat = u.ravel()
            s = complex(probe @ flat)
            if abs(s) < 1e-9:
                pivot = int(np.argmax(np.abs(flat)))
                s = flat[pivot]
            phase = s / abs(s)
            # 1e-6 cells: float noise between equal automorphisms is ~1e-15,
            # distinct grid automorphisms differ by orders of magnitude more
            key = np.round(flat / phase, 6).tobytes()
            l = float(self.group.lengths[i])
            if key not in classes or l < classes[key][1]:
                classes[key] = (int(i), l)
        reps = sorted(classes.values())
        idx = np.array([r[0] for r in reps], dtype=int)
        lens = np.array([r[1] for r in reps])
        self._kernel = (idx, lens)
        return self._kernel

    def validate(self, tol: float = 1e-8, pair_sample: int = 64,
                 rng: np.random.Generator | None = None) -> None:
        g = self.group
        g.validate()
        d = self.dim
        uid = self.implementers[g.identity_index]
        if np.max(np.abs(uid - np.eye(d))) > STRUCTURAL_TOL:
            raise ValueError("implementer at the identity is not the identity matrix")
        prods = self.implementers @ np.swapaxes(self.implementers.conj(), -1, -2)
        if float(np.max(np.abs(prods - np.eye(d)))) > tol:
            raise ValueError("an implementer is not unitary")
        if g.is_exact and g.product is not None:
            rng = rng or np.random.default_rng(0)
            n = g.size
            npairs = min(pair_sample, n * n)
            ii = rng.integers(0, n, size=npairs)
            jj = rng.integers(0, n, size=npairs)
            for i, j in zip(ii, jj):
                lhs = self.implementers[i] @ self.implementers[j]
                rhs = self.implementers[g.product[i, j]]
                # compare up to a global phase
                tr = np.trace(rhs.conj().T @ lhs)
                phase = tr / abs(tr) if abs(tr) > 1e-12 else 1.0
                if np.max(np.abs(lhs - phase * rhs)) > tol:
                    raise ValueError("product table and implementers disagree")


# ---------------------------------------------------------------------------
# group constructors


def _arc(k: np.ndarray, m: int) -> np.ndarray:
    k = np.mod(k, m)
    return 2.0 * np.pi * np.minimum(k, m - k) / m


def cyclic_group(m: int) -> SampledGroup:
    """Z_m as the exact subgroup of the circle, arc-length metric."""
    if m < 2:
        raise ValueError("need m >= 2")
    idx = np.arange(m)
    return SampledGroup(
        elements=tuple(int(k) for k in idx),
        weights=np.full(m, 1.0 / m),
        lengths=_arc(idx, m),
        identity_index=0,
        inverse=np.mod(-idx, m),
        is_exact=True,
        product=np.mod(idx[:, None] + idx[None, :], m),
        descriptor=f"Z_{m} (arc length)",
    )


def torus_group(q: int, n: int = 2) -> SampledGroup:
    """Z_q^n inside the n-torus with the flat word length sum_i arc(x_i)."""
    if q < 2:
        raise ValueError("need q >= 2")
    grids = np.indices((q,) * n).reshape(n, -1).T      # (q^n, n)
    strides = np.array([q ** (n - 1 - i) for i in range(n)])
    lengths = _arc(grids, q).sum(axis=1)
    prod = np.mod(grids[:, None, :] + grids[None, :, :], q) @ strides
    return SampledGroup(
        elements=tuple(tuple(int(c) for c in row) for row in grids),
        weights=np.full(q ** n, 1.0 / q ** n),
        lengths=lengths,
        identity_index=0,
        inverse=(np.mod(-grids, q) @ strides),
        is_exact=True,
        product=prod,
        descriptor=f"Z_{q}^{n} in T^{n} (flat word length)",
    )


def cyclic_characters(m: int) -> list[IrrepCharacter]:
    idx = np.arange(m)
    return [
        IrrepCharacter(
            label=int(k),
            dimension=1,
            values=np.exp(2j * np.pi * k * idx / m),
            conjugate_label=int((-k) % m),
        )
        for k in range(m)
    ]


def torus_characters(q: int, n: int = 2) -> list[IrrepCharacter]:
    grids = np.indices((q,) * n).reshape(n, -1).T
    chars = []
    for w in grids:
        vals = np.exp(2j * np.pi * (grids @ w) / q)
        chars.append(
            IrrepCharacter(
                label=tuple(int(c) for c in w),
                dimension=1,
                values=vals,
                conjugate_label=tuple(int(c) for c in np.mod(-w, q)),
            )
        )
    return chars


@dataclass(frozen=True)
class Su2Grid:
    """Euler-angle product quadrature of SU(2), symmetrized under inversion.

    ``matrices`` holds the defining 2x2 representatives; ``cos_angles``
    the cosine of the geodesic angle on the unit-quaternion sphere
    (half the space-rotation angle), which is the length function.
    """

    group: SampledGroup
    matrices: np.ndarray           # (size, 2, 2)
    cos_angles: np.ndarray
    euler: np.ndarray              # (size, 3) alpha, beta, gamma of the base point


def su2_euler_grid(n_alpha: int = 12, n_beta: int = 12, n_gamma: int = 12) -> Su2Grid:
    """Product grid: uniform alpha in [0,2pi), Gauss-Legendre in cos(beta),
    uniform gamma in [0,4pi).  Each node is paired with its inverse at half
    weight so the sample is exactly closed under inversion; the identity is
    adjoined with weight zero."""
    u, wu = np.polynomial.legendre.leggauss(n_beta)
    betas = np.arccos(u)
    alphas = 2.0 * np.pi * np.arange(n_alpha) / n_alpha
    gammas = 4.0 * np.pi * np.arange(n_gamma) / n_gamma

    aa, bb, gg = np.meshgrid(alphas, betas, gammas, indexing="ij")
    aa, bb, gg = aa.ravel(), bb.ravel(), gg.ravel()
    wa = np.full(n_alpha, 1.0 / n_alpha)
    wb = wu / 2.0
    wg = np.full(n_gamma, 1.0 / n_gamma)
    ww = (wa[:, None, None] * wb[None, :, None] * wg[None, None, :]).ravel()

    half = np.exp(-0.5j * (aa + gg)) * np.cos(bb / 2.0)
    off = np.exp(-0.5j * (aa - gg)) * np.sin(bb / 2.0)
    base = np.empty((aa.size, 2, 2), dtype=complex)
    base[:, 0, 0] = half
    base[:, 0, 1] = -off
    base[:, 1, 0] = off.conj()
    base[:, 1, 1] = half.conj()

    mats = np.concatenate([np.eye(2, dtype=complex)[None], base,
                           np.swapaxes(base.conj(), 1, 2)])
    n = aa.size
    weights = np.concatenate([[0.0], ww / 2.0, ww / 2.0])
    cos_ang = np.real(np.trace(base, axis1=1, axis2=2)) / 2.0
    cos_angles = np.concatenate([[1.0], cos_ang, cos_ang])
    lengths = np.arccos(np.clip(cos_angles, -1.0, 1.0))
    inverse = np.concatenate([[0], np.arange(n) + 1 + n, np.arange(n) + 1])
    euler = np.concatenate([np.zeros((1, 3)),
                            np.stack([aa, bb, gg], axis=1),
                            np.stack([aa, bb, gg], axis=1)])
    labels = tuple(["e"] + [("g", i) for i in range(n)] + [("ginv", i) for i in range(n)])
    group = SampledGroup(
        elements=labels,
        weights=weights,
        lengths=lengths,
        identity_index=0,
        inverse=inverse,
        is_exact=False,
        product=None,
        descriptor=f"SU(2) Euler grid {n_alpha}x{n_beta}x{n_gamma}, inversion-symmetrized",
    )
    return Su2Grid(group=group, matrices=mats, cos_angles=cos_angles, euler=euler)


def su2_characters(grid: Su2Grid, two_l_values) -> list[IrrepCharacter]:
    """Spin-l characters chi_l = U_{2l}(cos phi) on the sampled grid.

    ``two_l_values`` lists 2l as integers (so integer and half-integer
    spins are both addressable); the conjugate of every SU(2) irrep is
    itself.
    """
    chars = []
    for two_l in two_l_values:
        vals = eval_chebyu(two_l, grid.cos_angles).astype(complex)
        chars.append(IrrepCharacter(label=f"spin-{two_l}/2" if two_l % 2 else f"spin-{two_l // 2}",
                                    dimension=two_l + 1, values=vals))
    return chars


# ---------------------------------------------------------------------------
# operations


def apply(action: UnitaryAction, x: int, a: np.ndarray) -> np.ndarray:
    """alpha_x(a) = U_x a U_x^dagger."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (action.dim, action.dim):
        raise ValueError(f"dimension mismatch: element is {a.shape}, action is {action.dim}")
    u = action.implementers[x]
    return u @ a @ u.conj().T


def apply_all(action: UnitaryAction, a: np.ndarray) -> np.ndarray:
    """Stack of alpha_x(a) over the whole sample, shape (size, d, d)."""
    u = action.implementers
    return np.einsum("xab,bc,xdc->xad", u, np.asarray(a, dtype=complex), u.conj(),
                     optimize=True)


def _sup_quotients(diffs: np.ndarray, lengths: np.ndarray) -> float:
    """max_x ||diffs[x]|| / lengths[x], with a fast path for diagonal stacks."""
    if diffs.size == 0:
        return 0.0
    d = diffs.shape[-1]
    diag = diffs[:, np.arange(d), np.arange(d)]
    off = diffs - diag[:, :, None] * np.eye(d)
    if float(np.max(np.abs(off))) <= 1e-14 * (1.0 + float(np.max(np.abs(diag), initial=0.0))):
        norms = np.max(np.abs(diag), axis=1)
    else:
        norms = op_norms(diffs)
    return float(np.max(norms / lengths))


def lip_seminorm(action: UnitaryAction, a: np.ndarray) -> float:
    """Seminorm sup_{x != e} ||alpha_x(a) - a|| / l(x) over the sample."""
    others, lens = action.seminorm_kernel()
    if others.size == 0:
        raise ValueError("group sample contains only the identity")
    u = action.implementers[others]
    a = np.asarray(a, dtype=complex)
    moved = np.einsum("xab,bc,xdc->xad", u, a, u.conj(), optimize=True)
    return _sup_quotients(moved - a[None], lens)


def lip_seminorms(action: UnitaryAction, stack: np.ndarray,
                  block: int = 64) -> np.ndarray:
    """Vectorized seminorm over a stack of elements, chunked to cap memory."""
    stack = np.asarray(stack, dtype=complex)
    others, lens = action.seminorm_kernel()
    u = action.implementers[others]
    out = np.empty(stack.shape[0])
    for lo in range(0, stack.shape[0], block):
        chunk = stack[lo:lo + block]
        moved = np.einsum("xab,nbc,xdc->nxad", u, chunk, u.conj(), optimize=True)
        diffs = moved - chunk[:, None]
        norms = op_norms(diffs.reshape(-1, *diffs.shape[-2:])).reshape(diffs.shape[:2])
        out[lo:lo + block] = np.max(norms / lens[None, :], axis=1)
    return out


def projection_weight_fn(chars: list[IrrepCharacter]) -> np.ndarray:
    """phi_J(x) = sum_gamma dim(gamma) conj(chi_gamma(x)) for a label set J."""
    labels = {c.label for c in chars}
    for c in chars:
        if c.conjugate_label not in labels:
            raise ValueError(
                f"label set is not self-conjugate: missing {c.conjugate_label!r}"
            )
    phi = sum(c.dimension * c.values.conj() for c in chars)
    if float(np.max(np.abs(phi.imag))) > 1e-9 * (1.0 + float(np.max(np.abs(phi)))):
        raise ValueError("projection weight function is not real-valued")
    return phi.real


def projection_weight_l1(group: SampledGroup, chars: list[IrrepCharacter]) -> float:
    """Quadrature L^1 norm of phi_J; bounds L(alpha_phi(a)) <= |phi|_1 L(a)."""
    return float(np.dot(group.weights, np.abs(projection_weight_fn(chars))))


def isotypic_project(action: UnitaryAction, chars: list[IrrepCharacter],
                     a: np.ndarray) -> np.ndarray:
    """Haar average against sum_gamma dim(gamma) conj(chi_gamma).

    Rejects non-self-conjugate label sets (the averaged weight must be
    real for the result to stay Hermitian).  Idempotent when the group
    sample is exact.
    """
    phi = projection_weight_fn(chars)
    moved = apply_all(action, a)
    coeff = action.group.weights * phi
    out = np.einsum("x,xab->ab", coeff, moved, optimize=True)
    out = (out + out.conj().T) / 2.0
    return out


def action_traces(action: UnitaryAction, space_basis: np.ndarray | None = None) -> np.ndarray:
    """Trace of alpha_x on the complexified coefficient space, for each x.

    For the full matrix space this is |tr U_x|^2.  For a proper subspace
    the trace is computed on a Hilbert-Schmidt orthonormal basis of the
    complex span (``space_basis``, shape (n, d, d)).
    """
    u = action.implementers
    if space_basis is None:
        tr = np.trace(u, axis1=1, axis2=2)
        return (tr * tr.conj()).real
    e = np.asarray(space_basis, dtype=complex)
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        moved = np.einsum("ab,kbc,dc->kad", u[i], e, u[i].conj(), optimize=True)
        out[i] = np.real(np.einsum("kab,kab->", e.conj(), moved, optimize=True))
    return out


def multiplicity(action: UnitaryAction, char: IrrepCharacter,
                 space_basis: np.ndarray | None = None,
                 integer_tol: float = DEFAULT_INTEGER_TOL,
                 traces: np.ndarray | None = None) -> int:
    """Multiplicity of an irreducible in the complexified action.

    Character orthogonality: quadrature of conj(chi) times the trace of
    alpha_x on the space.  The raw value must sit within ``integer_tol``
    of a nonnegative integer, else a :class:`QuadratureError` carrying
    the raw value is raised ("quadrature too coarse").
    """
    if traces is None:
        traces = action_traces(action, space_basis)
    raw = complex(np.dot(action.group.weights, char.values.conj() * traces))
    m = int(round(raw.real))
    if m < 0 or abs(raw - m) > integer_tol:
        raise QuadratureError(
            f"quadrature too coarse for multiplicity of {char.label!r}: raw={raw:.6f}",
            raw=raw,
        )
    return m


def ergodicity_check(action: UnitaryAction, space_basis: np.ndarray | None = None,
                     rank_tol: float = 0.1) -> bool:
    """True iff the fixed subspace of the Haar-average operator is the scalars.

    The averager is assembled on a Hilbert-Schmidt orthonormal basis of
    the (complexified) space; fixed directions are singular values of
    (P - I) below ``rank_tol``.
    """
    d = action.dim
    if space_basis is None:
        e = np.zeros((d * d, d, d), dtype=complex)
        e[np.arange(d * d), np.repeat(np.arange(d), d), np.tile(np.arange(d), d)] = 1.0
    else:
        e = np.asarray(space_basis, dtype=complex)
    n = e.shape[0]
    u = action.implementers
    w = action.group.weights
    avg = np.empty((n, d, d), dtype=complex)
    block = max(1, int(2_000_000 / max(1, u.shape[0] * d * d)))
    for lo in range(0, n, block):
        avg[lo:lo + block] = np.einsum("x,xab,kbc,xdc->kad", w, u, e[lo:lo + block],
                                       u.conj(), optimize=True)
    p = np.einsum("kab,lab->kl", e.conj(), avg, optimize=True)
    sv = np.linalg.svd(p - np.eye(n), compute_uv=False)
    fixed_dim = int(np.sum(sv < rank_tol))
    return fixed_dim == 1
