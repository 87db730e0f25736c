"""Bundled matrix-algebra models of classical spaces.

Three families at finite scale:

* ``fuzzy_torus(q, p)`` - the q x q clock/shift algebra carrying the
  ergodic Z_q x Z_q translation action with the flat word length;
* ``fuzzy_sphere(two_j)`` - the full matrix algebra of a spin-j
  representation under SU(2) conjugation sampled on an Euler grid;
* ``commutative_cycle(m)`` - functions on m circle points as diagonal
  matrices under the cyclic shift, the classical recovery case.

``berezin_maps`` supplies the covariant symbol transform and its
adjoint for the sphere family; they are the raw material for the
sphere-to-sphere comparison maps used by the distance estimators.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import group_action as ga
from . import numerics as nm
from .cqms import Cqms, HermitianSpace, diagonal_space, full_matrix_space

PARAM_RANGES = {"q": (2, 12), "two_j": (1, 8), "m": (3, 64)}
DEFAULT_SU2_GRID = (14, 12, 14)

_grid_cache: dict = {}


def su2_grid(dims=DEFAULT_SU2_GRID) -> ga.Su2Grid:
    """Shared, cached SU(2) Euler grid so family members see one sample."""
    dims = tuple(int(x) for x in dims)
    if dims not in _grid_cache:
        _grid_cache[dims] = ga.su2_euler_grid(*dims)
    return _grid_cache[dims]


# ---------------------------------------------------------------------------
# fuzzy torus


def clock_and_shift(q: int, p: int = 1):
    """The q x q clock (step p) and shift pair with V U = e^{2 pi i p / q} U V
    for U the shift and V the clock."""
    omega = np.exp(2j * np.pi * p / q)
    clock = np.diag(omega ** np.arange(q))
    shift = np.zeros((q, q), dtype=complex)
    shift[np.arange(1, q), np.arange(q - 1)] = 1.0
    shift[0, q - 1] = 1.0
    return clock, shift


def torus_frequency_basis(q: int, p: int = 1) -> dict:
    """Unitaries u_w, w in Z_q^2, with u_w u_{w'} = exp(i pi theta (w1 w2' - w2 w1')) u_{w+w'}.

    Convention note: the defining q x q pair has commutation constant
    e^{2 pi i p / q}, which is the *full interchange* phase of u_(1,0)
    and u_(0,1).  The antisymmetric deformation parameter entering the
    half-phase cocycle above is therefore theta = p/q (the interchange
    constant e^{2 pi i theta} double-counts the half phase e^{i pi theta}).
    """
    if math.gcd(p, q) != 1:
        raise ValueError(
            f"p={p} and q={q} must be coprime: otherwise the frequency basis "
            "degenerates and the characters of Z_q^2 cannot all appear with "
            "multiplicity one")
    clock, shift = clock_and_shift(q, p)
    nu = np.exp(1j * np.pi * p / q)
    basis = {}
    cpow = [np.linalg.matrix_power(clock, k) for k in range(q)]
    spow = [np.linalg.matrix_power(shift, k) for k in range(q)]
    for w1 in range(q):
        for w2 in range(q):
            basis[(w1, w2)] = nu ** (-w1 * w2) * cpow[w1] @ spow[w2]
    return basis


def fuzzy_torus(q: int, p: int = 1) -> Cqms:
    """Clock/shift fuzzy torus at level q with deformation step p.

    The exact subgroup Z_q x Z_q of the 2-torus acts by conjugation so
    that the frequency unitary u_w is scaled by the character <w, x>;
    the action is ergodic and every character has multiplicity one.
    """
    if q < 2:
        raise ValueError("need q >= 2")
    freq = torus_frequency_basis(q, p)
    group = ga.torus_group(q, n=2)

    # implementers: conjugation by clock/shift monomials chosen so that
    # u_w picks up exactly exp(2 pi i (k1 w1 + k2 w2) / q)
    plain_clock, shift = clock_and_shift(q, 1)
    p_inv = pow(p, -1, q)
    cpow = [np.linalg.matrix_power(plain_clock, k) for k in range(q)]
    spow = [np.linalg.matrix_power(shift, k) for k in range(q)]
    implementers = np.empty((q * q, q, q), dtype=complex)
    for idx, (k1, k2) in enumerate(group.elements):
        implementers[idx] = cpow[k2] @ spow[(-p_inv * k1) % q]

    herm = []
    for w in sorted(freq):
        u = freq[w]
        herm.append((u + u.conj().T) / 2.0)
        herm.append((u - u.conj().T) / 2j)
    space = HermitianSpace(basis=np.array(herm))
    action = ga.UnitaryAction(group=group, implementers=implementers)
    return Cqms(space=space, action=action, name=f"torus(q={q},p={p})",
                basis_labels=dict(freq))


def torus_characters(q: int) -> list:
    return ga.torus_characters(q, n=2)


# ---------------------------------------------------------------------------
# fuzzy sphere


def spin_matrices(two_j: int):
    """Angular momentum matrices (Jx, Jy, Jz) for spin j = two_j / 2,
    in the eigenbasis of Jz ordered m = j, j-1, ..., -j."""
    j = two_j / 2.0
    d = two_j + 1
    m = j - np.arange(d)
    jz = np.diag(m).astype(complex)
    jp = np.zeros((d, d), dtype=complex)
    for i in range(1, d):
        mm = m[i]
        jp[i - 1, i] = math.sqrt(j * (j + 1) - mm * (mm + 1))
    jm = jp.conj().T
    jx = (jp + jm) / 2.0
    jy = (jp - jm) / 2j
    return jx, jy, jz


def spherical_basis(two_j: int) -> dict:
    """Spherical tensor operators T_{l m} on the spin-j space, l = 0..2j,
    Hilbert-Schmidt normalized; built by lowering from T_{l l} ~ (J+)^l.
    They give the matched (l, m)-labeled basis for sphere sections."""
    jx, jy, _ = spin_matrices(two_j)
    jp = jx + 1j * jy
    jm = jx - 1j * jy
    out = {}
    for l in range(0, two_j + 1):
        t = np.linalg.matrix_power(jp, l).astype(complex)
        t = t / nm.hs_norm(t) if nm.hs_norm(t) > 0 else t
        out[(l, l)] = t
        for m in range(l, -l, -1):
            c = math.sqrt(l * (l + 1) - m * (m - 1))
            t = (jm @ out[(l, m)] - out[(l, m)] @ jm) / c
            norm = nm.hs_norm(t)
            out[(l, m - 1)] = t / norm
    return out


def su2_implementers(two_j: int, grid: ga.Su2Grid) -> np.ndarray:
    """Spin-j Euler rotations for every grid element; inverse pairs are
    exact daggers of their partners."""
    jx, jy, jz = spin_matrices(two_j)
    d = two_j + 1
    wy, vy = np.linalg.eigh(jy)
    mdiag = np.real(np.diag(jz))
    n = grid.group.size
    base = (n - 1) // 2
    euler = grid.euler[1:1 + base]
    a, b, g = euler[:, 0], euler[:, 1], euler[:, 2]
    mid = np.einsum("ab,xb,cb->xac", vy, np.exp(-1j * np.outer(b, wy)), vy.conj(),
                    optimize=True)
    us = np.exp(-1j * np.outer(a, mdiag))[:, :, None] * mid \
        * np.exp(-1j * np.outer(g, mdiag))[:, None, :]
    out = np.empty((n, d, d), dtype=complex)
    out[0] = np.eye(d)
    out[1:1 + base] = us
    out[1 + base:] = np.swapaxes(us.conj(), 1, 2)
    return out


def fuzzy_sphere(two_j: int, grid_dims=DEFAULT_SU2_GRID) -> Cqms:
    """Full matrix algebra of spin j = two_j/2 under sampled SU(2) conjugation.

    The length function is the geodesic angle on the unit-quaternion
    sphere (half the space-rotation angle), the conventional bi-invariant
    choice.  Every result downstream carries the grid descriptor.
    """
    if two_j < 1:
        raise ValueError("need two_j >= 1")
    grid = su2_grid(grid_dims)
    impl = su2_implementers(two_j, grid)
    action = ga.UnitaryAction(group=grid.group, implementers=impl)
    space = full_matrix_space(two_j + 1)
    return Cqms(space=space, action=action,
                name=f"sphere(two_j={two_j},grid={'x'.join(str(x) for x in grid_dims)})",
                basis_labels=spherical_basis(two_j))


def sphere_characters(two_j: int, grid_dims=DEFAULT_SU2_GRID, max_two_l: int = None) -> list:
    """SU(2) characters on the shared grid for integer spins l = 0..max."""
    grid = su2_grid(grid_dims)
    if max_two_l is None:
        max_two_l = 2 * two_j + 2
    return ga.su2_characters(grid, [2 * l for l in range(0, max_two_l // 2 + 1)])


# ---------------------------------------------------------------------------
# commutative cycle


def commutative_cycle(m: int) -> Cqms:
    """Functions on m equally spaced circle points, as diagonal matrices
    under the cyclic translation action with the arc length."""
    if m < 3:
        raise ValueError("need m >= 3")
    group = ga.cyclic_group(m)
    shift = np.zeros((m, m), dtype=complex)
    shift[np.arange(1, m) % m, np.arange(m - 1)] = 1.0
    shift[0, m - 1] = 1.0
    implementers = np.array([np.linalg.matrix_power(shift, k) for k in range(m)])
    space = diagonal_space(m)
    labels = {("pt", j): space.basis[j] for j in range(m)}
    action = ga.UnitaryAction(group=group, implementers=implementers)
    return Cqms(space=space, action=action, name=f"cycle(m={m})", basis_labels=labels)


def cycle_characters(m: int) -> list:
    return ga.cyclic_characters(m)


def scalar_cqms(reference: Cqms) -> Cqms:
    """The one-dimensional space R*I inside the same ambient matrices,
    carrying the same (now trivial) action.  The degenerate fibre of the
    non-convergent family."""
    d = reference.dim
    space = HermitianSpace(basis=np.eye(d, dtype=complex)[None])
    return Cqms(space=space, action=reference.action,
                name=f"scalars(d={d})", basis_labels={"unit": np.eye(d, dtype=complex)})


# ---------------------------------------------------------------------------
# Berezin symbols


@dataclass
class BerezinMaps:
    """Covariant symbol and its adjoint for one spin level.

    ``symbol`` sends a matrix to the function x -> tr(a alpha_x(P)) on
    the sampled group; ``cosymbol`` is its adjoint for the normalized
    trace pairing on matrices and the quadrature L^2 pairing on
    functions.  The adjoint is unital and positive up to quadrature
    defects, which ``checks`` reports rather than hides.
    """

    two_j: int
    grid: ga.Su2Grid
    coherent: np.ndarray           # (size, d, d): alpha_x(P)
    projector: np.ndarray

    def symbol(self, a: np.ndarray) -> np.ndarray:
        return np.einsum("ab,xba->x", np.asarray(a, dtype=complex), self.coherent,
                         optimize=True)

    def cosymbol(self, f: np.ndarray) -> np.ndarray:
        d = self.projector.shape[0]
        w = self.grid.group.weights
        return d * np.einsum("x,x,xab->ab", w, np.asarray(f, dtype=complex), self.coherent,
                             optimize=True)

    def checks(self, rng: np.random.Generator | None = None, samples: int = 6) -> dict:
        rng = rng or np.random.default_rng(0)
        d = self.projector.shape[0]
        unital_defect = nm.op_norm(self.cosymbol(np.ones(self.grid.group.size)) - np.eye(d))
        pos = []
        for _ in range(samples):
            f = rng.random(self.grid.group.size)
            w = np.linalg.eigvalsh(self.cosymbol(f))
            pos.append(float(w[0]))
        rank_mat = []
        basis = full_matrix_space(d).ortho
        for e in basis:
            rank_mat.append(self.symbol(e))
        sv = np.linalg.svd(np.array(rank_mat), compute_uv=False)
        rank = int(np.sum(sv > 1e-9 * sv[0]))
        return {
            "unital_defect": float(unital_defect),
            "positivity_min_eig": min(pos),
            "symbol_rank": rank,
            "full_rank": rank == d * d,
        }

    def equivariance_defect(self, implementers: np.ndarray, a: np.ndarray,
                            x_indices) -> float:
        """max over sampled x of |cosymbol(symbol(alpha_x a)) - alpha_x cosymbol(symbol a)|;
        the translated symbol is evaluated through the transformed matrix, so
        no off-grid function values are needed."""
        worst = 0.0
        s0 = self.cosymbol(self.symbol(a))
        for x in x_indices:
            u = implementers[x]
            ax = u @ a @ u.conj().T
            lhs = self.cosymbol(self.symbol(ax))
            rhs = u @ s0 @ u.conj().T
            worst = max(worst, nm.op_norm(lhs - rhs))
        return worst


def berezin_maps(two_j: int, grid_dims=DEFAULT_SU2_GRID) -> BerezinMaps:
    grid = su2_grid(grid_dims)
    impl = su2_implementers(two_j, grid)
    d = two_j + 1
    proj = np.zeros((d, d), dtype=complex)
    proj[0, 0] = 1.0          # highest weight m = j
    coherent = np.einsum("xab,bc,xdc->xad", impl, proj, impl.conj(), optimize=True)
    return BerezinMaps(two_j=two_j, grid=grid, coherent=coherent, projector=proj)


# ---------------------------------------------------------------------------
# descriptors (the scenario-file unit)


@dataclass(frozen=True)
class ExampleDescriptor:
    """Named, parameterized, seedable recipe for one bundled example."""

    family: str                    # "torus" | "sphere" | "cycle" | "scalars_of"
    params: tuple                  # sorted (key, value) pairs
    seed: int = 0

    @staticmethod
    def make(family: str, seed: int = 0, **params) -> "ExampleDescriptor":
        return ExampleDescriptor(family=family, seed=seed,
                                 params=tuple(sorted(params.items())))

    def as_dict(self) -> dict:
        return {"family": self.family, "seed": self.seed, **dict(self.params)}

    def validate(self) -> None:
        p = dict(self.params)
        if self.family == "torus":
            q = int(p.get("q", 0))
            lo, hi = PARAM_RANGES["q"]
            if not lo <= q <= hi:
                raise ValueError(f"torus level q={q} outside documented range [{lo},{hi}]")
        elif self.family == "sphere":
            tj = int(p.get("two_j", 0))
            lo, hi = PARAM_RANGES["two_j"]
            if not lo <= tj <= hi:
                raise ValueError(f"sphere two_j={tj} outside documented range [{lo},{hi}]")
        elif self.family == "cycle":
            m = int(p.get("m", 0))
            lo, hi = PARAM_RANGES["m"]
            if not lo <= m <= hi:
                raise ValueError(f"cycle m={m} outside documented range [{lo},{hi}]")
        else:
            raise ValueError(f"unknown example family {self.family!r}")

    def build(self) -> Cqms:
        self.validate()
        p = dict(self.params)
        if self.family == "torus":
            return fuzzy_torus(int(p["q"]), int(p.get("p", 1)))
        if self.family == "sphere":
            grid = p.get("grid", DEFAULT_SU2_GRID)
            if isinstance(grid, str):
                grid = tuple(int(x) for x in grid.split("x"))
            return fuzzy_sphere(int(p["two_j"]), grid_dims=grid)
        if self.family == "cycle":
            return commutative_cycle(int(p["m"]))
        raise ValueError(f"unknown example family {self.family!r}")
