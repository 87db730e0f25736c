"""Dense Hermitian linear algebra primitives used by every other module.

Matrices are plain complex numpy arrays.  Everything here is pure and
safe for concurrent reads; nothing mutates its input.

Target scale is desk-size: dimensions up to a few dozen.  The
eigensolver is LAPACK's Hermitian driver (`numpy.linalg.eigh`), which is
deterministic on a fixed platform and fast enough that the inner loops
elsewhere (seminorm sups, net construction) can batch thousands of
small eigenproblems per call.
"""

import numpy as np

# Structural checks (Hermiticity, unitarity) at 1e-10, numerical
# equalities at 1e-8; both overridable per call.
STRUCTURAL_TOL = 1e-10
NUMERIC_TOL = 1e-8


class NumericsError(Exception):
    """Raised when a linear-algebra primitive cannot certify its output.

    Carries the offending residual in ``residual`` when available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def is_hermitian(a: np.ndarray, tol: float = STRUCTURAL_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    if not np.all(np.isfinite(a.view(float))):
        return False
    return bool(np.max(np.abs(a - a.conj().T)) <= tol * (1.0 + np.max(np.abs(a))))


def check_hermitian(a: np.ndarray, tol: float = STRUCTURAL_TOL) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a, tol):
        dev = float(np.max(np.abs(a - a.conj().T))) if a.ndim == 2 else float("nan")
        raise NumericsError(f"matrix is not Hermitian within {tol:g}", residual=dev)
    return a


def is_unitary(u: np.ndarray, tol: float = STRUCTURAL_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    d = u.shape[0]
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(d))) <= tol)


def hermitian_eig(a: np.ndarray, tol: float = 1e-9):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, vectors)`` with eigenvalues ascending and
    ``a = vectors @ diag(eigenvalues) @ vectors.conj().T`` within
    ``tol * (1 + op_norm(a))``.  Raises :class:`NumericsError` with the
    reconstruction residual if the solver fails to certify.
    """
    a = check_hermitian(a)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # non-convergence in LAPACK
        raise NumericsError(f"eigensolver did not converge: {exc}") from exc
    residual = float(np.max(np.abs((v * w) @ v.conj().T - a)))
    scale = 1.0 + (float(np.max(np.abs(w))) if w.size else 0.0)
    if residual > tol * scale:
        raise NumericsError(
            f"eigendecomposition residual {residual:.3e} exceeds {tol:g}*(1+norm)",
            residual=residual,
        )
    return w, v


def op_norm(a: np.ndarray) -> float:
    """Operator norm of a Hermitian matrix: max |eigenvalue|."""
    a = np.asarray(a, dtype=complex)
    if a.shape[0] == 0:
        return 0.0
    w = np.linalg.eigvalsh(a)
    return float(np.max(np.abs(w)))


def op_norms(stack: np.ndarray) -> np.ndarray:
    """Operator norms of a stack of Hermitian matrices, shape (..., d, d)."""
    stack = np.asarray(stack, dtype=complex)
    if stack.size == 0:
        return np.zeros(stack.shape[:-2])
    w = np.linalg.eigvalsh(stack)
    return np.max(np.abs(w), axis=-1)


def quotient_norm(a: np.ndarray) -> float:
    """Distance from ``a`` to the real multiples of the identity.

    For Hermitian ``a`` the minimizing shift is the midpoint of the
    spectrum, so the value is (lambda_max - lambda_min) / 2.
    """
    a = np.asarray(a, dtype=complex)
    w = np.linalg.eigvalsh(a)
    return float(w[-1] - w[0]) / 2.0


def quotient_norms(stack: np.ndarray) -> np.ndarray:
    stack = np.asarray(stack, dtype=complex)
    if stack.size == 0:
        return np.zeros(stack.shape[:-2])
    w = np.linalg.eigvalsh(stack)
    return (w[..., -1] - w[..., 0]) / 2.0


def matrix_exp_skew(h: np.ndarray, t: float, tol: float = 1e-9) -> np.ndarray:
    """exp(i*t*h) for Hermitian h, via eigendecomposition.

    The result is unitary within ``tol`` (max-entry of U U^dagger - I).
    """
    w, v = hermitian_eig(h)
    u = (v * np.exp(1j * t * w)) @ v.conj().T
    defect = float(np.max(np.abs(u @ u.conj().T - np.eye(h.shape[0]))))
    if defect > tol:
        raise NumericsError(f"exp(i t h) unitarity defect {defect:.3e}", residual=defect)
    return u


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product tr(a^dagger b)."""
    return complex(np.tensordot(np.asarray(a).conj(), np.asarray(b), axes=2))


def hs_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (g + g.conj().T) / 2.0
