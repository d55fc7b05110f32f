"""Dense complex linear algebra shared by every other module.

Matrices are plain ``numpy`` complex arrays. Superoperators act on
row-major vectorisations, ``vec(x) = x.reshape(-1)``, so that
``vec(a @ x @ b) == kron(a, b.T) @ vec(x)``.

Two trace conventions appear throughout: ``Tr`` (the ordinary trace) and
``tau = Tr / n`` (the normalised trace). Functions say which one they use.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, InputError, NotHermitian, SigmaNotStrict


@dataclass
class Tolerances:
    """Global numeric tolerances (relative unless stated otherwise)."""

    hermitian: float = 1e-9
    psd: float = 1e-9
    trace: float = 1e-9
    # eigenvalues closer than this fraction of the largest one are merged
    coincident: float = 1e-12
    # singular values below rank * max are treated as zero
    rank: float = 1e-10


tolerances = Tolerances()


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-dimensional, got shape {a.shape}")
    return a


def as_square(m, name: str = "matrix") -> np.ndarray:
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    return a


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_residual(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - dag(m)), initial=0.0))


def is_hermitian(m, tol: float | None = None) -> bool:
    a = as_square(m)
    tol = tolerances.hermitian if tol is None else tol
    return hermitian_residual(a) <= tol * (1.0 + float(np.max(np.abs(a), initial=0.0)))


def require_hermitian(m, tol: float | None = None, name: str = "matrix") -> np.ndarray:
    a = as_square(m, name)
    if not is_hermitian(a, tol):
        raise NotHermitian(f"{name} is not Hermitian (residual {hermitian_residual(a):.3e})")
    return 0.5 * (a + dag(a))


def hermitian_eig(m, tol: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns ascending real eigenvalues ``w`` and a unitary ``u`` with
    ``m = u @ diag(w) @ u^dagger``.
    """
    a = require_hermitian(m, tol)
    w, u = np.linalg.eigh(a)
    return w, u


def min_eig_margin(m, tol: float | None = None) -> tuple[float, float]:
    """Smallest eigenvalue and the PSD threshold it is compared against."""
    w, _ = hermitian_eig(m)
    tol = tolerances.psd if tol is None else tol
    if w.size == 0:
        return 0.0, 0.0
    return float(w[0]), -tol * (1.0 + float(np.max(np.abs(w))))


def is_psd(m, tol: float | None = None) -> bool:
    """True iff ``min eig >= -tol * (1 + max |eig|)``."""
    lo, threshold = min_eig_margin(m, tol)
    return lo >= threshold


def mat_func(m, f, tol: float | None = None) -> np.ndarray:
    """Apply a real function to a Hermitian matrix through its spectrum."""
    w, u = hermitian_eig(m, tol)
    return (u * f(w)) @ dag(u)


def kron(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, as_matrix(op))
    return out


def partial_trace(m, dims: Sequence[int], trace_out: int | Sequence[int]) -> np.ndarray:
    """Trace out the listed tensor factors of ``m`` acting on ``prod(dims)``."""
    a = as_square(m)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if a.shape[0] != total:
        raise DimensionMismatch(f"matrix of size {a.shape[0]} does not factor as {dims}")
    if isinstance(trace_out, (int, np.integer)):
        trace_out = [int(trace_out)]
    drop = sorted(set(int(i) for i in trace_out))
    if any(i < 0 or i >= len(dims) for i in drop):
        raise DimensionMismatch(f"subsystem index out of range for dims {dims}")
    t = a.reshape(dims + dims)
    # trace highest index first so earlier axis numbers stay valid
    for i in reversed(drop):
        t = np.trace(t, axis1=i, axis2=i + t.ndim // 2)
    keep = [d for i, d in enumerate(dims) if i not in drop]
    size = int(np.prod(keep)) if keep else 1
    return t.reshape(size, size)


def trace(m) -> complex:
    return complex(np.trace(as_square(m)))


def tau(m) -> complex:
    a = as_square(m)
    return complex(np.trace(a)) / a.shape[0]


def matrix_units(n: int) -> list[np.ndarray]:
    """Matrix units e_rs in row-major order (index r * n + s)."""
    units = []
    for r in range(n):
        for s in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[r, s] = 1.0
            units.append(e)
    return units


def superop_from_pair(a, b) -> np.ndarray:
    """Matrix of ``x -> a @ x @ b`` on row-major vectorisation."""
    return np.kron(as_matrix(a), as_matrix(b).T)


def apply_superop(s: np.ndarray, x) -> np.ndarray:
    x = as_square(x)
    n = x.shape[0]
    if s.shape != (n * n, n * n):
        raise DimensionMismatch(f"superoperator of shape {s.shape} cannot act on {n}x{n}")
    return (s @ x.reshape(-1)).reshape(n, n)


def superop_from_function(f, n: int) -> np.ndarray:
    """Matrix of a linear map given as a callable, built column by column."""
    cols = [np.asarray(f(e), dtype=complex).reshape(-1) for e in matrix_units(n)]
    return np.stack(cols, axis=1)


def nullspace(a, rtol: float | None = None, atol: float = 0.0) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``a``.

    Singular values up to max(rtol * s_max, atol) count as zero.
    """
    a = as_matrix(a)
    rtol = tolerances.rank if rtol is None else rtol
    if a.shape[0] == 0:
        return np.eye(a.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(a)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > max(rtol * smax, atol)))
    return dag(vh[rank:])


def range_basis(a, rtol: float | None = None) -> np.ndarray:
    a = as_matrix(a)
    rtol = tolerances.rank if rtol is None else rtol
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    return u[:, s > rtol * s[0]]


def check_density(rho, strict: bool = False, name: str = "rho") -> np.ndarray:
    """Validate a density matrix and return its Hermitian part."""
    a = require_hermitian(rho, name=name)
    w = np.linalg.eigvalsh(a)
    if abs(float(np.sum(w)) - 1.0) > tolerances.trace:
        raise InputError(f"{name} has trace {np.sum(w):.12g}, expected 1")
    if w[0] < -tolerances.psd:
        raise InputError(f"{name} has negative eigenvalue {w[0]:.3e}")
    if strict and w[0] <= tolerances.psd:
        raise SigmaNotStrict(f"{name} is not positive definite (min eigenvalue {w[0]:.3e})")
    return a


def log_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Logarithmic mean (a - b) / (log a - log b), equal to ``a`` when a == b."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)), 1e-300)
    close = np.abs(a - b) < tolerances.coincident * scale
    out = np.empty(a.shape)
    out[close] = 0.5 * (a[close] + b[close])
    diff = ~close
    # b * x / log1p(x) with x = (a - b) / b keeps precision for nearby a, b
    x = (a[diff] - b[diff]) / b[diff]
    out[diff] = b[diff] * x / np.log1p(x)
    return out


class InnerProductKind(enum.Enum):
    HS = "hs"
    GNS = "gns"
    KMS = "kms"
    BKM = "bkm"


def inner_product(x, y, kind: InnerProductKind | str = "hs", sigma=None) -> complex:
    """Inner products on M_n.

    ``hs`` is the normalised Hilbert-Schmidt product ``tau(x* y)``; the
    state-weighted ones use the full trace:

    * ``gns``: ``Tr(sigma x* y)``
    * ``kms``: ``Tr(sigma^1/2 x* sigma^1/2 y)``
    * ``bkm``: ``int_0^1 Tr(sigma^(1-s) x* sigma^s y) ds``, evaluated in the
      eigenbasis of sigma with the logarithmic-mean kernel.
    """
    kind = InnerProductKind(kind) if not isinstance(kind, InnerProductKind) else kind
    x = as_square(x, "x")
    y = as_square(y, "y")
    if x.shape != y.shape:
        raise DimensionMismatch(f"shapes {x.shape} and {y.shape} differ")
    if kind is InnerProductKind.HS:
        return complex(np.vdot(x, y)) / x.shape[0]
    if sigma is None:
        raise SigmaNotStrict(f"{kind.value} inner product needs a strict state sigma")
    sigma = check_density(sigma, strict=True, name="sigma")
    if sigma.shape != x.shape:
        raise DimensionMismatch("sigma and operands differ in dimension")
    if kind is InnerProductKind.GNS:
        return complex(np.trace(sigma @ dag(x) @ y))
    s, q = np.linalg.eigh(sigma)
    xt = dag(q) @ x @ q
    yt = dag(q) @ y @ q
    if kind is InnerProductKind.KMS:
        r = np.sqrt(s)
        weight = np.outer(r, r)
    else:
        # sum_uv Lambda(s_u, s_v) conj(x_vu) y_vu
        weight = log_mean(s[:, None], s[None, :])
    return complex(np.sum(weight * np.conj(xt) * yt))


def bkm_gram(sigma) -> np.ndarray:
    """Matrix G with BKM(x, y) = vec(x)^H G vec(y) (row-major vec)."""
    sigma = check_density(sigma, strict=True, name="sigma")
    s, q = np.linalg.eigh(sigma)
    n = len(s)
    weight = log_mean(s[:, None], s[None, :]).reshape(-1)
    # vec(q^H x q) = kron(q^H, q^T) vec(x)
    t = np.kron(dag(q), q.T)
    return dag(t) @ (weight[:, None] * t)


def gns_gram(sigma) -> np.ndarray:
    """Matrix G with Tr(sigma x* y) = vec(x)^H G vec(y)."""
    sigma = as_square(sigma)
    n = sigma.shape[0]
    return np.kron(np.eye(n), sigma.T)


def orthonormalize_traceless(ops: Iterable, rtol: float | None = None,
                             ref: float | None = None) -> list[np.ndarray]:
    """tau-orthonormal, traceless basis of span{ops, I} minus the identity direction.

    Modified Gram-Schmidt with re-orthogonalisation; directions whose
    residual norm falls below ``rtol`` times ``ref`` (default: the largest
    input norm) are dropped.
    """
    ops = [as_square(o) for o in ops]
    if not ops:
        return []
    n = ops[0].shape[0]
    if any(o.shape != (n, n) for o in ops):
        raise DimensionMismatch("all operators must share one dimension")
    rtol = 1e-10 if rtol is None else rtol
    ident = np.eye(n, dtype=complex)
    scale = max(np.sqrt(abs(inner_product(o, o))) for o in ops)
    if ref is not None:
        scale = max(scale, ref)
    if scale == 0:
        return []
    basis: list[np.ndarray] = []
    for o in ops:
        v = o - tau(o) * ident
        for _ in range(2):
            for b in basis:
                v = v - inner_product(b, v) * b
        norm = np.sqrt(abs(inner_product(v, v)))
        if norm > rtol * scale:
            basis.append(v / norm)
    return basis


def hermitian_basis(r: int, include_identity: bool = True) -> list[np.ndarray]:
    """Generalised Gell-Mann matrices of M_r scaled to tau-norm 1.

    Order: identity (optional), diagonal, symmetric, antisymmetric pairs.
    """
    basis = []
    if include_identity:
        basis.append(np.eye(r, dtype=complex))
    for l in range(1, r):
        d = np.zeros(r)
        d[:l] = 1.0
        d[l] = -l
        basis.append(np.diag(d).astype(complex))
    for j in range(r):
        for k in range(j + 1, r):
            sym = np.zeros((r, r), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            basis.append(sym)
            anti = np.zeros((r, r), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            basis.append(anti)
    return [b / np.sqrt(inner_product(b, b).real) for b in basis]


# Pauli matrices and two-level ladder operators, basis order (|e>, |g>):
# sigma_minus |e> = |g>, so sigma_plus sigma_minus = |e><e| = e_11.
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()


def matrix_to_json(m) -> dict:
    a = as_matrix(m)
    flat = a.reshape(-1)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "re": [float(v) for v in flat.real],
        "im": [float(v) for v in flat.imag],
    }


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", [0.0] * len(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad matrix encoding: {exc}") from exc
    if re.size != rows * cols or im.size != rows * cols:
        raise DimensionMismatch(
            f"matrix encoding has {re.size}/{im.size} entries, expected {rows * cols}"
        )
    return (re + 1j * im).reshape(rows, cols)
