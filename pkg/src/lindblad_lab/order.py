"""Order structure on gradient matrices: cone membership and order norms."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import linalg as la
from .errors import NotGammaShaped, OutsideSpan
from .gradient import gradient_matrix

MAX_CONE_DIM = 4


@lru_cache(maxsize=4)
def _gradient_map(n: int) -> np.ndarray:
    """Matrix of the linear map S -> m_S (superoperators of M_n)."""
    cols = []
    for k in range(n**4):
        e = np.zeros(n**4, complex)
        e[k] = 1.0
        cols.append(gradient_matrix(e.reshape(n * n, n * n)).reshape(-1))
    out = np.array(cols).T
    out.setflags(write=False)
    return out


def recover_map(v, tol: float = 1e-9) -> np.ndarray:
    """A *-preserving superoperator M with M(I) = 0 and m_M = v.

    Raises NotGammaShaped when none exists.
    """
    v = la.require_hermitian(v, name="v")
    n = int(round(v.shape[0] ** (1.0 / 3.0)))
    if n**3 != v.shape[0]:
        raise NotGammaShaped(f"size {v.shape[0]} is not a cube")
    if n > MAX_CONE_DIM:
        raise NotGammaShaped(f"map recovery is limited to n <= {MAX_CONE_DIM}")
    j = _gradient_map(n)
    sol, *_ = np.linalg.lstsq(j, v.reshape(-1), rcond=None)
    m = sol.reshape(n * n, n * n)
    # M#(x) = M(x*)* solves the same equation for Hermitian v
    flip = np.array([la.dag(e).reshape(-1) for e in la.matrix_units(n)]).T
    m_sharp = np.conj(flip.T @ m @ flip)
    m = 0.5 * (m + m_sharp)
    scale = 1.0 + float(np.max(np.abs(v), initial=0.0))
    if np.max(np.abs(gradient_matrix(m) - v)) > tol * scale:
        raise NotGammaShaped("v is not the gradient matrix of any linear map")
    if np.max(np.abs(la.apply_superop(m, np.eye(n)))) > tol * scale:
        raise NotGammaShaped("every map with gradient matrix v has M(I) != 0")
    return m


def in_cone(v, tol: float | None = None) -> bool:
    recover_map(v)
    return la.is_psd(0.5 * (v + la.dag(v)), tol)


def _reduce(v, e, tol):
    v = la.require_hermitian(v, name="v")
    e = la.require_hermitian(e, name="e")
    w, q = np.linalg.eigh(e)
    wmax = float(np.max(np.abs(w), initial=0.0))
    keep = w > la.tolerances.rank * wmax if wmax > 0 else np.zeros(len(w), bool)
    ker = q[:, ~keep]
    vscale = 1.0 + float(np.max(np.abs(v), initial=0.0))
    if ker.shape[1] and np.max(np.abs(v @ ker)) > tol * vscale:
        raise OutsideSpan("v does not vanish on the kernel of e")
    p = q[:, keep]
    return la.dag(p) @ v @ p, w[keep]


def order_norm(v, e, tol: float = 1e-9) -> float:
    """inf { r >= 0 : -r e <= v <= r e }."""
    vr, w = _reduce(v, e, tol)
    if not len(w):
        return 0.0
    s = 1.0 / np.sqrt(w)
    white = s[:, None] * vr * s[None, :]
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (white + la.dag(white))))))


def order_norm_bisection(v, e, tol: float = 1e-9, steps: int = 80, psd_tol: float = 1e-14) -> float:
    """Same quantity by bisection on PSD tests of r e - v and r e + v."""
    vr, w = _reduce(v, e, tol)
    if not len(w):
        return 0.0
    er = np.diag(w)

    def ok(r):
        for sgn in (1.0, -1.0):
            ev = np.linalg.eigvalsh(r * er - sgn * vr)
            if ev[0] < -psd_tol * (1.0 + np.max(np.abs(ev))):
                return False
        return True

    hi = 1.0
    while not ok(hi):
        hi *= 2.0
    lo = 0.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
