"""Gradient forms, the big matrices m_L and D_L, and CP-order comparison."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg as la
from .errors import DimensionMismatch, MethodsDisagree, SpanNotIncluded
from .generator import (
    GKSForm,
    LindbladGenerator,
    StandardForm,
    superoperator_matrix,
    to_standard_form,
)

SPAN_TOL = 1e-8
BISECTION_STEPS = 60
AGREEMENT_TOL = 1e-6


def _superop(L) -> np.ndarray:
    if isinstance(L, (LindbladGenerator, GKSForm, StandardForm)):
        return superoperator_matrix(L)
    return la.as_square(L, "superoperator")


def gradient_form(L, x, y) -> np.ndarray:
    """Gamma_L(x, y) = L(x* y) - x* L(y) - L(x*) y."""
    s = _superop(L)
    x, y = la.as_square(x), la.as_square(y)
    n = x.shape[0]
    if y.shape != x.shape or s.shape[0] != n * n:
        raise DimensionMismatch("operands and generator have different dimensions")
    xs = la.dag(x)

    def f(z):
        return la.apply_superop(s, z)

    return f(xs @ y) - xs @ f(y) - f(xs) @ y


def gradient_matrix(L) -> np.ndarray:
    """Block matrix (Gamma_L(e_rs, e_tv))_{rs,tv}, of size n^3 x n^3.

    Row index ((r*n + s)*n + i), column index ((t*n + v)*n + j).
    """
    s = _superop(L)
    n = int(round(np.sqrt(s.shape[0])))
    # img[a, b] = L(e_ab)
    img = s.T.reshape(n, n, n, n)
    eye = np.eye(n)
    # Gamma(e_rs, e_tv) = d_rt L(e_sv) - e_sr L(e_tv) - L(e_sr) e_tv
    g = np.einsum("rt,svij->rsitvj", eye, img)
    g = g - np.einsum("is,tvrj->rsitvj", eye, img)
    g = g - np.einsum("srit,vj->rsitvj", img, eye)
    return g.reshape(n**3, n**3)


def derivation_matrix(sf) -> np.ndarray:
    """Block matrix ([V_k, e_rs])_{k, rs} of size (m n) x n^3 with D* D = m_L."""
    if not isinstance(sf, StandardForm):
        sf = to_standard_form(sf)
    n = sf.dim
    jumps = sf.jumps
    d = np.zeros((len(jumps), n, n * n, n), complex)
    for k, v in enumerate(jumps):
        for idx, e in enumerate(la.matrix_units(n)):
            d[k, :, idx, :] = v @ e - e @ v
    return d.reshape(len(jumps) * n, n**3)


@dataclass
class ComparisonResult:
    holds: bool
    optimal_c: float | None = None
    coeff_matrix: np.ndarray | None = None
    residual: float | None = None
    method: str = "span"
    minimal: bool = True
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "holds": self.holds,
            "optimal_c": self.optimal_c,
            "residual": self.residual,
            "method": self.method,
            "minimal": self.minimal,
        }
        if self.coeff_matrix is not None:
            out["coeff_matrix"] = la.matrix_to_json(self.coeff_matrix)
        out.update(self.details)
        return out


def span_coefficients(xs: Sequence[np.ndarray], ys: Sequence[np.ndarray]):
    """Least-squares A with x_i = sum_j A_ij y_j; returns (A, relative residual)."""
    if not xs:
        return np.zeros((0, len(ys)), complex), 0.0
    xv = np.array([np.asarray(x).reshape(-1) for x in xs]).T
    if not ys:
        return np.zeros((len(xs), 0), complex), 1.0
    yv = np.array([np.asarray(y).reshape(-1) for y in ys]).T
    coef, *_ = np.linalg.lstsq(yv, xv, rcond=None)
    res = np.linalg.norm(yv @ coef - xv, axis=0)
    rel = float(np.max(res / np.maximum(np.linalg.norm(xv, axis=0), 1e-300)))
    return coef.T, rel


def span_compare(xs, ys, span_tol: float = SPAN_TOL) -> ComparisonResult:
    a, rel = span_coefficients(xs, ys)
    if rel > span_tol:
        return ComparisonResult(False, None, a, rel, "span")
    c = float(np.linalg.eigvalsh(la.dag(a) @ a)[-1]) if a.size else 0.0
    return ComparisonResult(True, c, a, rel, "span")


def bisection_compare(m: np.ndarray, mp: np.ndarray, psd_tol: float = 1e-12,
                      steps: int = BISECTION_STEPS) -> ComparisonResult:
    """Smallest C with m <= C mp, by bisection on the range of mp."""
    m = 0.5 * (m + la.dag(m))
    mp = 0.5 * (mp + la.dag(mp))
    w, q = np.linalg.eigh(mp)
    wmax = float(max(np.max(np.abs(w), initial=0.0), 0.0))
    mscale = float(np.max(np.abs(np.linalg.eigvalsh(m)), initial=0.0)) if m.size else 0.0
    keep = w > la.tolerances.rank * wmax if wmax > 0 else np.zeros(len(w), bool)
    ker = q[:, ~keep]
    if ker.shape[1]:
        leak = float(np.max(np.abs(np.linalg.eigvalsh(la.dag(ker) @ m @ ker)), initial=0.0))
        if leak > 1e-9 * (1.0 + mscale):
            return ComparisonResult(False, None, None, leak, "psd_bisection")
    if mscale == 0.0:
        return ComparisonResult(True, 0.0, None, 0.0, "psd_bisection")
    p = q[:, keep]
    mr = la.dag(p) @ m @ p
    mpr = np.diag(w[keep])
    lo, hi = 0.0, 2.0 * mscale / float(np.min(w[keep]))

    def ok(c):
        ev = np.linalg.eigvalsh(c * mpr - mr)
        return ev[0] >= -psd_tol * (1.0 + np.max(np.abs(ev)))

    if not ok(hi):
        return ComparisonResult(False, None, None, None, "psd_bisection")
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return ComparisonResult(True, hi, None, None, "psd_bisection")


def _traceless_jumps(L, canonicalize: bool) -> list[np.ndarray]:
    if canonicalize:
        return to_standard_form(L).jumps
    gen = L if isinstance(L, LindbladGenerator) else to_standard_form(L).generator()
    return [k - la.tau(k) * np.eye(gen.dim) for k in gen.kraus()]


def _combine(span: ComparisonResult, bis: ComparisonResult, rel_tol: float) -> ComparisonResult:
    if span.holds != bis.holds:
        raise MethodsDisagree(
            f"span route says {span.holds}, bisection route says {bis.holds}"
        )
    if span.holds:
        a, b = span.optimal_c, bis.optimal_c
        if abs(a - b) > rel_tol * max(abs(a), abs(b), 1e-300) and abs(a - b) > 1e-12:
            raise MethodsDisagree(f"optimal constants {a!r} and {b!r} differ")
    return ComparisonResult(
        span.holds, span.optimal_c, span.coeff_matrix, span.residual, "both",
        details={"bisection_c": bis.optimal_c},
    )


def compare(L, Lp, mode: str = "span", span_tol: float = SPAN_TOL,
            canonicalize: bool = True, raise_on_fail: bool = False) -> ComparisonResult:
    """Decide Gamma_L <= C Gamma_L' as CP maps and find the optimal C.

    ``mode`` is ``span``, ``psd_bisection`` or ``both``. Without
    canonicalisation the span constant is valid but possibly not minimal.
    """
    if mode not in ("span", "psd_bisection", "both"):
        raise ValueError(f"unknown mode {mode!r}")
    xs = _traceless_jumps(L, canonicalize)
    ys = _traceless_jumps(Lp, canonicalize)
    if xs and ys and xs[0].shape != ys[0].shape:
        raise DimensionMismatch("generators act on different dimensions")
    result = None
    if mode in ("span", "both"):
        result = span_compare(xs, ys, span_tol)
        result.minimal = canonicalize
    if mode in ("psd_bisection", "both"):
        bis = bisection_compare(gradient_matrix(L), gradient_matrix(Lp))
        result = bis if result is None else _combine(result, bis, AGREEMENT_TOL)
    if raise_on_fail and not result.holds:
        raise SpanNotIncluded("jump span of L is not contained in that of L'")
    return result


def psd_margin(m: np.ndarray, tol: float | None = None) -> tuple[bool, float]:
    lo, threshold = la.min_eig_margin(0.5 * (m + la.dag(m)), tol)
    return lo >= threshold, lo


def sandwich_check(L, Lp, eps: float, spec="full", tol: float | None = None) -> dict:
    """(1 - eps) m_L <= m_L'  and  m_L' <= m_L + eps * unit."""
    from .subalgebra import SubalgebraSpec, upper_bound_unit

    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    m, mp = gradient_matrix(L), gradient_matrix(Lp)
    n = int(round(m.shape[0] ** (1 / 3)))
    if spec == "full":
        spec = SubalgebraSpec.trivial(n)
    unit = upper_bound_unit(spec)
    lower, lower_margin = psd_margin(mp - (1.0 - eps) * m, tol)
    upper, upper_margin = psd_margin(m + eps * unit - mp, tol)
    return {
        "lower": bool(lower),
        "upper": bool(upper),
        "lower_margin": lower_margin,
        "upper_margin": upper_margin,
    }
