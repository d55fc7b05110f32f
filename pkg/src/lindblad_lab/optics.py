"""Jump maps, Choi matrices, photon emission rate and g2(0)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import DimensionMismatch, VerificationFailed, ZeroEmission
from .generator import LindbladGenerator, to_standard_form
from .gradient import (
    AGREEMENT_TOL,
    SPAN_TOL,
    ComparisonResult,
    _combine,
    bisection_compare,
    span_compare,
)

G2_DENOMINATOR_TOL = 1e-12


@dataclass(frozen=True)
class JumpMap:
    """Psi(x) = sum_j K_j* x K_j with predual Psi_*(rho) = sum_j K_j rho K_j*."""

    kraus: tuple[np.ndarray, ...]
    dim: int

    def __call__(self, x) -> np.ndarray:
        x = la.as_square(x)
        out = np.zeros((self.dim, self.dim), complex)
        for k in self.kraus:
            out = out + la.dag(k) @ x @ k
        return out

    def predual(self, rho) -> np.ndarray:
        rho = la.as_square(rho)
        out = np.zeros((self.dim, self.dim), complex)
        for k in self.kraus:
            out = out + k @ rho @ la.dag(k)
        return out

    def superoperator(self) -> np.ndarray:
        n = self.dim
        s = np.zeros((n * n, n * n), complex)
        for k in self.kraus:
            s = s + la.superop_from_pair(la.dag(k), k)
        return s

    def choi_factor(self) -> np.ndarray:
        """W with rows vec(K_i); the Choi matrix is W* W."""
        if not self.kraus:
            return np.zeros((0, self.dim**2), complex)
        return np.array([k.reshape(-1) for k in self.kraus])

    def choi(self) -> np.ndarray:
        """Block matrix (Psi(e_rs))_{rs}."""
        w = self.choi_factor()
        return la.dag(w) @ w


def jump_map(L, raw: bool = False) -> JumpMap:
    """Jump map of L built from its standard form.

    With ``raw=True`` the jumps are used exactly as supplied, so the map
    depends on the chosen representation (trace parts included).
    """
    if raw:
        if not isinstance(L, LindbladGenerator):
            L = to_standard_form(L).generator()
        return JumpMap(tuple(L.kraus()), L.dim)
    sf = to_standard_form(L)
    return JumpMap(tuple(sf.jumps), sf.dim)


def choi(L) -> np.ndarray:
    return jump_map(L).choi()


def compare_jump_maps(L, Lp, mode: str = "span", span_tol: float = SPAN_TOL) -> ComparisonResult:
    """Decide Psi_L <= C Psi_L' in the CP order through Choi matrices."""
    psi, psip = jump_map(L), jump_map(Lp)
    if psi.dim != psip.dim:
        raise DimensionMismatch("generators act on different dimensions")
    result = None
    if mode in ("span", "both"):
        result = span_compare(list(psi.kraus), list(psip.kraus), span_tol)
    if mode in ("psd_bisection", "both"):
        bis = bisection_compare(psi.choi(), psip.choi())
        result = bis if result is None else _combine(result, bis, AGREEMENT_TOL)
    if result is None:
        raise ValueError(f"unknown mode {mode!r}")
    return result


def emission_rate(L, rho) -> float:
    """R(rho) = Tr(Psi(I) rho)."""
    psi = jump_map(L)
    rho = la.check_density(rho)
    return float(np.real(np.trace(psi(np.eye(psi.dim)) @ rho)))


def g2(L, rho, check_duality: bool = True) -> float:
    """Tr(Psi_* Psi_*(rho)) / Tr(Psi_*(rho))^2."""
    psi = L if isinstance(L, JumpMap) else jump_map(L)
    rho = la.check_density(rho)
    once = psi.predual(rho)
    den = float(np.real(np.trace(once)))
    if den <= G2_DENOMINATOR_TOL:
        raise ZeroEmission(f"emission rate {den:.3e} is below {G2_DENOMINATOR_TOL}")
    num = float(np.real(np.trace(psi.predual(once))))
    if check_duality:
        ident = np.eye(psi.dim)
        dual = float(np.real(np.trace(rho @ psi(psi(ident)))))
        if abs(dual - num) > 1e-10 * (1.0 + abs(num)):
            raise VerificationFailed(f"duality check failed: {num!r} vs {dual!r}")
    return num / den**2


def g2_double_sum(kraus, rho) -> float:
    """sum_ij <K_j* K_i* K_i K_j> / (sum_j <K_j* K_j>)^2 (reference formula)."""
    rho = np.asarray(rho, complex)
    num = 0.0
    for ki in kraus:
        for kj in kraus:
            num += np.real(np.trace(rho @ la.dag(kj) @ la.dag(ki) @ ki @ kj))
    den = sum(np.real(np.trace(rho @ la.dag(k) @ k)) for k in kraus)
    return float(num / den**2)

