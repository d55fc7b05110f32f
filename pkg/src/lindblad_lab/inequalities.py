"""Variance, Dirichlet form, spectral gap, relative entropy and entropy
production for detailed-balanced generators.

Sign conventions: the Dirichlet form and the entropy production are both
reported as nonnegative numbers,

    E(X)     = - int_0^1 Tr(X* sigma^s L(X) sigma^(1-s)) ds,
    EP(rho)  = - d/dt D(e^{t L_*} rho || E_* rho) at t = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import linalg as la
from .errors import (
    DegenerateState,
    FixedAlgebraMismatch,
    NotDetailedBalanced,
    RhoNotStrict,
    SupportViolation,
)
from .generator import (
    DetailedBalanceData,
    check_detailed_balance,
    db_spectral_data,
    fixed_point_algebra,
    superoperator_matrix,
)


@dataclass
class DirichletData:
    """A sigma-detailed-balanced generator with its fixed-point algebra N."""

    db: DetailedBalanceData
    n_basis: list[np.ndarray]
    superop: np.ndarray = field(repr=False)

    @property
    def sigma(self) -> np.ndarray:
        return self.db.sigma

    @property
    def dim(self) -> int:
        return self.db.dim

    def expectation(self) -> np.ndarray:
        """Superoperator of the GNS-orthogonal projection E_{N,sigma} onto N."""
        return _gns_projection(self.n_basis, self.sigma)

    def amplify(self, d: int) -> "DirichletData":
        """L (x) id on M_n (x) M_d with sigma (x) I/d and N (x) M_d."""
        if d == 1:
            return self
        ident = np.eye(d)
        db = self.db
        units = tuple(np.kron(v, ident) for v in db.unit_jumps)
        sigma = np.kron(db.sigma, ident / d)
        amp = DetailedBalanceData(
            sigma=sigma,
            unit_jumps=units,
            weights=db.weights,
            omegas=db.omegas,
            partner=db.partner,
            partition=db.partition,
            block_omegas=db.block_omegas,
        )
        basis = [np.kron(b, e) for b in self.n_basis for e in la.matrix_units(d)]
        return DirichletData(amp, basis, superoperator_matrix(amp.generator()))


def _gns_projection(basis: Sequence[np.ndarray], sigma) -> np.ndarray:
    b = np.array([x.reshape(-1) for x in basis]).T
    g = la.gns_gram(sigma)
    gram = la.dag(b) @ g @ b
    return b @ np.linalg.solve(gram, la.dag(b) @ g)


def dirichlet_data(gen, sigma, spec=None, tol: float = 1e-8) -> DirichletData:
    """Package a DB generator. ``spec`` (a SubalgebraSpec) is checked against
    the fixed points of L; without it the fixed-point algebra is computed."""
    sigma = la.check_density(sigma, strict=True, name="sigma")
    if not check_detailed_balance(gen, sigma, tol):
        raise NotDetailedBalanced("generator is not sigma-detailed balanced")
    db = db_spectral_data(gen, sigma, tol)
    s = superoperator_matrix(db.generator())
    if spec is None:
        basis = list(fixed_point_algebra(gen).basis)
    else:
        basis = spec.basis()
        if spec.dim != db.dim:
            raise FixedAlgebraMismatch("spec and generator have different dimensions")
        scale = 1.0 + float(np.max(np.abs(s)))
        for b in basis:
            if np.max(np.abs(la.apply_superop(s, b))) > 1e-9 * scale:
                raise FixedAlgebraMismatch("an element of N is not fixed by L")
        kernel = la.nullspace(s, 1e-9).shape[1]
        if kernel != len(basis):
            raise FixedAlgebraMismatch(
                f"ker L has dimension {kernel}, N has dimension {len(basis)}"
            )
    return DirichletData(db, basis, s)


def conditional_expectation_sigma(dd: DirichletData, x) -> np.ndarray:
    return la.apply_superop(dd.expectation(), x)


def bkm_variance(dd: DirichletData, x) -> float:
    """BKM norm of X - E_{N,sigma}(X)."""
    x = la.as_square(x)
    y = x - conditional_expectation_sigma(dd, x)
    return float(np.real(la.inner_product(y, y, "bkm", dd.sigma)))


def dirichlet_form(dd: DirichletData, x) -> float:
    """Closed form in modular jumps W_j = sqrt(c_j e^{w_j/2}) V_j:

        1/2 sum_j sum_uv |<u|[W_j, X]|v>|^2 Lambda(e^{w_j/2} s_u, e^{-w_j/2} s_v)

    where (s_u, |u>) is the eigen-decomposition of sigma and
    sigma V_j sigma^-1 = e^{-w_j} V_j.
    """
    x = la.as_square(x)
    s, q = np.linalg.eigh(dd.sigma)
    total = 0.0
    for w, wj in zip(dd.db.omegas, dd.db.weighted_jumps()):
        y = la.dag(q) @ (wj @ x - x @ wj) @ q
        kern = la.log_mean(np.exp(w / 2) * s[:, None], np.exp(-w / 2) * s[None, :])
        total += float(np.sum(kern * np.abs(y) ** 2))
    return 0.5 * total


def dirichlet_form_direct(dd: DirichletData, x) -> float:
    """-BKM(X, L X), the defining formula."""
    x = la.as_square(x)
    lx = la.apply_superop(dd.superop, x)
    return float(-np.real(la.inner_product(x, lx, "bkm", dd.sigma)))


@dataclass
class GapResult:
    gap: float
    witness: np.ndarray


def spectral_gap(dd: DirichletData) -> GapResult:
    """Smallest E(X)/Var(X) over X outside N, as a generalised eigenproblem."""
    n = dd.dim
    nb = np.array([b.reshape(-1) for b in dd.n_basis]).T
    g = la.gns_gram(dd.sigma)
    # GNS-orthogonal complement of N
    comp = la.nullspace(la.dag(nb) @ g)
    if comp.shape[1] == 0:
        return GapResult(float("inf"), np.zeros((n, n), complex))
    k = la.bkm_gram(dd.sigma)
    gv = la.dag(comp) @ k @ comp
    ge = -la.dag(comp) @ k @ dd.superop @ comp
    gv = 0.5 * (gv + la.dag(gv))
    ge = 0.5 * (ge + la.dag(ge))
    w, vecs = sla.eigh(ge, gv)
    x = (comp @ vecs[:, 0]).reshape(n, n)
    return GapResult(float(w[0]), x)


def relative_entropy(rho, sigma) -> float:
    """Tr rho (log rho - log sigma), with the convention 0 log 0 = 0."""
    rho = la.check_density(rho)
    sigma = la.check_density(sigma, name="sigma")
    r, pr = np.linalg.eigh(rho)
    s, ps = np.linalg.eigh(sigma)
    cut = la.tolerances.psd
    # supp rho must lie inside supp sigma
    ker_s = ps[:, s <= cut]
    if ker_s.shape[1] and np.max(np.abs(la.dag(ker_s) @ rho @ ker_s)) > cut:
        raise SupportViolation("rho is not supported inside the support of sigma")
    rpos = r > cut
    term1 = float(np.sum(r[rpos] * np.log(r[rpos])))
    spos = s > cut
    # Tr(rho log sigma) on supp sigma
    ov = np.abs(la.dag(ps[:, spos]) @ pr[:, rpos]) ** 2
    term2 = float(np.sum(ov * np.log(s[spos])[:, None] * r[rpos][None, :]))
    return term1 - term2


def _require_strict(rho) -> np.ndarray:
    rho = la.check_density(rho)
    if np.linalg.eigvalsh(rho)[0] <= la.tolerances.psd:
        raise RhoNotStrict("entropy production needs a faithful state")
    return rho


def predual_expectation(dd: DirichletData, rho) -> np.ndarray:
    """E_*(rho), the Tr-dual of E_{N,sigma}."""
    return la.apply_superop(la.dag(dd.expectation()), rho)


def entropy_production(dd: DirichletData, rho) -> float:
    """Double-operator-integral closed form with kernels
    K_w(a, b) = 1 / Lambda(e^{w/2} a, e^{-w/2} b) on the spectrum of rho:

        1/2 sum_j sum_uv K_{w_j}(l_u, l_v) |<u| s^1/2 [W_j, s^-1/2 rho s^-1/2] s^1/2 |v>|^2
    """
    rho = _require_strict(rho)
    lam, p = np.linalg.eigh(rho)
    sig = dd.sigma
    sh = la.mat_func(sig, np.sqrt)
    shi = la.mat_func(sig, lambda t: 1.0 / np.sqrt(t))
    core = shi @ rho @ shi
    total = 0.0
    for w, wj in zip(dd.db.omegas, dd.db.weighted_jumps()):
        a = la.dag(p) @ sh @ (wj @ core - core @ wj) @ sh @ p
        kern = la.log_mean(np.exp(w / 2) * lam[:, None], np.exp(-w / 2) * lam[None, :])
        total += float(np.sum(np.abs(a) ** 2 / kern))
    return 0.5 * total


def entropy_production_direct(dd: DirichletData, rho) -> float:
    """-Tr(L_*(rho) (log rho - log sigma))."""
    rho = _require_strict(rho)
    lrho = la.apply_superop(la.dag(dd.superop), rho)
    logs = la.mat_func(rho, np.log) - la.mat_func(dd.sigma, np.log)
    return float(-np.real(np.trace(lrho @ logs)))


def entropy_production_fd(dd: DirichletData, rho, steps=None, levels: int = 5) -> float:
    """-(d/dt) D(e^{t L_*} rho || E_* rho) by forward differences with
    Richardson extrapolation over a halving step sequence.

    By default the first step is 0.05 / ||L||, so stiff generators are
    resolved as well as slow ones.
    """
    rho = _require_strict(rho)
    ref = predual_expectation(dd, rho)
    ref = 0.5 * (ref + la.dag(ref))
    d0 = relative_entropy(rho, ref)
    pred = la.dag(dd.superop)
    if steps is None:
        h0 = 0.05 / max(np.linalg.norm(pred, 2), 1e-12)
        steps = [h0 / 2**k for k in range(levels)]
    est = []
    for h in steps:
        rh = la.apply_superop(sla.expm(h * pred), rho)
        rh = 0.5 * (rh + la.dag(rh))
        est.append(-(relative_entropy(rh, ref) - d0) / h)
    # forward differences have error c1 h + c2 h^2 + ...
    level = est
    factor = 2.0
    while len(level) > 1:
        level = [(factor * level[i + 1] - level[i]) / (factor - 1.0) for i in range(len(level) - 1)]
        factor *= 2.0
    return float(level[0])


def mlsi_ratio(dd: DirichletData, rho, tol: float = 1e-12) -> float:
    rho = _require_strict(rho)
    ref = predual_expectation(dd, rho)
    d = relative_entropy(rho, 0.5 * (ref + la.dag(ref)))
    if d <= tol:
        raise DegenerateState(f"D(rho || E_* rho) = {d:.3e} is too small")
    return entropy_production(dd, rho) / d


@dataclass
class ProbeResult:
    value: float
    per_reference_dim: dict
    samples: int
    kind: str = "upper bound"


def sample_states(dim: int, count: int, rng, min_eig: float = 1e-3) -> list[np.ndarray]:
    from .sampling import random_density

    return [random_density(dim, rng, min_eig=min_eig) for _ in range(count)]


def cmlsi_probe(dd: DirichletData, d_r_max: int = 2, samples: int = 50, seed=0) -> ProbeResult:
    """Minimum of EP/D over sampled states of L (x) id_R, d_R = 1..d_r_max.

    This is an upper bound on the CMLSI constant, never the constant itself.
    """
    seqs = np.random.SeedSequence(seed).spawn(d_r_max)
    per = {}
    for d, ss in zip(range(1, d_r_max + 1), seqs):
        amp = dd.amplify(d)
        rng = np.random.default_rng(ss)
        best = float("inf")
        for rho in sample_states(amp.dim, samples, rng):
            try:
                best = min(best, mlsi_ratio(amp, rho))
            except DegenerateState:
                continue
        per[d] = best
    if all(np.isinf(v) for v in per.values()):
        raise DegenerateState("every sampled state is (numerically) a fixed point")
    # reference dimension 1 embeds into larger ones, so take a running minimum
    running, value = {}, float("inf")
    for d in sorted(per):
        value = min(value, per[d])
        running[d] = value
    return ProbeResult(value, running, samples)


def same_fixed_algebra(a: DirichletData, b: DirichletData, tol: float = 1e-8) -> bool:
    if len(a.n_basis) != len(b.n_basis):
        return False
    for x in b.n_basis:
        if np.max(np.abs(la.apply_superop(a.superop, x))) > tol * (1 + np.max(np.abs(a.superop))):
            return False
    return True


def stability_check_pi(L: DirichletData, Lp: DirichletData, eps: float, slack: float = 1e-10) -> dict:
    """(1 - eps) gap(L) <= gap(L')."""
    if not same_fixed_algebra(L, Lp):
        raise FixedAlgebraMismatch("generators have different fixed-point algebras")
    g, gp = spectral_gap(L).gap, spectral_gap(Lp).gap
    ok = (1.0 - eps) * g <= gp + slack * max(1.0, abs(g))
    return {"holds": bool(ok), "gap": g, "gap_perturbed": gp, "margin": gp - (1.0 - eps) * g}


def stability_check_cmlsi(L: DirichletData, Lp: DirichletData, eps: float, states=None,
                          d_r: Sequence[int] = (1, 2), samples: int = 10, seed=0,
                          slack: float = 1e-10) -> dict:
    """Pointwise (1 - eps) EP_L(rho) <= EP_L'(rho) on sampled, possibly amplified, states."""
    if not same_fixed_algebra(L, Lp):
        raise FixedAlgebraMismatch("generators have different fixed-point algebras")
    checks = []
    seqs = np.random.SeedSequence(seed).spawn(len(d_r))
    for d, ss in zip(d_r, seqs):
        a, ap = L.amplify(d), Lp.amplify(d)
        pool = states.get(d, []) if isinstance(states, dict) else []
        if not pool:
            pool = sample_states(a.dim, samples, np.random.default_rng(ss))
        for rho in pool:
            ep, epp = entropy_production(a, rho), entropy_production(ap, rho)
            checks.append((d, ep, epp, (1.0 - eps) * ep <= epp + slack * max(1.0, ep)))
    violations = sum(1 for c in checks if not c[3])
    worst = min((c[2] - (1.0 - eps) * c[1] for c in checks), default=0.0)
    return {"holds": violations == 0, "violations": violations, "checked": len(checks),
            "worst_margin": worst}
