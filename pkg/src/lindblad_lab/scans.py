"""Seeded perturbation experiments around a fixed generator."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import InputError
from .generator import (
    DetailedBalanceData,
    LindbladGenerator,
    db_spectral_data,
    generator_distance,
    to_standard_form,
)
from .gradient import sandwich_check

MODELS = ("weights", "rotation", "both")


def _anti_hermitian(k: int, rng, real: bool = False) -> np.ndarray:
    a = rng.standard_normal((k, k))
    if not real:
        a = a + 1j * rng.standard_normal((k, k))
    return 0.5 * (a - a.conj().T)


def perturb_db(db: DetailedBalanceData, eta: float, rng, model: str = "both") -> LindbladGenerator:
    """DB-preserving perturbation that keeps every span{V_j : j in J_k}.

    ``weights`` jitters c_j -> c_j (1 + eta u_j) with one u per conjugate
    pair; ``rotation`` mixes the jumps of each omega block by exp(eta A)
    and the partner block by the conjugate unitary.
    """
    if model not in MODELS:
        raise ValueError(f"unknown perturbation model {model!r}")
    if not 0.0 <= eta < 1.0:
        raise ValueError("perturbation magnitude must lie in [0, 1)")
    units = list(db.unit_jumps)
    weights = np.array(db.weights, float)
    if model in ("weights", "both"):
        u = rng.uniform(-1.0, 1.0, size=len(weights))
        for j, p in enumerate(db.partner):
            if p < j:
                u[j] = u[p]
        weights = weights * (1.0 + eta * u)
    if model in ("rotation", "both"):
        omegas = np.array(db.omegas)
        for block in db.partition:
            w = omegas[block[0]]
            if w < 0:
                continue
            idx = list(block)
            rot = sla.expm(eta * _anti_hermitian(len(idx), rng, real=(w == 0.0)))
            old = [units[i] for i in idx]
            for a, i in enumerate(idx):
                units[i] = sum(rot[a, b] * old[b] for b in range(len(idx)))
            if w > 0:
                for a, i in enumerate(idx):
                    units[db.partner[i]] = units[i].conj().T
    n = db.dim
    return LindbladGenerator(np.zeros((n, n), complex), tuple(zip(units, weights)))


def perturb_general(gen, eta: float, rng, model: str = "both") -> LindbladGenerator:
    """Same two moves on the standard-form jumps of an arbitrary generator."""
    if model not in MODELS:
        raise ValueError(f"unknown perturbation model {model!r}")
    sf = to_standard_form(gen)
    units = list(sf.unit_jumps)
    weights = np.array(sf.weights, float)
    if model in ("weights", "both"):
        weights = weights * (1.0 + eta * rng.uniform(-1.0, 1.0, size=len(weights)))
    if model in ("rotation", "both") and units:
        rot = sla.expm(eta * _anti_hermitian(len(units), rng))
        units = [sum(rot[a, b] * units[b] for b in range(len(units))) for a in range(len(units))]
    return LindbladGenerator(sf.hamiltonian, tuple(zip(units, weights)))


@dataclass
class ScanResult:
    rows: list[dict]
    frontier: list[dict]
    columns: tuple[str, ...]
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        from .io import format_float

        lines = [",".join(self.columns)]
        for r in self.rows:
            cells = []
            for c in self.columns:
                v = r[c]
                if isinstance(v, bool):
                    cells.append("true" if v else "false")
                elif isinstance(v, float):
                    cells.append(format_float(v))
                else:
                    cells.append(str(v))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _frontier(rows: list[dict], eps_list: Sequence[float], ok: Callable[[dict], bool]) -> list[dict]:
    """Per epsilon: smallest failing delta and largest delta below it."""
    out = []
    for eps in eps_list:
        sel = [r for r in rows if r["epsilon"] == eps]
        fails = [r["delta"] for r in sel if not ok(r)]
        min_fail = min(fails) if fails else float("inf")
        passing = [r["delta"] for r in sel if r["delta"] < min_fail]
        out.append({
            "epsilon": eps,
            "min_failing_delta": min_fail,
            "max_clean_delta": max(passing) if passing else 0.0,
        })
    return out


def frontier_is_monotone(frontier: list[dict]) -> bool:
    ordered = sorted(frontier, key=lambda f: f["epsilon"])
    vals = [f["min_failing_delta"] for f in ordered]
    return all(a <= b for a, b in zip(vals, vals[1:]))


def _run_trials(fn, trials: int, seed, jobs: int):
    seqs = np.random.SeedSequence(seed).spawn(trials)
    args = [(t, np.random.default_rng(s)) for t, s in enumerate(seqs)]
    if jobs <= 1:
        return [fn(*a) for a in args]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda a: fn(*a), args))


def stability_scan(gen, sigma, eps_list: Sequence[float], spec="full", model: str = "both",
                   magnitude: float = 0.2, trials: int = 20, seed=0, jobs: int = 1) -> ScanResult:
    """Sandwich checks for seeded DB perturbations L' of L.

    Trial t draws eta uniformly in [0, magnitude]; the reported delta is
    the 2->2 distance between L and L'.
    """
    db = db_spectral_data(gen, sigma)
    base = db.generator()

    def trial(t, rng):
        eta = magnitude * rng.uniform()
        lp = perturb_db(db, eta, rng, model)
        delta = generator_distance(base, lp)
        rows = []
        for eps in eps_list:
            chk = sandwich_check(base, lp, eps, spec)
            rows.append({"trial": t, "delta": delta, "epsilon": float(eps),
                         "lower_ok": chk["lower"], "upper_ok": chk["upper"]})
        return rows

    rows = [r for rs in _run_trials(trial, trials, seed, jobs) for r in rs]
    front = _frontier(rows, eps_list, lambda r: r["lower_ok"] and r["upper_ok"])
    return ScanResult(rows, front, ("trial", "delta", "epsilon", "lower_ok", "upper_ok"),
                      {"model": model, "magnitude": magnitude, "trials": trials})


def g2_stability_scan(gen, rho, eps_list: Sequence[float], model: str = "both",
                      magnitude: float = 0.2, trials: int = 20, seed=0, jobs: int = 1) -> ScanResult:
    """Two-sided bound (1 - eps) g2(L) <= g2(L') <= (1 + eps) g2(L) under perturbation."""
    from .optics import g2

    base = to_standard_form(gen).generator()
    g0 = g2(base, rho)
    if g0 <= 0.0:
        raise InputError(f"g2(L) = {g0!r}; the two-sided bound needs g2(L) > 0")

    def trial(t, rng):
        eta = magnitude * rng.uniform()
        lp = perturb_general(base, eta, rng, model)
        delta = generator_distance(base, lp)
        val = g2(lp, rho)
        return [{"trial": t, "delta": delta, "epsilon": float(eps), "g2_value": val,
                 "lower_ok": (1.0 - eps) * g0 <= val, "upper_ok": val <= (1.0 + eps) * g0}
                for eps in eps_list]

    rows = [r for rs in _run_trials(trial, trials, seed, jobs) for r in rs]
    front = _frontier(rows, eps_list, lambda r: r["lower_ok"] and r["upper_ok"])
    return ScanResult(rows, front,
                      ("trial", "delta", "epsilon", "g2_value", "lower_ok", "upper_ok"),
                      {"model": model, "magnitude": magnitude, "trials": trials, "g2": g0})


def stability_chain(gen, sigma, eps_list: Sequence[float], spec=None, model: str = "both",
                    magnitude: float = 0.2, trials: int = 20, seed=0, states_per_dim: int = 10,
                    d_r: Sequence[int] = (1, 2), jobs: int = 1) -> dict:
    """Sandwich at eps  =>  gap and pointwise EP inequalities, trial by trial."""
    from .inequalities import dirichlet_data, stability_check_cmlsi, stability_check_pi
    from .subalgebra import SubalgebraSpec

    dd = dirichlet_data(gen, sigma, spec)
    db = dd.db
    base = db.generator()
    unit_spec = SubalgebraSpec.trivial(db.dim) if spec is None else spec

    def trial(t, rng):
        eta = magnitude * rng.uniform()
        lp = perturb_db(db, eta, rng, model)
        ddp = dirichlet_data(lp, sigma, spec)
        delta = generator_distance(base, lp)
        out = []
        for k, eps in enumerate(eps_list):
            chk = sandwich_check(base, lp, eps, unit_spec)
            rec = {"trial": t, "delta": delta, "epsilon": float(eps),
                   "lower_ok": chk["lower"], "upper_ok": chk["upper"]}
            if chk["lower"]:
                pi = stability_check_pi(dd, ddp, eps)
                ep = stability_check_cmlsi(dd, ddp, eps, d_r=d_r, samples=states_per_dim,
                                           seed=int(rng.integers(2**32)))
                rec.update({"pi_ok": pi["holds"], "ep_ok": ep["holds"],
                            "ep_checked": ep["checked"], "ep_violations": ep["violations"]})
            out.append(rec)
        return out

    rows = [r for rs in _run_trials(trial, trials, seed, jobs) for r in rs]
    checked = [r for r in rows if r["lower_ok"]]
    return {
        "rows": rows,
        "sandwich_passes": len(checked),
        "pi_violations": sum(1 for r in checked if not r["pi_ok"]),
        "ep_violations": sum(r["ep_violations"] for r in checked),
        "ep_checks": sum(r["ep_checked"] for r in checked),
    }
