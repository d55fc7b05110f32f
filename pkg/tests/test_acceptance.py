"""Acceptance criteria 1-12. Each test prints one PASS/FAIL line."""
import subprocess
import sys

import numpy as np
import pytest

import oracles
from lindblad_lab import linalg as la
from lindblad_lab.generator import (
    LindbladGenerator,
    generator_distance,
    superoperator_matrix,
    to_standard_form,
)
from lindblad_lab.gradient import compare, derivation_matrix, gradient_matrix
from lindblad_lab.inequalities import (
    dirichlet_data,
    dirichlet_form,
    entropy_production,
    entropy_production_fd,
    spectral_gap,
)
from lindblad_lab.optics import compare_jump_maps, g2
from lindblad_lab.order import order_norm, order_norm_bisection
from lindblad_lab.sampling import random_complex, random_density, random_unitary
from lindblad_lab.scans import frontier_is_monotone, g2_stability_scan, stability_chain
from lindblad_lab.subalgebra import (
    SubalgebraSpec,
    depolarizer_generator,
    expectation_superop,
    in_commutant,
    upper_bound_unit,
)


def report(k: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    print(line)
    oracles.ACCEPTANCE_LINES.append((k, line))
    assert ok, line


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def test_c01_full_basis_depolarizer():
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in (2, 3, 4):
        target = -n**2 * (np.eye(n * n) - expectation_superop(SubalgebraSpec.trivial(n)))
        for _ in range(10):
            onb = oracles.random_traceless_onb(n, rng)
            s = superoperator_matrix(LindbladGenerator.from_jumps(onb))
            worst = max(worst, np.linalg.norm(s - target, 2))
    report(1, worst <= 1e-9, f"max ||sum L_Vj + n^2 (I - E_tau)|| = {worst:.2e} (tol 1e-9)")


def test_c02_derivation_identity():
    rng = np.random.default_rng(2)
    worst = 0.0
    for i in range(200):
        n = (2, 3, 4)[i % 3]
        sf = to_standard_form(oracles.random_standard_generator(n, rng))
        d = derivation_matrix(sf)
        worst = max(worst, np.max(np.abs(la.dag(d) @ d - gradient_matrix(sf))))
    report(2, worst <= 1e-9, f"max |D*D - m_L| over 200 generators = {worst:.2e} (tol 1e-9)")


def _pairs():
    rng = np.random.default_rng(3)
    nested = [oracles.nested_pair(n, rng) for n in (2, 3) for _ in range(50)]
    disjoint = [oracles.non_nested_pair(n, rng) for n in (2, 3) for _ in range(25)]
    return nested, disjoint


PAIRS = _pairs()


def test_c03_comparison_cross_validation():
    nested, disjoint = PAIRS
    worst, fails = 0.0, 0
    for L, Lp in nested:
        span = compare(L, Lp, "span")
        bis = compare(L, Lp, "psd_bisection")
        if not (span.holds and bis.holds):
            fails += 1
            continue
        worst = max(worst, _rel(span.optimal_c, bis.optimal_c))
    wrong = 0
    for L, Lp in disjoint:
        if compare(L, Lp, "span").holds or compare(L, Lp, "psd_bisection").holds:
            wrong += 1
    ok = fails == 0 and wrong == 0 and worst <= 1e-6
    report(3, ok, f"{len(nested)} nested: max rel gap {worst:.2e}, {fails} failures; "
                  f"{len(disjoint)} non-nested: {wrong} wrongly accepted")


def test_c04_gradient_jump_equivalence():
    nested, disjoint = PAIRS
    worst, mismatch = 0.0, 0
    for L, Lp in nested:
        a = compare(L, Lp, "span").optimal_c
        b = compare_jump_maps(L, Lp, "psd_bisection").optimal_c
        worst = max(worst, _rel(a, b))
    for L, Lp in disjoint:
        mismatch += compare_jump_maps(L, Lp, "psd_bisection").holds
    report(4, worst <= 1e-6 and mismatch == 0,
           f"max rel gap m-route vs Choi-route {worst:.2e} (tol 1e-6); {mismatch} verdict mismatches")


def test_c05_truncation_invariance():
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(30):
        n = (2, 3)[i % 2]
        onb = oracles.random_traceless_onb(n, rng)
        k = int(rng.integers(1, len(onb)))
        lp = LindbladGenerator.from_jumps(onb[:k], weights=rng.uniform(0.2, 2.0, size=k))
        coef = random_complex(1, rng, k)[0]
        L = LindbladGenerator.from_jumps([sum(c * b for c, b in zip(coef, onb[:k]))], dim=n)
        extra = int(rng.integers(1, len(onb) - k + 1))
        lp_big = LindbladGenerator(lp.hamiltonian, lp.jumps + tuple(
            (onb[k + j], rng.uniform(0.2, 2.0)) for j in range(extra)))
        worst = max(worst, abs(compare(L, lp, "both").optimal_c - compare(L, lp_big, "both").optimal_c))
    report(5, worst <= 1e-6, f"max change of optimal C over 30 instances = {worst:.2e} (tol 1e-6)")


SPECS = [((1, 2),), ((2, 1),), ((1, 2), (1, 2)), ((2, 2),), ((1, 2), (2, 1))]


def test_c06_depolarizer_construction():
    rng = np.random.default_rng(6)
    worst_res, worst_comm = 0.0, 0.0
    for blocks in SPECS:
        for u in (None, random_unitary(sum(a * b for a, b in blocks), rng)):
            spec = SubalgebraSpec(blocks, u)
            dep = depolarizer_generator(spec)
            n = spec.dim
            s = superoperator_matrix(dep.generator(normalized=False)) if dep.jumps else np.zeros((n * n, n * n))
            target = -dep.scale * (np.eye(n * n) - expectation_superop(spec))
            worst_res = max(worst_res, float(np.max(np.abs(s - target))))
            worst_comm = max(worst_comm, in_commutant(spec, dep.jumps))
    ok = worst_res <= 1e-9 and worst_comm <= 1e-10
    report(6, ok, f"superoperator residual {worst_res:.2e} (tol 1e-9), "
                  f"commutator with N {worst_comm:.2e} (tol 1e-10)")


def test_c07_order_norm():
    rng = np.random.default_rng(7)
    worst = 0.0
    axioms = 0.0
    units = {n: upper_bound_unit(SubalgebraSpec.trivial(n)) for n in (2, 3)}
    for i in range(100):
        n = (2, 3)[i % 2]
        e = units[n]
        a = oracles.random_standard_generator(n, rng)
        b = oracles.random_standard_generator(n, rng)
        c = oracles.random_standard_generator(n, rng)
        ma, mb, mc = (gradient_matrix(x) for x in (a, b, c))
        v, w = ma - mb, mb - mc
        nv = order_norm(v, e)
        worst = max(worst, _rel(nv, order_norm_bisection(v, e)) if nv else 0.0)
        t = float(rng.uniform(-3, 3))
        nw, nvw = order_norm(w, e), order_norm(v + w, e)
        axioms = max(axioms, nvw - (nv + nw), abs(order_norm(t * v, e) - abs(t) * nv) / (1 + nv))
    axioms = max(axioms, order_norm(np.zeros_like(units[2]), units[2]))
    ok = worst <= 1e-8 and axioms <= 1e-8
    report(7, ok, f"max rel gap vs bisection {worst:.2e} (tol 1e-8); worst axiom slack {axioms:.2e}")


def test_c08_dirichlet_and_gap():
    rng = np.random.default_rng(8)
    worst = 0.0
    for i in range(100):
        n = (2, 3)[i % 2]
        gen, sigma = oracles.random_db_instance(n, rng)
        dd = dirichlet_data(gen, sigma)
        x = random_complex(n, rng)
        q = oracles.dirichlet_quadrature(dd.superop, sigma, x)
        worst = max(worst, abs(dirichlet_form(dd, x) - q) / max(1.0, abs(q)))
    n = 3
    dep = depolarizer_generator(SubalgebraSpec.trivial(n)).generator()
    gap_dep = spectral_gap(dirichlet_data(dep, np.eye(n) / n)).gap
    s1, s2 = 0.7, 0.3
    ad = LindbladGenerator.from_jumps([la.SIGMA_MINUS, la.SIGMA_PLUS], weights=[1.0, s1 / s2])
    dd = dirichlet_data(ad, np.diag([s1, s2]))
    gap = spectral_gap(dd).gap
    xs = random_complex(2, rng, 2 * 10**4).reshape(2, 10**4, 2).transpose(1, 0, 2)
    from lindblad_lab.inequalities import bkm_variance
    g_e = oracles.polarized_gram(lambda x: dirichlet_form(dd, x), 2)
    g_v = oracles.polarized_gram(lambda x: bkm_variance(dd, x), 2)
    spot = max(abs(np.vdot(x.ravel(), g_e @ x.ravel()).real - dirichlet_form(dd, x)) for x in xs[:20])
    flat = xs.reshape(len(xs), -1)
    num = np.einsum("ki,ij,kj->k", flat.conj(), g_e, flat).real
    den = np.einsum("ki,ij,kj->k", flat.conj(), g_v, flat).real
    sampled = float(np.min(num / den))
    assert spot <= 1e-10
    ok = worst <= 1e-8 and abs(gap_dep - 1) <= 1e-9 and sampled >= gap - 1e-6
    report(8, ok, f"Dirichlet vs quadrature {worst:.2e} (tol 1e-8); gap(-(I-E_tau)) = {gap_dep:.12f}; "
                  f"sampled min ratio {sampled:.6f} >= pencil gap {gap:.6f}")


def test_c09_entropy_production():
    rng = np.random.default_rng(9)
    worst = 0.0
    cases = []
    for i in range(50):
        n = (2, 3)[(i // 10) % 2]
        if i % 10 == 0:
            gen, sigma = oracles.random_db_instance(n, rng)
            dd = dirichlet_data(gen, sigma)
            cases.append(dd)
        rho = random_density(n, rng, min_eig=0.02)
        ep, fd = entropy_production(dd, rho), entropy_production_fd(dd, rho)
        worst = max(worst, abs(ep - fd) / max(abs(fd), 1e-300))
    fixed = max(abs(entropy_production(dd, dd.sigma)) for dd in cases)
    ok = worst <= 1e-5 and fixed <= 1e-10
    report(9, ok, f"EP vs Richardson finite difference {worst:.2e} (tol 1e-5); |EP(sigma)| <= {fixed:.1e}")


def test_c10_stability_chain():
    rng = np.random.default_rng(10)
    sandwiches = pi_bad = ep_bad = checks = 0
    trials = 0
    for inst in range(5):
        n = (2, 3)[inst % 2]
        gen, sigma = oracles.random_db_instance(n, rng, per_block=2)
        res = stability_chain(gen, sigma, [0.05, 0.1, 0.2, 0.4], model="both", magnitude=0.3,
                              trials=20, seed=1000 + inst, states_per_dim=10, d_r=(1, 2))
        trials += 20
        sandwiches += res["sandwich_passes"]
        pi_bad += res["pi_violations"]
        ep_bad += res["ep_violations"]
        checks += res["ep_checks"]
    ok = pi_bad == 0 and ep_bad == 0 and sandwiches > 0
    report(10, ok, f"{trials} trials, {sandwiches} passing sandwiches: {pi_bad} gap violations, "
                   f"{ep_bad} EP violations in {checks} pointwise checks (d_R in 1,2)")


def test_c11_g2_ground_truths():
    rng = np.random.default_rng(11)
    excited = np.diag([1.0, 0.0])
    antibunch = g2(LindbladGenerator.from_jumps([la.SIGMA_MINUS]), excited)
    rho = random_density(2, rng)
    unitary = g2(LindbladGenerator.from_jumps([la.SIGMA_X]), rho)
    v1, v2 = np.kron(la.SIGMA_MINUS, np.eye(2)), np.kron(np.eye(2), la.SIGMA_MINUS)
    ee = np.zeros((4, 4))
    ee[0, 0] = 1.0
    two = g2(LindbladGenerator.from_jumps([v1, v2]), ee)
    two_ref = oracles.g2_double_sum([v1, v2], ee)
    remix = 0.0
    for _ in range(20):
        gen = oracles.random_standard_generator(3, rng)
        ks = to_standard_form(gen).jumps
        u = random_unitary(len(ks), rng)
        mixed = [sum(u[j, k] * ks[k] for k in range(len(ks))) for j in range(len(ks))]
        r = random_density(3, rng)
        remix = max(remix, abs(g2(gen, r) - g2(LindbladGenerator.from_jumps(mixed, dim=3), r)))
    gen = LindbladGenerator.from_jumps([v1, v2, np.kron(la.SIGMA_Z, la.SIGMA_X)], weights=[1.0, 0.7, 0.4])
    scan = g2_stability_scan(gen, random_density(4, rng, min_eig=0.05), [0.01, 0.05, 0.1, 0.2, 0.4],
                             magnitude=0.3, trials=100, seed=11)
    mono = frontier_is_monotone(scan.frontier)
    ok = (antibunch == 0.0 and abs(unitary - 1) <= 1e-10 and abs(two - two_ref) <= 1e-10
          and remix <= 1e-10 and mono)
    report(11, ok, f"g2(sigma_-) = {antibunch}, |g2(unitary) - 1| = {abs(unitary - 1):.1e}, "
                   f"two-emitter {two:.12f} vs {two_ref:.12f}, remix drift {remix:.1e}, "
                   f"frontier monotone = {mono}")


def test_c12_cli_determinism(tmp_path):
    import json
    from lindblad_lab.io import dumps, generator_to_json

    s1, s2 = 0.7, 0.3
    ad = LindbladGenerator.from_jumps([la.SIGMA_MINUS, la.SIGMA_PLUS, la.SIGMA_Z],
                                      weights=[1.0, s1 / s2, 0.3])
    prob = {
        "generators": {"L": generator_to_json(ad)},
        "sigma": la.matrix_to_json(np.diag([s1, s2])),
        "states": {"rho": la.matrix_to_json(np.array([[0.6, 0.1j], [-0.1j, 0.4]]))},
        "experiment": {"epsilons": [0.05, 0.1, 0.2], "trials": 8, "seed": 5, "magnitudes": [0.3]},
    }
    path = tmp_path / "p.json"
    path.write_text(dumps(prob))
    runs = [
        ["scan", str(path), "--seed", "3", "--jobs", "2"],
        ["scan", str(path), "--seed", "3", "--frontier"],
        ["mlsi", str(path), "--seed", "4", "--trials", "5"],
        ["g2-scan", str(path), "--seed", "2", "--trials", "6"],
        ["gap", str(path)],
    ]
    same = True
    for argv in runs:
        outs = [subprocess.run([sys.executable, "-m", "lindblad_lab.cli", *argv],
                               capture_output=True, check=False).stdout for _ in range(2)]
        same &= outs[0] == outs[1] and len(outs[0]) > 0
    serial = subprocess.run([sys.executable, "-m", "lindblad_lab.cli", *runs[0][:-2]],
                            capture_output=True).stdout
    threaded = subprocess.run([sys.executable, "-m", "lindblad_lab.cli", *runs[0]],
                              capture_output=True).stdout
    same &= serial == threaded
    json.loads(subprocess.run([sys.executable, "-m", "lindblad_lab.cli", "gap", str(path)],
                              capture_output=True).stdout)
    report(12, same, f"{len(runs)} commands run twice with fixed seed: byte-identical = {same}; "
                     f"--jobs 2 equals serial = {serial == threaded}")
