"""Command-line front end: ``lindblad-lab <command> PROBLEM.json [options]``.

Results are written as JSON (scans as CSV). Exit status is 0 on success,
1 for malformed input and 2 when a verification fails.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import linalg as la
from .errors import InputError, LindbladError, NotLindblad, VerificationError
from .io import SCHEMA, ProblemFile, dumps, load_problem, standard_form_to_json

COMMANDS = (
    "validate", "standard-form", "compare", "sandwich", "depolarizer", "order-norm",
    "gap", "ep", "mlsi", "g2", "scan", "g2-scan", "stability",
)


def _spec_or_trivial(prob: ProblemFile, n: int):
    from .subalgebra import SubalgebraSpec

    return prob.spec if prob.spec is not None else SubalgebraSpec.trivial(n)


def _pair(prob: ProblemFile, args):
    if args.L is None or args.Lp is None:
        names = list(prob.generators)
        if len(names) != 2 or args.L is not None or args.Lp is not None:
            raise InputError("name both generators with --L and --Lp")
        return prob.generator(names[0]), prob.generator(names[1])
    return prob.generator(args.L), prob.generator(args.Lp)


def cmd_validate(prob, args):
    from .generator import superoperator_matrix, validate_lindblad

    if args.generator and args.generator in prob.superoperators:
        s = prob.superoperators[args.generator]
    elif args.generator is None and prob.superoperators and not prob.generators:
        s = next(iter(prob.superoperators.values()))
    else:
        s = superoperator_matrix(prob.generator(args.generator))
    res = validate_lindblad(s, args.tol)
    out = {"valid": res.valid, "violations": res.violations, "witnesses": res.witnesses}
    return out, (0 if res.valid else NotLindblad("map is not a Lindblad generator"))


def cmd_standard_form(prob, args):
    from .generator import to_standard_form

    return standard_form_to_json(to_standard_form(prob.generator(args.generator), args.tol)), 0


def cmd_compare(prob, args):
    from .gradient import compare
    from .optics import compare_jump_maps

    L, Lp = _pair(prob, args)
    res = compare(L, Lp, mode=args.mode)
    out = res.to_dict()
    if args.jump_maps:
        out["jump_map_route"] = compare_jump_maps(L, Lp, mode=args.mode).to_dict()
    return out, 0


def cmd_sandwich(prob, args):
    from .gradient import sandwich_check

    L, Lp = _pair(prob, args)
    spec = _spec_or_trivial(prob, L.dim)
    out = {"epsilon": args.eps}
    out.update(sandwich_check(L, Lp, args.eps, spec, args.tol))
    return out, 0


def cmd_depolarizer(prob, args):
    from .generator import superoperator_matrix
    from .gradient import gradient_matrix
    from .subalgebra import depolarizer_generator

    if prob.spec is None:
        raise InputError("problem file has no 'spec'")
    dep = depolarizer_generator(prob.spec)
    m = gradient_matrix(superoperator_matrix(dep.generator()))
    return {
        "spec": prob.spec.to_json(),
        "scale": dep.scale,
        "residual": dep.residual,
        "jumps": [la.matrix_to_json(v) for v in dep.jumps],
        "m_min_eigenvalue": float(np.linalg.eigvalsh(m)[0]),
    }, 0


def cmd_order_norm(prob, args):
    from .gradient import gradient_matrix
    from .order import order_norm, order_norm_bisection
    from .subalgebra import upper_bound_unit

    L, Lp = _pair(prob, args)
    v = gradient_matrix(L) - gradient_matrix(Lp)
    e = upper_bound_unit(_spec_or_trivial(prob, L.dim))
    return {"order_norm": order_norm(v, e), "bisection": order_norm_bisection(v, e)}, 0


def _dd(prob, args):
    from .inequalities import dirichlet_data

    return dirichlet_data(prob.generator(args.generator), prob.require_sigma(), prob.spec)


def cmd_gap(prob, args):
    from .inequalities import spectral_gap

    res = spectral_gap(_dd(prob, args))
    return {"gap": res.gap, "witness": la.matrix_to_json(res.witness)}, 0


def cmd_ep(prob, args):
    from .inequalities import entropy_production, entropy_production_fd

    dd = _dd(prob, args)
    rho = prob.state(args.state)
    return {"ep": entropy_production(dd, rho), "finite_difference": entropy_production_fd(dd, rho)}, 0


def cmd_mlsi(prob, args):
    from .inequalities import cmlsi_probe, mlsi_ratio

    dd = _dd(prob, args)
    out = {}
    if prob.states:
        out["ratios"] = {k: mlsi_ratio(dd, v) for k, v in prob.states.items()}
    seed = args.seed if args.seed is not None else prob.experiment.seed
    probe = cmlsi_probe(dd, args.dr_max, args.trials or 50, seed)
    out["cmlsi_probe"] = {
        "value": probe.value,
        "kind": probe.kind,
        "per_reference_dim": {str(k): v for k, v in probe.per_reference_dim.items()},
        "samples": probe.samples,
    }
    return out, 0


def cmd_g2(prob, args):
    from .optics import emission_rate, g2

    gen = prob.generator(args.generator)
    rho = prob.state(args.state)
    return {"g2": g2(gen, rho), "emission_rate": emission_rate(gen, rho)}, 0


def _experiment(prob, args):
    exp = prob.experiment
    trials = args.trials if args.trials is not None else exp.trials
    seed = args.seed if args.seed is not None else exp.seed
    return exp, trials, seed


def cmd_scan(prob, args):
    from .scans import frontier_is_monotone, stability_scan

    exp, trials, seed = _experiment(prob, args)
    gen = prob.generator(args.generator)
    res = stability_scan(gen, prob.require_sigma(), exp.epsilons, _spec_or_trivial(prob, gen.dim),
                         exp.model, max(exp.magnitudes), trials, seed, args.jobs)
    return res, frontier_is_monotone(res.frontier)


def cmd_g2_scan(prob, args):
    from .scans import frontier_is_monotone, g2_stability_scan

    exp, trials, seed = _experiment(prob, args)
    res = g2_stability_scan(prob.generator(args.generator), prob.state(args.state), exp.epsilons,
                            exp.model, max(exp.magnitudes), trials, seed, args.jobs)
    return res, frontier_is_monotone(res.frontier)


def cmd_stability(prob, args):
    from .inequalities import dirichlet_data, stability_check_cmlsi, stability_check_pi
    from .gradient import sandwich_check

    L, Lp = _pair(prob, args)
    sigma = prob.require_sigma()
    dd, ddp = dirichlet_data(L, sigma, prob.spec), dirichlet_data(Lp, sigma, prob.spec)
    seed = 0 if args.seed is None else args.seed
    return {
        "epsilon": args.eps,
        "sandwich": sandwich_check(L, Lp, args.eps, _spec_or_trivial(prob, L.dim)),
        "poincare": stability_check_pi(dd, ddp, args.eps),
        "entropy_production": stability_check_cmlsi(dd, ddp, args.eps, d_r=range(1, args.dr_max + 1),
                                                    samples=args.trials or 10, seed=seed),
    }, 0


HANDLERS = {
    "validate": cmd_validate, "standard-form": cmd_standard_form, "compare": cmd_compare,
    "sandwich": cmd_sandwich, "depolarizer": cmd_depolarizer, "order-norm": cmd_order_norm,
    "gap": cmd_gap, "ep": cmd_ep, "mlsi": cmd_mlsi, "g2": cmd_g2, "scan": cmd_scan,
    "g2-scan": cmd_g2_scan, "stability": cmd_stability,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("problem", help="problem file (JSON), '-' for stdin")
    common.add_argument("--tol", type=float, default=1e-9, help="global numeric tolerance")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for scans")
    common.add_argument("--generator", "-g", default=None, help="generator name")
    common.add_argument("--state", default=None, help="state name")
    common.add_argument("--L", default=None)
    common.add_argument("--Lp", default=None)
    common.add_argument("--eps", type=float, default=0.1)
    common.add_argument("--mode", choices=("span", "psd_bisection", "both"), default="both")
    common.add_argument("--jump-maps", action="store_true", help="also compare jump maps")
    common.add_argument("--dr-max", type=int, default=2, help="largest reference dimension")
    common.add_argument("--frontier", action="store_true", help="scans: emit the frontier as JSON")

    parser = argparse.ArgumentParser(prog="lindblad-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _error(exc: Exception, status: int) -> int:
    sys.stderr.write(dumps({"schema": SCHEMA, "error": type(exc).__name__, "message": str(exc)}))
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    saved = (la.tolerances.hermitian, la.tolerances.psd)
    la.tolerances.hermitian = la.tolerances.psd = args.tol
    try:
        prob = load_problem(args.problem)
        result, status = HANDLERS[args.command](prob, args)
        if args.command in ("scan", "g2-scan"):
            if args.frontier:
                text = dumps({"schema": SCHEMA, "command": args.command, "monotone": status,
                              "frontier": result.frontier, "meta": result.meta})
            else:
                text = result.to_csv()
            _emit(text, args.out)
            return 0
        payload = {"schema": SCHEMA, "command": args.command}
        payload.update(result)
        _emit(dumps(payload), args.out)
        if isinstance(status, Exception):
            return _error(status, 2)
        return 0
    except InputError as exc:
        return _error(exc, 1)
    except VerificationError as exc:
        return _error(exc, 2)
    except LindbladError as exc:
        return _error(exc, 2)
    except ValueError as exc:
        return _error(exc, 1)
    finally:
        la.tolerances.hermitian, la.tolerances.psd = saved


if __name__ == "__main__":
    sys.exit(main())
