"""JSON interchange: matrices, generators, specs, problem files, output."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import linalg as la
from .errors import DimensionMismatch, InputError
from .generator import GKSForm, LindbladGenerator, StandardForm
from .subalgebra import SubalgebraSpec

SCHEMA = "lindblad-lab/1"


def format_float(x: float) -> str:
    """17 significant digits; integral values keep a trailing '.0'."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2:
            return _encode(la.matrix_to_json(obj), indent, level)
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode({"re": obj.real, "im": obj.imag}, indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number, bool)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def generator_from_json(obj: dict):
    if not isinstance(obj, dict):
        raise InputError("generator must be a JSON object")
    try:
        if "basis" in obj:
            basis = [la.matrix_from_json(b) for b in obj["basis"]]
            coeff = la.matrix_from_json(obj["coeff"])
            n = basis[0].shape[0] if basis else int(obj["dim"])
            h = la.matrix_from_json(obj["H"]) if obj.get("H") is not None else np.zeros((n, n))
            return GKSForm(tuple(basis), coeff, h)
        n = int(obj["dim"])
        h = la.matrix_from_json(obj["H"]) if obj.get("H") is not None else np.zeros((n, n))
        if h.shape != (n, n):
            raise DimensionMismatch(f"H has shape {h.shape}, dim is {n}")
        jumps = tuple((la.matrix_from_json(j["V"]), float(j.get("c", 1.0))) for j in obj.get("jumps", []))
        return LindbladGenerator(h, jumps, obj.get("convention", "half"))
    except (KeyError, TypeError, IndexError) as exc:
        raise InputError(f"malformed generator: {exc}") from exc


def generator_to_json(gen) -> dict:
    if isinstance(gen, StandardForm):
        gen = gen.generator()
    if isinstance(gen, GKSForm):
        return {
            "basis": [la.matrix_to_json(b) for b in gen.basis],
            "coeff": la.matrix_to_json(gen.coeff),
            "H": la.matrix_to_json(gen.hamiltonian),
        }
    return {
        "dim": gen.dim,
        "convention": gen.convention,
        "H": la.matrix_to_json(gen.hamiltonian),
        "jumps": [{"V": la.matrix_to_json(v), "c": float(c)} for v, c in gen.jumps],
    }


def standard_form_to_json(sf: StandardForm) -> dict:
    return {
        "dim": sf.dim,
        "H": la.matrix_to_json(sf.hamiltonian),
        "jumps": [
            {"V": la.matrix_to_json(v), "c": float(c)} for v, c in zip(sf.unit_jumps, sf.weights)
        ],
    }


@dataclass
class Experiment:
    epsilons: list[float] = field(default_factory=lambda: [0.05, 0.1, 0.2, 0.4])
    trials: int = 20
    seed: int = 0
    magnitudes: list[float] = field(default_factory=lambda: [0.2])
    model: str = "both"


@dataclass
class ProblemFile:
    generators: dict
    sigma: np.ndarray | None = None
    spec: SubalgebraSpec | None = None
    states: dict = field(default_factory=dict)
    superoperators: dict = field(default_factory=dict)
    experiment: Experiment = field(default_factory=Experiment)

    def generator(self, name: str | None):
        if name is None:
            if len(self.generators) != 1:
                raise InputError("several generators present; pick one by name")
            name = next(iter(self.generators))
        if name not in self.generators:
            raise InputError(f"unknown generator {name!r}")
        return self.generators[name]

    def state(self, name: str | None):
        if name is None:
            if len(self.states) != 1:
                raise InputError("several states present; pick one by name")
            name = next(iter(self.states))
        if name not in self.states:
            raise InputError(f"unknown state {name!r}")
        return self.states[name]

    def require_sigma(self) -> np.ndarray:
        if self.sigma is None:
            raise InputError("problem file has no 'sigma'")
        return self.sigma


def problem_from_json(obj: dict) -> ProblemFile:
    if not isinstance(obj, dict):
        raise InputError("problem file must be a JSON object")
    gens = {k: generator_from_json(v) for k, v in obj.get("generators", {}).items()}
    sigma = la.matrix_from_json(obj["sigma"]) if obj.get("sigma") is not None else None
    spec = SubalgebraSpec.from_json(obj["spec"]) if obj.get("spec") is not None else None
    states = {k: la.matrix_from_json(v) for k, v in obj.get("states", {}).items()}
    sups = {k: la.matrix_from_json(v) for k, v in obj.get("superoperators", {}).items()}
    exp = obj.get("experiment", {}) or {}
    try:
        experiment = Experiment(
            epsilons=[float(e) for e in exp.get("epsilons", Experiment().epsilons)],
            trials=int(exp.get("trials", 20)),
            seed=int(exp.get("seed", 0)),
            magnitudes=[float(m) for m in exp.get("magnitudes", [0.2])],
            model=str(exp.get("model", "both")),
        )
    except (TypeError, ValueError) as exc:
        raise InputError(f"malformed experiment block: {exc}") from exc
    dims = {g.dim for g in gens.values()}
    if sigma is not None:
        dims.add(sigma.shape[0])
    if spec is not None:
        dims.add(spec.dim)
    if len(dims) > 1:
        raise DimensionMismatch(f"inconsistent dimensions {sorted(dims)}")
    return ProblemFile(gens, sigma, spec, states, sups, experiment)


def load_problem(path: str) -> ProblemFile:
    import sys

    try:
        if path == "-":
            obj = json.load(sys.stdin)
        else:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {path}: {exc}") from exc
    return problem_from_json(obj)
