"""Block subalgebras, their trace-preserving conditional expectations and
the explicit jump operators realising -(I - E)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg as la
from .errors import BadBlockStructure, VerificationFailed


@dataclass(frozen=True)
class SubalgebraSpec:
    """N = U (sum_k M_{n_k} (x) 1_{r_k}) U*."""

    blocks: tuple[tuple[int, int], ...]
    unitary: np.ndarray | None = None
    block_states: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        blocks = tuple((int(a), int(b)) for a, b in self.blocks)
        if not blocks or any(a < 1 or b < 1 for a, b in blocks):
            raise BadBlockStructure(f"invalid blocks {self.blocks!r}")
        object.__setattr__(self, "blocks", blocks)
        n = sum(a * b for a, b in blocks)
        if self.unitary is not None:
            u = la.as_square(self.unitary, "U")
            if u.shape[0] != n:
                raise BadBlockStructure(f"U has size {u.shape[0]}, blocks need {n}")
            if np.max(np.abs(la.dag(u) @ u - np.eye(n))) > 1e-10:
                raise BadBlockStructure("U is not unitary")
            u = u.copy()
            u.setflags(write=False)
            object.__setattr__(self, "unitary", u)
        if self.block_states is not None:
            states = []
            if len(self.block_states) != len(blocks):
                raise BadBlockStructure("one block state per block is required")
            for (_, r), t in zip(blocks, self.block_states):
                t = la.check_density(t, name="tau_k")
                if t.shape[0] != r:
                    raise BadBlockStructure(f"block state of size {t.shape[0]} for r = {r}")
                states.append(t)
            object.__setattr__(self, "block_states", tuple(states))

    @classmethod
    def trivial(cls, n: int) -> "SubalgebraSpec":
        """N = C I."""
        return cls(((1, n),))

    @classmethod
    def full(cls, n: int) -> "SubalgebraSpec":
        """N = M_n."""
        return cls(((n, 1),))

    @property
    def dim(self) -> int:
        return sum(a * b for a, b in self.blocks)

    @property
    def u(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex) if self.unitary is None else self.unitary

    def is_trace_preserving(self) -> bool:
        if self.block_states is None:
            return True
        return all(
            np.allclose(t, np.eye(t.shape[0]) / t.shape[0], atol=1e-12) for t in self.block_states
        )

    def offsets(self) -> list[int]:
        out, o = [], 0
        for a, b in self.blocks:
            out.append(o)
            o += a * b
        return out

    def basis(self) -> list[np.ndarray]:
        """Basis of N: U (e_ab (x) 1_r on block k) U*."""
        u = self.u
        out = []
        for (nk, rk), off in zip(self.blocks, self.offsets()):
            for a in range(nk):
                for b in range(nk):
                    m = np.zeros((self.dim, self.dim), complex)
                    e = np.zeros((nk, nk))
                    e[a, b] = 1.0
                    m[off:off + nk * rk, off:off + nk * rk] = np.kron(e, np.eye(rk))
                    out.append(u @ m @ la.dag(u))
        return out

    def commutant_basis(self) -> list[np.ndarray]:
        """Basis of N': U (1_n (x) e_ij on block k) U*."""
        u = self.u
        out = []
        for (nk, rk), off in zip(self.blocks, self.offsets()):
            for i in range(rk):
                for j in range(rk):
                    m = np.zeros((self.dim, self.dim), complex)
                    e = np.zeros((rk, rk))
                    e[i, j] = 1.0
                    m[off:off + nk * rk, off:off + nk * rk] = np.kron(np.eye(nk), e)
                    out.append(u @ m @ la.dag(u))
        return out

    def to_json(self) -> dict:
        out = {"blocks": [list(b) for b in self.blocks]}
        if self.unitary is not None:
            out["U"] = la.matrix_to_json(self.unitary)
        if self.block_states is not None:
            out["tau_k"] = [la.matrix_to_json(t) for t in self.block_states]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SubalgebraSpec":
        try:
            blocks = tuple(tuple(b) for b in obj["blocks"])
        except (KeyError, TypeError) as exc:
            raise BadBlockStructure("spec needs a 'blocks' list") from exc
        u = la.matrix_from_json(obj["U"]) if obj.get("U") is not None else None
        states = None
        if obj.get("tau_k") is not None:
            states = tuple(la.matrix_from_json(t) for t in obj["tau_k"])
        return cls(blocks, u, states)


def conditional_expectation(spec: SubalgebraSpec, x) -> np.ndarray:
    x = la.as_square(x)
    n = spec.dim
    if x.shape[0] != n:
        raise BadBlockStructure(f"matrix of size {x.shape[0]} for a spec of size {n}")
    u = spec.u
    y = la.dag(u) @ x @ u
    z = np.zeros_like(y)
    for k, ((nk, rk), off) in enumerate(zip(spec.blocks, spec.offsets())):
        d = nk * rk
        blk = y[off:off + d, off:off + d].reshape(nk, rk, nk, rk)
        tk = np.eye(rk) / rk if spec.block_states is None else spec.block_states[k]
        red = np.einsum("aibj,ji->ab", blk, tk)
        z[off:off + d, off:off + d] = np.kron(red, np.eye(rk))
    return u @ z @ la.dag(u)


def expectation_superop(spec: SubalgebraSpec) -> np.ndarray:
    return la.superop_from_function(lambda x: conditional_expectation(spec, x), spec.dim)


@dataclass(frozen=True)
class DepolarizerConstruction:
    """Self-adjoint jumps with sum_j L_{V_j} = -scale (I - E_{N,tau})."""

    spec: SubalgebraSpec
    jumps: tuple[np.ndarray, ...]
    scale: float
    residual: float

    def generator(self, normalized: bool = True):
        from .generator import LindbladGenerator

        w = 1.0 / self.scale if normalized and self.scale > 0 else 1.0
        n = self.spec.dim
        return LindbladGenerator(
            np.zeros((n, n), complex), tuple((v, w) for v in self.jumps)
        )


def depolarizer_generator(spec: SubalgebraSpec, tol: float = 1e-9) -> DepolarizerConstruction:
    """Jumps 1_{n_k} (x) (r_1/r_k) V_{i,r_k}, V_{i,r} a self-adjoint basis of M_r
    with Tr(V* V) = r, embedded in block k and conjugated by U."""
    from .generator import superoperator_matrix, LindbladGenerator

    if not spec.is_trace_preserving():
        raise BadBlockStructure("the explicit construction needs uniform block states")
    n = spec.dim
    u = spec.u
    r1 = spec.blocks[0][1]
    jumps = []
    for (nk, rk), off in zip(spec.blocks, spec.offsets()):
        d = nk * rk
        for v in la.hermitian_basis(rk, include_identity=True):
            m = np.zeros((n, n), complex)
            m[off:off + d, off:off + d] = np.kron(np.eye(nk), (r1 / rk) * v)
            m = u @ m @ la.dag(u)
            m = 0.5 * (m + la.dag(m))
            # multiples of the identity generate nothing
            if np.max(np.abs(m - la.tau(m) * np.eye(n))) < 1e-12:
                continue
            jumps.append(m)
    target = np.eye(n * n) - expectation_superop(spec)
    if not jumps:
        if np.max(np.abs(target)) > tol:
            raise VerificationFailed("no jumps, yet E is not the identity")
        return DepolarizerConstruction(spec, (), 0.0, 0.0)
    s = superoperator_matrix(LindbladGenerator.from_jumps(jumps, dim=n))
    scale = float(-np.real(np.vdot(target, s)) / np.real(np.vdot(target, target)))
    residual = float(np.linalg.norm(s + scale * target, 2))
    if residual > tol * max(1.0, scale):
        raise VerificationFailed(
            f"construction misses -scale (I - E) by {residual:.3e} in operator norm"
        )
    for j in jumps:
        j.setflags(write=False)
    return DepolarizerConstruction(spec, tuple(jumps), scale, residual)


def upper_bound_unit(spec: SubalgebraSpec) -> np.ndarray:
    """Gradient matrix of exactly -(I - E_{N,tau}) (construction over its scale)."""
    from .gradient import derivation_matrix
    from .generator import to_standard_form

    dep = depolarizer_generator(spec)
    n = spec.dim
    if not dep.jumps:
        return np.zeros((n**3, n**3), complex)
    d = derivation_matrix(to_standard_form(dep.generator(normalized=True)))
    return la.dag(d) @ d


def in_commutant(spec: SubalgebraSpec, ops: Sequence[np.ndarray]) -> float:
    """Largest commutator between ``ops`` and a basis of N."""
    worst = 0.0
    for b in spec.basis():
        for v in ops:
            worst = max(worst, float(np.max(np.abs(b @ v - v @ b))))
    return worst
