"""Lindblad generators: jump form, GKS form, standard form.

Internally every generator is kept in the "half" convention

    L(x) = i[H, x] + sum_j c_j (V_j* x V_j - 1/2 {V_j* V_j, x}).

Generators written with ``2 V* x V - {V* V, x}`` terms ("double") are
converted by V -> sqrt(2) V.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg as la
from .errors import (
    CoeffNotPSD,
    DimensionMismatch,
    FixedPointsNotAlgebra,
    InputError,
    NotDetailedBalanced,
    VerificationFailed,
)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LindbladGenerator:
    hamiltonian: np.ndarray
    jumps: tuple[tuple[np.ndarray, float], ...] = ()
    convention: str = "half"

    def __post_init__(self):
        h = la.as_square(self.hamiltonian, "H")
        if not la.is_hermitian(h):
            raise InputError("Hamiltonian is not Hermitian")
        if self.convention not in ("half", "double"):
            raise InputError(f"unknown convention {self.convention!r}")
        n = h.shape[0]
        jumps = []
        for v, c in self.jumps:
            v = la.as_square(v, "jump")
            if v.shape != (n, n):
                raise DimensionMismatch(f"jump of shape {v.shape} in dimension {n}")
            c = float(np.real(c))
            if c < 0:
                raise InputError(f"jump weight {c} is negative")
            jumps.append((_frozen(v), c))
        object.__setattr__(self, "hamiltonian", _frozen(0.5 * (h + la.dag(h))))
        object.__setattr__(self, "jumps", tuple(jumps))

    @classmethod
    def from_jumps(cls, jumps: Sequence, hamiltonian=None, weights=None, convention="half", dim=None):
        jumps = [np.asarray(v, dtype=complex) for v in jumps]
        if dim is None:
            if hamiltonian is not None:
                dim = np.asarray(hamiltonian).shape[0]
            elif jumps:
                dim = jumps[0].shape[0]
            else:
                raise InputError("cannot infer dimension of an empty generator")
        h = np.zeros((dim, dim), complex) if hamiltonian is None else hamiltonian
        weights = [1.0] * len(jumps) if weights is None else list(weights)
        return cls(h, tuple(zip(jumps, weights)), convention)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def kraus(self) -> list[np.ndarray]:
        """Jumps with weights folded in, half convention."""
        f = 2.0 if self.convention == "double" else 1.0
        return [np.sqrt(f * c) * v for v, c in self.jumps]

    def to_half(self) -> "LindbladGenerator":
        if self.convention == "half":
            return self
        return LindbladGenerator(
            self.hamiltonian, tuple((np.sqrt(2.0) * v, c) for v, c in self.jumps), "half"
        )

    def scaled(self, s: float) -> "LindbladGenerator":
        if s < 0:
            raise InputError("negative scaling does not give a generator")
        return LindbladGenerator(
            s * self.hamiltonian, tuple((v, s * c) for v, c in self.jumps), self.convention
        )

    def __call__(self, x) -> np.ndarray:
        x = la.as_square(x)
        h = self.hamiltonian
        out = 1j * (h @ x - x @ h)
        for k in self.kraus():
            kk = la.dag(k) @ k
            out = out + la.dag(k) @ x @ k - 0.5 * (kk @ x + x @ kk)
        return out

    def superoperator(self) -> np.ndarray:
        return superoperator_matrix(self)


@dataclass(frozen=True)
class GKSForm:
    """L x = i[H,x] + sum_ab c_ab (2 F_a* x F_b - F_a* F_b x - x F_a* F_b)."""

    basis: tuple[np.ndarray, ...]
    coeff: np.ndarray
    hamiltonian: np.ndarray

    def __post_init__(self):
        basis = tuple(_frozen(la.as_square(b)) for b in self.basis)
        coeff = la.as_square(self.coeff, "coeff")
        if coeff.shape[0] != len(basis):
            raise DimensionMismatch(f"coeff is {coeff.shape}, basis has {len(basis)} elements")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "coeff", _frozen(coeff))
        object.__setattr__(self, "hamiltonian", _frozen(self.hamiltonian))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def to_generator(self, tol: float | None = None) -> LindbladGenerator:
        c = la.require_hermitian(self.coeff, name="GKS coefficient matrix")
        lo, threshold = la.min_eig_margin(c, tol)
        if lo < threshold:
            raise CoeffNotPSD(f"GKS coefficient matrix has eigenvalue {lo:.3e}")
        w, u = np.linalg.eigh(c)
        jumps = []
        for g in range(len(w)):
            if w[g] <= 0:
                continue
            v = sum(np.conj(u[b, g]) * self.basis[b] for b in range(len(self.basis)))
            # factor 2 of the GKS form moves into the weight
            jumps.append((v, 2.0 * w[g]))
        return LindbladGenerator(self.hamiltonian, tuple(jumps), "half")


@dataclass(frozen=True)
class StandardForm:
    """Traceless, tau-orthonormal jumps ``unit_jumps`` with weights ``weights``.

    ``jumps`` holds the folded operators sqrt(c) V.
    """

    hamiltonian: np.ndarray
    unit_jumps: tuple[np.ndarray, ...]
    weights: tuple[float, ...]

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def jumps(self) -> list[np.ndarray]:
        return [np.sqrt(c) * v for v, c in zip(self.unit_jumps, self.weights)]

    def generator(self) -> LindbladGenerator:
        return LindbladGenerator(self.hamiltonian, tuple(zip(self.unit_jumps, self.weights)))


def superoperator_matrix(gen) -> np.ndarray:
    """n^2 x n^2 matrix of L on row-major vectorised M_n."""
    if isinstance(gen, (GKSForm, StandardForm)):
        gen = gen.to_generator() if isinstance(gen, GKSForm) else gen.generator()
    n = gen.dim
    ident = np.eye(n)
    h = gen.hamiltonian
    s = 1j * (la.superop_from_pair(h, ident) - la.superop_from_pair(ident, h))
    for k in gen.kraus():
        kk = la.dag(k) @ k
        s = s + la.superop_from_pair(la.dag(k), k)
        s = s - 0.5 * (la.superop_from_pair(kk, ident) + la.superop_from_pair(ident, kk))
    return s


def operator_norm(superop: np.ndarray) -> float:
    """2->2 norm on L^2(M, tau); the 1/n weight cancels, leaving the spectral norm."""
    return float(np.linalg.norm(superop, 2))


def generator_distance(gen_a, gen_b) -> float:
    return operator_norm(superoperator_matrix(gen_a) - superoperator_matrix(gen_b))


def _shift_hamiltonian(k0: np.ndarray, t: complex) -> np.ndarray:
    # L_{k0 + t I} = L_{k0} + i[H', .] with H' = -(i/2)(t k0* - conj(t) k0)
    return -0.5j * (t * la.dag(k0) - np.conj(t) * k0)


def to_standard_form(gen, tol: float | None = None) -> StandardForm:
    """Canonicalise a jump-form or GKS-form generator.

    Jump traces are moved into the Hamiltonian, the traceless parts are
    expanded in a tau-orthonormal basis and the resulting coefficient
    matrix is diagonalised (through an SVD of the expansion matrix).
    """
    if isinstance(gen, GKSForm):
        gen = gen.to_generator(tol)
    elif isinstance(gen, StandardForm):
        gen = gen.generator()
    n = gen.dim
    ident = np.eye(n, dtype=complex)
    h = np.array(gen.hamiltonian)
    traceless = []
    # rank decisions are made relative to the full jumps, trace parts included
    ref = max((np.sqrt(abs(la.inner_product(k, k))) for k in gen.kraus()), default=0.0)
    for k in gen.kraus():
        t = la.tau(k)
        k0 = k - t * ident
        h = h + _shift_hamiltonian(k0, t)
        traceless.append(k0)
    h = h - la.tau(h).real * ident
    h = 0.5 * (h + la.dag(h))
    basis = la.orthonormalize_traceless(traceless, ref=ref)
    if not basis:
        return StandardForm(_frozen(h), (), ())
    a = np.array([[la.inner_product(b, k0) for b in basis] for k0 in traceless])
    _, s, vh = np.linalg.svd(a, full_matrices=False)
    keep = s > la.tolerances.rank * s[0] if s.size else []
    units, weights = [], []
    for g in np.flatnonzero(keep):
        v = sum(vh[g, b] * basis[b] for b in range(len(basis)))
        units.append(_frozen(v))
        weights.append(float(s[g] ** 2))
    return StandardForm(_frozen(h), tuple(units), tuple(weights))


@dataclass
class ValidationResult:
    valid: bool
    violations: list[str] = field(default_factory=list)
    witnesses: dict = field(default_factory=dict)


def validate_lindblad(superop, tol: float | None = None) -> ValidationResult:
    """Check L(I) = 0, *-preservation and positivity of the gradient matrix."""
    from .gradient import gradient_matrix

    s = la.as_square(superop, "superoperator")
    n = int(round(np.sqrt(s.shape[0])))
    if n * n != s.shape[0]:
        raise DimensionMismatch(f"{s.shape[0]} is not a square dimension")
    tol = la.tolerances.psd if tol is None else tol
    scale = 1.0 + float(np.max(np.abs(s), initial=0.0))
    result = ValidationResult(True)

    unital = float(np.max(np.abs(s @ np.eye(n).reshape(-1))))
    result.witnesses["unital_residual"] = unital
    if unital > tol * scale:
        result.violations.append("L(I) != 0")

    star = 0.0
    for e in la.matrix_units(n):
        lhs = la.apply_superop(s, la.dag(e))
        rhs = la.dag(la.apply_superop(s, e))
        star = max(star, float(np.max(np.abs(lhs - rhs))))
    result.witnesses["star_residual"] = star
    if star > tol * scale:
        result.violations.append("L not *-preserving")

    m = gradient_matrix(s)
    herm = la.hermitian_residual(m)
    result.witnesses["m_hermitian_residual"] = herm
    if herm > tol * (1.0 + float(np.max(np.abs(m), initial=0.0))):
        result.violations.append("m_L not Hermitian")
    else:
        lo, threshold = la.min_eig_margin(m, tol)
        result.witnesses["m_min_eigenvalue"] = lo
        result.witnesses["m_threshold"] = threshold
        if lo < threshold:
            result.violations.append("m_L not positive semidefinite")
    result.valid = not result.violations
    return result


def _as_superop(gen) -> np.ndarray:
    if isinstance(gen, np.ndarray):
        return la.as_square(gen)
    return superoperator_matrix(gen)


def detailed_balance_residual(gen, sigma) -> float:
    """max |S^H G - G S| / (1 + max |G S|) with G the GNS Gram matrix."""
    sigma = la.check_density(sigma, strict=True, name="sigma")
    s = _as_superop(gen)
    g = la.gns_gram(sigma)
    gs = g @ s
    return float(np.max(np.abs(la.dag(s) @ g - gs))) / (1.0 + float(np.max(np.abs(gs))))


def check_detailed_balance(gen, sigma, tol: float = 1e-9) -> bool:
    """Self-adjointness of L for the GNS inner product Tr(sigma x* y)."""
    return detailed_balance_residual(gen, sigma) <= tol


@dataclass(frozen=True)
class DetailedBalanceData:
    """Generator written as L = sum_j c_j L_{V_j} with Delta_sigma(V_j) = e^{-w_j} V_j.

    ``partner[j]`` is the index of the jump proportional to V_j* (itself
    when w_j = 0). ``partition`` groups jump indices by equal w.
    """

    sigma: np.ndarray
    unit_jumps: tuple[np.ndarray, ...]
    weights: tuple[float, ...]
    omegas: tuple[float, ...]
    partner: tuple[int, ...]
    partition: tuple[tuple[int, ...], ...]
    block_omegas: tuple[float, ...]

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    def weighted_jumps(self) -> list[np.ndarray]:
        """W_j with L = sum_j e^{-w_j/2} L_{W_j}."""
        return [
            np.sqrt(c * np.exp(w / 2)) * v
            for v, c, w in zip(self.unit_jumps, self.weights, self.omegas)
        ]

    def generator(self) -> LindbladGenerator:
        return LindbladGenerator(
            np.zeros((self.dim, self.dim), complex), tuple(zip(self.unit_jumps, self.weights))
        )


def modular_blocks(sigma, omega_tol: float = 1e-9):
    """tau-orthonormal eigenbases of Delta_sigma on traceless matrices.

    Returns a list of ``(omega, basis)`` sorted by omega. Bases of the
    blocks ``omega`` and ``-omega`` are conjugates of each other, element
    by element; the ``omega = 0`` basis is self-adjoint.
    """
    sigma = la.check_density(sigma, strict=True, name="sigma")
    s, q = np.linalg.eigh(sigma)
    n = len(s)
    logs = np.log(s)
    groups: list[tuple[float, list[tuple[int, int]]]] = []
    for a in range(n):
        for b in range(n):
            w = logs[b] - logs[a]
            for g in groups:
                if abs(g[0] - w) <= omega_tol:
                    g[1].append((a, b))
                    break
            else:
                groups.append((w, [(a, b)]))

    def unit(a, b):
        return np.sqrt(n) * np.outer(q[:, a], np.conj(q[:, b]))

    blocks = {}
    for w, pairs in groups:
        if abs(w) <= omega_tol:
            herm = []
            for a, b in pairs:
                if a == b:
                    herm.append(np.outer(q[:, a], np.conj(q[:, a])))
                elif a < b:
                    e = np.outer(q[:, a], np.conj(q[:, b]))
                    herm.append(e + la.dag(e))
                    herm.append(1j * (e - la.dag(e)))
            basis = [0.5 * (b + la.dag(b)) for b in la.orthonormalize_traceless(herm)]
            blocks[0.0] = basis
        elif w > 0:
            blocks[w] = [unit(a, b) for a, b in pairs]
            blocks[-w] = [la.dag(unit(a, b)) for a, b in pairs]
    return sorted(blocks.items(), key=lambda kv: kv[0])


def db_spectral_data(gen, sigma, tol: float = 1e-8) -> DetailedBalanceData:
    """Rewrite a sigma-detailed-balanced generator in modular eigen-jumps."""
    sigma = la.check_density(sigma, strict=True, name="sigma")
    if not check_detailed_balance(gen, sigma, tol):
        raise NotDetailedBalanced(
            f"generator is not sigma-detailed balanced (residual {detailed_balance_residual(gen, sigma):.3e})"
        )
    sf = to_standard_form(gen)
    blocks = modular_blocks(sigma)
    basis = [b for _, bs in blocks for b in bs]
    slices, start = [], 0
    for w, bs in blocks:
        slices.append((w, slice(start, start + len(bs))))
        start += len(bs)
    # coefficient matrix C_ab with L = sum_ab C_ab (B_a* x B_b - ...)
    if sf.jumps:
        a = np.array([[la.inner_product(b, k) for b in basis] for k in sf.jumps])
        c = la.dag(a) @ a
    else:
        c = np.zeros((len(basis), len(basis)), complex)
    scale = 1.0 + float(np.max(np.abs(c), initial=0.0))
    block_id = np.empty(len(basis), int)
    for i, (_, sl) in enumerate(slices):
        block_id[sl] = i
    off = c[block_id[:, None] != block_id[None, :]]
    if off.size and np.max(np.abs(off)) > tol * scale:
        raise NotDetailedBalanced("coefficient matrix mixes modular eigenspaces")

    cut = la.tolerances.rank * scale
    units, weights, omegas, partner = [], [], [], []
    by_w = dict(slices)
    for w, sl in slices:
        cw = c[sl, sl]
        bs = basis[sl]
        if w == 0.0:
            if np.max(np.abs(cw.imag), initial=0.0) > tol * scale:
                raise NotDetailedBalanced("omega = 0 block is not real in a self-adjoint basis")
            lam, u = np.linalg.eigh(cw.real)
            for g in range(len(lam)):
                if lam[g] > cut:
                    units.append(sum(u[b, g] * bs[b] for b in range(len(bs))))
                    weights.append(float(lam[g]))
                    omegas.append(0.0)
                    partner.append(len(units) - 1)
        elif w > 0:
            lam, u = np.linalg.eigh(cw)
            conj_sl = by_w[-w]
            cc = c[conj_sl, conj_sl]
            # partner coordinates in the conjugate block are conj(u)
            lam_conj = np.real(np.einsum("ag,ab,bg->g", u, cc, np.conj(u)))
            rebuilt = (np.conj(u) * lam_conj) @ u.T
            if np.max(np.abs(rebuilt - cc), initial=0.0) > tol * scale:
                raise NotDetailedBalanced(f"conjugate block of omega={w:.6g} is not paired")
            for g in range(len(lam)):
                if lam[g] <= cut and lam_conj[g] <= cut:
                    continue
                v = sum(np.conj(u[b, g]) * bs[b] for b in range(len(bs)))
                units.append(v)
                weights.append(float(max(lam[g], 0.0)))
                omegas.append(float(w))
                units.append(la.dag(v))
                weights.append(float(max(lam_conj[g], 0.0)))
                omegas.append(float(-w))
                i = len(units)
                partner.extend([i - 1, i - 2])
    block_omegas = sorted(set(omegas))
    partition = tuple(
        tuple(j for j, w in enumerate(omegas) if w == bw) for bw in block_omegas
    )
    return DetailedBalanceData(
        sigma=_frozen(sigma),
        unit_jumps=tuple(_frozen(v) for v in units),
        weights=tuple(weights),
        omegas=tuple(omegas),
        partner=tuple(partner),
        partition=partition,
        block_omegas=tuple(block_omegas),
    )


@dataclass(frozen=True)
class FixedPointAlgebra:
    basis: tuple[np.ndarray, ...]
    spec: object  # SubalgebraSpec

    @property
    def dim(self) -> int:
        return len(self.basis)


def commutant_basis(ops: Sequence[np.ndarray], n: int) -> list[np.ndarray]:
    """Tr-orthonormal basis of {X : [A, X] = 0 for all A in ops}."""
    ident = np.eye(n)
    rows = [la.superop_from_pair(a, ident) - la.superop_from_pair(ident, a) for a in ops]
    if not rows:
        return [e for e in la.matrix_units(n)]
    floor = la.tolerances.rank * max(1.0, max(float(np.linalg.norm(a)) for a in ops))
    ns = la.nullspace(np.vstack(rows), atol=floor)
    return [ns[:, i].reshape(n, n) for i in range(ns.shape[1])]


def fixed_point_algebra(gen, seed: int = 0, tol: float = 1e-9) -> FixedPointAlgebra:
    """Joint commutant of {V_j, V_j*, H} together with its block structure."""
    sf = to_standard_form(gen)
    n = sf.dim
    ops = []
    for k in sf.jumps:
        ops.extend([k, la.dag(k)])
    if np.max(np.abs(sf.hamiltonian), initial=0.0) > 0:
        ops.append(sf.hamiltonian)
    basis = commutant_basis(ops, n)
    s = superoperator_matrix(sf)
    scale = 1.0 + float(np.max(np.abs(s), initial=0.0))
    for x in basis:
        if np.max(np.abs(la.apply_superop(s, x))) > tol * scale:
            raise FixedPointsNotAlgebra("commutant element is not a fixed point")
    kernel_dim = la.nullspace(s, 1e-9, atol=tol * scale).shape[1]
    if kernel_dim != len(basis):
        raise FixedPointsNotAlgebra(
            f"ker L has dimension {kernel_dim} but the commutant has {len(basis)}"
        )
    spec = block_structure(basis, n, seed=seed)
    return FixedPointAlgebra(tuple(_frozen(b) for b in basis), spec)


def _group_eigenvalues(w: np.ndarray, gap: float) -> list[np.ndarray]:
    groups, cur = [], [0]
    thr = gap * (1.0 + float(np.max(np.abs(w), initial=0.0)))
    for i in range(1, len(w)):
        if w[i] - w[i - 1] > thr:
            groups.append(np.array(cur))
            cur = []
        cur.append(i)
    groups.append(np.array(cur))
    return groups


def _random_element(basis, rng, hermitian=True):
    coef = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
    x = sum(c * b for c, b in zip(coef, basis))
    return 0.5 * (x + la.dag(x)) if hermitian else x


def block_structure(basis: Sequence[np.ndarray], n: int, seed: int = 0,
                    gap: float = 1e-7, attempts: int = 16):
    """Recover blocks (n_k, r_k) and U with U* N U = sum_k M_{n_k} (x) 1_{r_k}.

    ``basis`` must span a unital *-subalgebra N of M_n.
    """
    from .subalgebra import SubalgebraSpec

    rng = np.random.default_rng(seed)
    basis = [np.asarray(b, complex) for b in basis]

    # centre: combinations of the basis commuting with every basis element
    rows = []
    for bk in basis:
        rows.append(np.array([(bk @ bi - bi @ bk).reshape(-1) for bi in basis]).T)
    # basis elements have unit size, so an absolute floor separates rounding noise
    floor = la.tolerances.rank * max(float(np.linalg.norm(b)) for b in basis)
    cns = la.nullspace(np.vstack(rows), atol=floor)
    centre = [sum(cns[i, j] * basis[i] for i in range(len(basis))) for j in range(cns.shape[1])]

    for _ in range(attempts):
        z = _random_element(centre, rng)
        w, q = np.linalg.eigh(z)
        groups = _group_eigenvalues(w, gap)
        if len(groups) == len(centre):
            break
    else:
        raise VerificationFailed("could not separate the centre with random probes")

    blocks = []
    for g in groups:
        qk = q[:, g]
        d = qk.shape[1]
        comp = [la.dag(qk) @ b @ qk for b in basis]
        cvecs = np.array([c.reshape(-1) for c in comp]).T
        kdim = la.range_basis(cvecs, 1e-9).shape[1]
        nk = int(round(np.sqrt(kdim)))
        if nk * nk != kdim or d % nk:
            raise FixedPointsNotAlgebra(f"block of size {d} with algebra dimension {kdim}")
        rk = d // nk
        uk = _factor_block(comp, nk, rk, rng, gap, attempts)
        blocks.append((nk, rk, qk @ uk))
    blocks.sort(key=lambda t: (t[0], t[1]))
    u = np.hstack([b[2] for b in blocks])
    if len(blocks) == 1 and blocks[0][0] in (1, n):
        u = None  # C I and M_n are unitarily invariant
    spec = SubalgebraSpec(tuple((b[0], b[1]) for b in blocks), u)
    # every basis element must be fixed by the recovered projection onto N
    from .subalgebra import conditional_expectation

    for b in basis:
        if np.max(np.abs(conditional_expectation(spec, b) - b)) > 1e-7 * (1 + np.max(np.abs(b))):
            raise FixedPointsNotAlgebra("recovered block structure does not contain N")
    return spec


def _factor_block(comp, nk, rk, rng, gap, attempts):
    """Unitary V with V* A V in M_nk (x) 1_rk for the compressed factor ``comp``."""
    d = nk * rk
    if nk == 1:
        return np.eye(d, dtype=complex)
    for _ in range(attempts):
        h = _random_element(comp, rng)
        w, q = np.linalg.eigh(h)
        groups = _group_eigenvalues(w, gap)
        if len(groups) == nk and all(len(g) == rk for g in groups):
            break
    else:
        raise VerificationFailed("could not split a simple block with random probes")
    spaces = [q[:, g] for g in groups]
    for _ in range(attempts):
        x = _random_element(comp, rng, hermitian=False)
        cols = [spaces[0]]
        ok = True
        for ga in spaces[1:]:
            t = la.dag(ga) @ x @ spaces[0]
            scale = np.linalg.norm(t) / np.sqrt(rk)
            if scale < 1e-6 * (1 + np.linalg.norm(x)):
                ok = False
                break
            cols.append(ga @ (t / scale))
        if ok:
            v = np.hstack(cols)
            if np.max(np.abs(la.dag(v) @ v - np.eye(d))) < 1e-7:
                return v
    raise FixedPointsNotAlgebra("compressed algebra is not of the form M_n (x) 1_r")
