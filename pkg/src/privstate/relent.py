"""Upper estimation of the relative entropy of entanglement.

A Frank-Wolfe loop minimizes D(rho || omega) over separable omega represented
as an explicit convex mixture of product pure states across a chosen cut. Any
iterate is a feasible separable state, so the reported divergence is always a
certified upper bound; only its tightness depends on convergence.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .measures import SUPPORT_CUTOFF, vn_entropy
from .operators import (
    DEFAULT_DIM_BUDGET,
    Bipartition,
    DensityOperator,
    TensorOperator,
    ValidationError,
    check_budget,
    permute_subsystems,
)

EIG_FLOOR = 1e-12


@dataclasses.dataclass(frozen=True)
class FwParams:
    max_iters: int = 300
    restarts: int = 2
    oracle_sweeps: int = 12
    tol: float = 1e-7
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.max_iters, self.restarts, self.oracle_sweeps) < 1 or self.tol <= 0:
            raise ValidationError("solver parameters must be positive")


@dataclasses.dataclass(frozen=True)
class SeparableCandidate:
    """Convex mixture of product pure states across `cut`, in original dims order."""

    dims: tuple[int, ...]
    cut: Bipartition
    weights: np.ndarray
    left_vecs: np.ndarray  # (n_atoms, DL), grouped (left|right) basis
    right_vecs: np.ndarray  # (n_atoms, DR)

    def assemble(self) -> DensityOperator:
        w = np.asarray(self.weights, dtype=float)
        w = w / w.sum()
        dl = self.left_vecs.shape[1]
        dr = self.right_vecs.shape[1]
        mat = np.zeros((dl * dr, dl * dr), dtype=np.complex128)
        for wi, a, b in zip(w, self.left_vecs, self.right_vecs):
            psi = np.kron(a, b)
            mat += wi * np.outer(psi, psi.conj())
        perm = list(self.cut.left) + list(self.cut.right)
        grouped_dims = tuple(self.dims[p] for p in perm)
        op = TensorOperator(grouped_dims, mat)
        inv = [0] * len(perm)
        for pos, src in enumerate(perm):
            inv[src] = pos
        out = permute_subsystems(op, inv)
        return DensityOperator(out.dims, out.mat)


@dataclasses.dataclass(frozen=True)
class ErEstimate:
    value: float
    witness: SeparableCandidate
    converged: bool
    iterations: int
    gap: float

    def __iter__(self):
        yield self.value
        yield self.witness


def _divergence_terms(rho_mat: np.ndarray) -> float:
    lam = np.clip(np.linalg.eigvalsh(rho_mat), 0.0, None)
    lam = lam[lam > 0]
    return float((lam * np.log2(lam)).sum())  # Tr rho log2 rho


def _strict_cross_term(rho_mat: np.ndarray, vals: np.ndarray, vecs: np.ndarray) -> float:
    """Tr rho log2 omega over omega's support; +inf when rho leaks outside."""
    overlaps = np.real(np.einsum("ij,jk,ki->i", vecs.conj().T, rho_mat, vecs))
    kernel = vals < SUPPORT_CUTOFF
    if float(overlaps[kernel].sum()) > SUPPORT_CUTOFF:
        return -math.inf
    sup = ~kernel
    return float((overlaps[sup] * np.log2(vals[sup])).sum())


def _floored_cross_term(rho_mat: np.ndarray, vals: np.ndarray, vecs: np.ndarray) -> float:
    overlaps = np.real(np.einsum("ij,jk,ki->i", vecs.conj().T, rho_mat, vecs))
    return float((overlaps * np.log2(np.maximum(vals, EIG_FLOOR))).sum())


def _gradient(rho_mat: np.ndarray, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Gradient of omega -> -Tr rho log2 omega via eigenbasis divided differences."""
    lam = np.maximum(vals, EIG_FLOOR)
    logs = np.log2(lam)
    diff = np.subtract.outer(lam, lam)
    logdiff = np.subtract.outer(logs, logs)
    near = np.abs(diff) < 1e-14
    safe_diff = np.where(near, 1.0, diff)
    phi = np.where(near, 1.0 / (lam[:, None] * math.log(2.0)), logdiff / safe_diff)
    rho_eig = vecs.conj().T @ rho_mat @ vecs
    g = -(vecs @ (phi * rho_eig) @ vecs.conj().T)
    return 0.5 * (g + g.conj().T)


def _best_product(
    t: np.ndarray,
    rng: np.random.Generator,
    warm: tuple[np.ndarray, np.ndarray] | None,
    sweeps: int,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Heuristically minimize <a x b|G|a x b> by alternating eigenvector steps."""
    dl, dr = t.shape[0], t.shape[1]

    def polish(b: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        a = None
        for _ in range(sweeps):
            n_a = np.einsum("arbs,r,s->ab", t, b.conj(), b)
            n_a = 0.5 * (n_a + n_a.conj().T)
            vals_a, vecs_a = np.linalg.eigh(n_a)
            a = vecs_a[:, 0]
            n_b = np.einsum("arbs,a,b->rs", t, a.conj(), a)
            n_b = 0.5 * (n_b + n_b.conj().T)
            vals_b, vecs_b = np.linalg.eigh(n_b)
            b = vecs_b[:, 0]
        val = float(np.real(np.einsum("arbs,a,r,b,s->", t, a.conj(), b.conj(), a, b)))
        return val, a, b

    starts: list[np.ndarray] = []
    # deterministic start: best product approximation of G's bottom eigenvector
    g_flat = t.reshape(dl * dr, dl * dr)
    _, vecs = np.linalg.eigh(g_flat)
    psi = vecs[:, 0].reshape(dl, dr)
    _, _, vh = np.linalg.svd(psi)
    starts.append(vh[0])
    if warm is not None:
        starts.append(warm[1])
    for _ in range(2):
        v = rng.normal(size=dr) + 1j * rng.normal(size=dr)
        starts.append(v / np.linalg.norm(v))
    best = None
    for b0 in starts:
        cand = polish(np.asarray(b0, dtype=np.complex128))
        if best is None or cand[0] < best[0]:
            best = cand
    return best


def _golden_section(f, lo: float, hi: float, xtol: float = 1e-10) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def er_upper_fw(
    rho: DensityOperator,
    cut: Bipartition,
    params: FwParams = FwParams(),
) -> ErEstimate:
    """Frank-Wolfe upper bound on E_r across the cut, with its witness mixture."""
    cut.validate(rho.n_subsystems)
    perm = list(cut.left) + list(cut.right)
    grouped = permute_subsystems(rho, perm)
    dl = int(np.prod([rho.dims[p] for p in cut.left]))
    dr = int(np.prod([rho.dims[p] for p in cut.right]))
    r = grouped.mat
    d = dl * dr
    tr_rho_log_rho = _divergence_terms(r)

    best_global: tuple[float, list, bool, int, float] | None = None
    for restart in range(params.restarts):
        rng = np.random.default_rng([params.seed, restart])
        # omega_0 = 1/2 I/D + 1/2 diag(rho): a mixture of computational products
        weights = [0.5 / d + 0.5 * float(np.real(r[i, i])) for i in range(d)]
        atoms_l = [np.eye(dl, dtype=np.complex128)[i // dr] for i in range(d)]
        atoms_r = [np.eye(dr, dtype=np.complex128)[i % dr] for i in range(d)]
        omega = np.diag(np.asarray(weights, dtype=np.complex128))
        best_here: tuple[float, list, bool, int, float] | None = None
        warm = None
        gap = math.inf
        converged = False
        iters_used = 0
        for it in range(params.max_iters):
            iters_used = it + 1
            vals, vecs = np.linalg.eigh(omega)
            cross = _strict_cross_term(r, vals, vecs)
            value = tr_rho_log_rho - cross
            if best_here is None or value < best_here[0]:
                snapshot = list(zip(weights, atoms_l, atoms_r))
                best_here = (value, snapshot, converged, iters_used, gap)
            g = _gradient(r, vals, vecs)
            sub_val, a_vec, b_vec = _best_product(
                g.reshape(dl, dr, dl, dr), rng, warm, params.oracle_sweeps
            )
            warm = (a_vec, b_vec)
            gap = float(np.real(np.trace(omega @ g))) - sub_val
            if gap <= params.tol:
                converged = True
                break
            psi = np.kron(a_vec, b_vec)
            atom = np.outer(psi, psi.conj())

            def line_obj(gamma: float) -> float:
                mix = (1.0 - gamma) * omega + gamma * atom
                mv, mw = np.linalg.eigh(mix)
                return -_floored_cross_term(r, mv, mw)

            gamma = _golden_section(line_obj, 0.0, 1.0 - 1e-9)
            if gamma <= 0.0:
                continue
            omega = (1.0 - gamma) * omega + gamma * atom
            weights = [w * (1.0 - gamma) for w in weights] + [gamma]
            atoms_l.append(a_vec)
            atoms_r.append(b_vec)
            # drop numerically dead atoms to keep the witness compact
            if len(weights) > 4 * d:
                kept = [(w, al, ar) for w, al, ar in zip(weights, atoms_l, atoms_r) if w > 1e-15]
                weights = [w for w, _, _ in kept]
                atoms_l = [al for _, al, _ in kept]
                atoms_r = [ar for _, _, ar in kept]
        if best_here is not None:
            final = (best_here[0], best_here[1], converged, iters_used, gap)
            if best_global is None or final[0] < best_global[0]:
                best_global = final

    value, snapshot, converged, iters_used, gap = best_global
    ws = np.array([max(w, 0.0) for w, _, _ in snapshot])
    mask = ws > 1e-15
    ws = ws[mask]
    lv = np.array([al for (_, al, _) in snapshot], dtype=np.complex128)[mask]
    rv = np.array([ar for (_, _, ar) in snapshot], dtype=np.complex128)[mask]
    witness = SeparableCandidate(rho.dims, cut, ws / ws.sum(), lv, rv)
    return ErEstimate(float(value), witness, converged, iters_used, float(gap))


def er_trivial_upper(rho: DensityOperator) -> float:
    """D(rho || I/D) = log2 D - S(rho): the maximally mixed witness."""
    return math.log2(rho.dim) - vn_entropy(rho)


@dataclasses.dataclass(frozen=True)
class Thm2Report:
    value: float
    shield_estimate: float
    estimator: str
    note: str = "single-copy proxy"


def conditional_shield_product(spec, budget: int = DEFAULT_DIM_BUDGET):
    """sigma_0 x ... x sigma_(d-1) with the Alice-side cut collecting every copy's A' factors."""
    ns = len(spec.shield_dims)
    total = spec.shield_dim**spec.d
    check_budget(total, budget, "conditional shield product")
    mat = np.array([[1.0 + 0.0j]])
    for i in range(spec.d):
        u = spec.unitaries[i].mat
        mat = np.kron(mat, u @ spec.sigma.mat @ u.conj().T)
    dims = spec.shield_dims * spec.d
    alice = tuple(c * ns + a for c in range(spec.d) for a in range(spec.n_alice_shield))
    bob = tuple(i for i in range(ns * spec.d) if i not in alice)
    return DensityOperator(dims, mat), Bipartition(alice, bob)


def thm2_bound(
    spec,
    er_estimator: str = "fw",
    params: FwParams | None = None,
    budget: int = DEFAULT_DIM_BUDGET,
) -> Thm2Report:
    """log2 d + (1/d) * (single-copy E_r upper estimate of the conditional shield product)."""
    sigma_tilde, cut = conditional_shield_product(spec, budget)
    if er_estimator == "fw":
        est = er_upper_fw(sigma_tilde, cut, params or FwParams()).value
    elif er_estimator == "trivial":
        est = er_trivial_upper(sigma_tilde)
    else:
        raise ValidationError(f"unknown estimator {er_estimator!r}")
    return Thm2Report(math.log2(spec.d) + est / spec.d, est, er_estimator)
