"""Unbiased Monte Carlo estimators of the limiting projected-ensemble moments.

States are sampled by drawing Haar unitaries on the t temporal qubits
(counter-based Philox streams keyed by batch index, so the sampled set is
independent of how work is chunked), forming

    pbc:  psi~[s] = Tr(W^s . reduce(U)),
    obc:  psi~[s] = Tr(W^s . reduce(|U'><U|)),   |U'> = U'|0..0>, <U| = <+..+|U^+,

and accumulating weighted k-fold projector powers.  The physical moment uses
weight <psi~|psi~>^(1-k); the integer-n replica surrogate uses weight
<psi~|psi~>^n, whose trace normalization is exactly the ratio-estimator
denominator mean <psi~|psi~>^(k+n).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dual_tensors import WTensor, build_w, min_depth, reduce_temporal_operator
from .kim import haar_moment_operator
from .linalg import trace_norm

DEFAULT_CHECKPOINT_START = 1000
PLATEAU_SPREAD = 0.10


class McError(ValueError):
    pass


@dataclass(frozen=True)
class McConfig:
    k: int
    t: int
    n_a: int
    bc: str = "pbc"
    g: float = 0.3
    samples: int = 100_000
    batch_size: int = 0  # 0 -> auto
    seed: int = 12345
    checkpoints: tuple = ()

    def __post_init__(self):
        if self.bc not in ("pbc", "obc"):
            raise McError("bc must be 'pbc' or 'obc'")
        if self.k < 1 or self.samples < 1:
            raise McError("need k >= 1 and samples >= 1")
        if self.t < min_depth(self.n_a) or self.t > 10:
            raise McError("need ceil(n_a/2) <= t <= 10")
        cps = self.resolved_checkpoints()
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise McError("checkpoints must be strictly increasing")
        if self.samples < cps[0]:
            raise McError("samples below the first checkpoint")

    def resolved_checkpoints(self) -> tuple:
        if self.checkpoints:
            return tuple(self.checkpoints)
        cps = []
        c = min(DEFAULT_CHECKPOINT_START, self.samples)
        while c < self.samples:
            cps.append(c)
            c *= 10
        cps.append(self.samples)
        return tuple(cps)

    def resolved_batch(self) -> int:
        if self.batch_size:
            return self.batch_size
        auto = int(min(100_000, max(1000, self.samples // 100)))
        return min(auto, self.resolved_checkpoints()[0])


@dataclass
class ConvergenceSeries:
    points: list = field(default_factory=list)  # (M_i, delta)
    converged_value: float = float("nan")
    converged: bool = False

    def finalize(self):
        tail = [d for _, d in self.points[-3:]]
        self.converged_value = float(np.mean(tail))
        if len(tail) == 3 and self.converged_value > 0:
            spread = (max(tail) - min(tail)) / self.converged_value
            self.converged = bool(spread <= PLATEAU_SPREAD)
        return self


def sample_haar_unitary(q: int, rng: np.random.Generator) -> np.ndarray:
    """One Haar unitary on q qubits: Ginibre draw, QR, R-diagonal phases out."""
    if q > 10:
        raise McError("q capped at 10 qubits")
    d = 2**q
    z = (rng.standard_normal((1, d, d)) + 1j * rng.standard_normal((1, d, d))) / np.sqrt(2)
    return _kernels.haar_from_ginibre(z)[0]


def _batch_rng(seed: int, batch_index: int) -> np.random.Generator:
    key = np.array([seed, batch_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _haar_batch(rng: np.random.Generator, d: int, b: int) -> np.ndarray:
    z = (rng.standard_normal((b, d, d)) + 1j * rng.standard_normal((b, d, d))) / np.sqrt(2)
    return _kernels.haar_from_ginibre(z)


def _reduce_batch(mats: np.ndarray, t: int, t0: int) -> np.ndarray:
    d0, dr = 2**t0, 2 ** (t - t0)
    b = mats.shape[0]
    return np.einsum("bircr->bic", mats.reshape(b, d0, dr, d0, dr))


def mc_projected_state(u: np.ndarray, u_prime: np.ndarray | None, bc: str, w: WTensor):
    """Unnormalized projected state for one sampled unitary (pair)."""
    t = int(round(np.log2(u.shape[0])))
    if bc == "pbc":
        R = reduce_temporal_operator(u, w.t_legs)
    else:
        if u_prime is None:
            raise McError("obc needs a second unitary")
        ket = u_prime[:, 0]  # U'|0>
        bra = u @ np.full(2**t, 2.0 ** (-t / 2))  # U|+>; conjugated below
        R = reduce_temporal_operator(np.outer(ket, bra.conj()), w.t_legs)
    psi = np.einsum("sxy,yx->s", w.data, R)
    return psi, float(np.vdot(psi, psi).real)


def _batch_states(cfg: McConfig, w: WTensor, batch_index: int, b: int) -> np.ndarray:
    rng = _batch_rng(cfg.seed, batch_index)
    d = 2**cfg.t
    if cfg.bc == "pbc":
        U = _haar_batch(rng, d, b)
        R = _reduce_batch(U, cfg.t, w.t_legs)
    else:
        UB = _haar_batch(rng, d, 2 * b)
        ket = UB[b:, :, 0]  # U'|0>
        bra = UB[:b] @ np.full(d, 2.0 ** (-cfg.t / 2))  # U|+>
        outer = np.einsum("bi,bj->bij", ket, bra.conj())
        R = _reduce_batch(outer, cfg.t, w.t_legs)
    return np.einsum("sxy,byx->bs", w.data, R)


@dataclass
class McEstimate:
    rho: np.ndarray
    series: ConvergenceSeries
    batch_nums: list
    batch_dens: list
    k: int
    n_a: int

    def delta(self) -> float:
        return 0.5 * trace_norm(self.rho - haar_moment_operator(self.n_a, self.k))

    def jackknife(self):
        """Leave-one-batch-out estimates -> (delta SE, entrywise SE matrix)."""
        B = len(self.batch_nums)
        if B < 2:
            raise McError("jackknife needs at least 2 batches")
        num = np.sum(self.batch_nums, axis=0)
        den = float(np.sum(self.batch_dens))
        haar = haar_moment_operator(self.n_a, self.k)
        deltas = np.empty(B)
        rhos = np.empty((B,) + num.shape, dtype=complex)
        for i in range(B):
            rho_i = (num - self.batch_nums[i]) / (den - self.batch_dens[i])
            rhos[i] = rho_i
            deltas[i] = 0.5 * trace_norm(rho_i - haar)
        fac = (B - 1) / B
        se_delta = float(np.sqrt(fac * ((deltas - deltas.mean()) ** 2).sum()))
        se_entry = np.sqrt(fac * (np.abs(rhos - rhos.mean(axis=0)) ** 2).sum(axis=0))
        return se_delta, se_entry


def _run_estimator(cfg: McConfig, w: WTensor, weight_exponent: float) -> McEstimate:
    """Shared accumulation path: weights <psi~|psi~>^weight_exponent."""
    dA = 2**cfg.n_a
    dim = dA**cfg.k
    if dim > 4096:
        raise McError("replicated space too large")
    batch = cfg.resolved_batch()
    checkpoints = cfg.resolved_checkpoints()
    num = np.zeros((dim, dim), dtype=complex)
    den = 0.0
    batch_nums, batch_dens = [], []
    series = ConvergenceSeries()
    done = 0
    bi = 0
    next_cp = 0
    haar = haar_moment_operator(cfg.n_a, cfg.k)
    while done < cfg.samples:
        b = min(batch, cfg.samples - done)
        psi = _batch_states(cfg, w, bi, b)
        nrm = np.einsum("bs,bs->b", psi, psi.conj()).real
        ok = nrm > 1e-280
        wgt = np.where(ok, nrm, 1.0) ** weight_exponent * ok
        bnum = _kernels.moment_accumulate(psi, wgt, cfg.k)
        num += bnum
        bden = float(np.trace(bnum).real)
        den += bden
        batch_nums.append(bnum)
        batch_dens.append(bden)
        done += b
        bi += 1
        while next_cp < len(checkpoints) and done >= checkpoints[next_cp]:
            if den <= 0:
                raise McError("all sampled norms vanished; aborting")
            rho = num / den
            series.points.append(
                (checkpoints[next_cp], 0.5 * trace_norm(rho - haar))
            )
            next_cp += 1
    if den <= 0:
        raise McError("all sampled norms vanished; aborting")
    rho = num / den
    rho = (rho + rho.conj().T) / 2
    return McEstimate(
        rho=rho, series=series.finalize(), batch_nums=batch_nums,
        batch_dens=batch_dens, k=cfg.k, n_a=cfg.n_a,
    )


def mc_moment(cfg: McConfig, w: WTensor | None = None) -> McEstimate:
    """Physical k-th moment estimator (weight exponent 1 - k)."""
    if w is None:
        w = build_w(cfg.n_a, cfg.g)
    return _run_estimator(cfg, w, 1 - cfg.k)


def mc_replica_check(cfg: McConfig, n: int, w: WTensor | None = None) -> McEstimate:
    """Integer-n replica surrogate estimator (weight exponent n)."""
    if n < 0:
        raise McError("replica exponent n must be a non-negative integer")
    if w is None:
        w = build_w(cfg.n_a, cfg.g)
    return _run_estimator(cfg, w, float(n))
