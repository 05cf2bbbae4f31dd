"""Exact statevector simulation of the kicked Ising chain and its projected ensemble.

The Floquet step is U_F = U_h exp(-i H_Ising) with U_h = exp(-i h sum_i Y_i)
and H_Ising the nearest-neighbour ZZ chain plus longitudinal field (plus
boundary fields for open boundaries).  All Ising terms commute, so the
Ising factor is applied as one exact diagonal phase vector.

At the self-dual point |j| = |h| = pi/4 the reduced state of a bulk block
of n_a qubits is exactly maximally mixed for every ceil(n_a/2) <= t below
the finite-size wrap-around window, for any boundary fields (the chain ends
stay outside the block's light cone there).  Higher moments of the
projected ensemble do feel the boundary fields at finite N; the defaults
b1 = bn = pi/4 complete the end sites' gate structure (a pi/4 field is a
ZZ coupling to a frozen |0> neighbour) and are the values under which the
finite chain tracks the thermodynamic-limit ensemble most closely.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .dual_tensors import PI4, bath_side_unitary, kick_matrix, spin_table
from .linalg import (
    haar_moment_operator,
    kron_all,
    partial_trace,
    permutation_vector_state,
    trace_norm,
)
from .permgroup import enumerate_sym, weingarten_table

P_FLOOR = 1e-14  # outcomes below this Born weight carry a null state
G_GUARD_BAND = 1e-3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class KimConfig:
    n: int
    n_a: int
    t: int
    bc: str = "pbc"
    g: float = 0.3
    j: float = PI4
    h: float = PI4
    b1: float = PI4
    bn: float = PI4
    a_offset: int | None = None
    self_dual: bool = True
    g_guard: float = G_GUARD_BAND

    def __post_init__(self):
        if self.bc not in ("pbc", "obc"):
            raise ConfigError(f"bc must be 'pbc' or 'obc', got {self.bc!r}")
        if not 1 <= self.n_a < self.n:
            raise ConfigError("need 1 <= n_a < n")
        if self.t < 0:
            raise ConfigError("t must be non-negative")
        off = self.offset
        if not 0 <= off <= self.n - self.n_a:
            raise ConfigError(f"subsystem [{off}, {off + self.n_a}) falls off the chain")
        if self.self_dual and not (
            np.isclose(abs(self.j), PI4) and np.isclose(abs(self.h), PI4)
        ):
            raise ConfigError("self-dual mode requires |j| = |h| = pi/4")
        r = self.g % (np.pi / 8)
        if min(r, np.pi / 8 - r) < self.g_guard:
            raise ConfigError(
                f"g={self.g} within guard band {self.g_guard} of a multiple of pi/8"
            )

    @property
    def offset(self) -> int:
        if self.a_offset is not None:
            return self.a_offset
        return self.n // 2 - self.n_a // 2  # block centered on site n//2

    @property
    def n_b(self) -> int:
        return self.n - self.n_a

    def wraparound(self, t: int | None = None) -> bool:
        """True when t exceeds the pre-recurrence window (n - n_a)/2 - 1."""
        tt = self.t if t is None else t
        return tt > (self.n - self.n_a) / 2 - 1


def ising_phase_vector(cfg: KimConfig) -> np.ndarray:
    """Diagonal of exp(-i H_Ising) in the computational basis."""
    spins = spin_table(cfg.n)
    energy = cfg.g * spins.sum(axis=0)
    n_bonds = cfg.n if cfg.bc == "pbc" else cfg.n - 1
    for i in range(n_bonds):
        energy = energy + cfg.j * spins[i] * spins[(i + 1) % cfg.n]
    if cfg.bc == "obc":
        energy = energy + cfg.b1 * spins[0] + cfg.bn * spins[cfg.n - 1]
    return np.exp(-1j * energy)


def apply_single_qubit(state: np.ndarray, mat: np.ndarray, i: int, n: int) -> np.ndarray:
    st = np.moveaxis(state.reshape((2,) * n), i, -1)
    st = st @ mat.T
    return np.moveaxis(st, -1, i).reshape(-1)


def apply_floquet(state: np.ndarray, cfg: KimConfig, phases: np.ndarray | None = None) -> np.ndarray:
    if phases is None:
        phases = ising_phase_vector(cfg)
    state = state * phases
    K = kick_matrix(cfg.h)
    for i in range(cfg.n):
        state = apply_single_qubit(state, K, i, cfg.n)
    return state


def build_floquet(cfg: KimConfig) -> np.ndarray:
    """Dense 2^n x 2^n Floquet matrix (small n only)."""
    if cfg.n > 14:
        raise ConfigError(
            f"dense Floquet matrix at n={cfg.n} needs "
            f"~{(2**cfg.n)**2 * 16 / 1e9:.1f} GB; capped at n=14"
        )
    U_kick = kron_all([kick_matrix(cfg.h)] * cfg.n)
    return U_kick * ising_phase_vector(cfg)[None, :]


def plus_state(n: int) -> np.ndarray:
    return np.full(2**n, 2.0 ** (-n / 2), dtype=complex)


def evolve(cfg: KimConfig) -> np.ndarray:
    """|Psi(t)> after t Floquet steps from the x-polarized product state."""
    state = plus_state(cfg.n)
    phases = ising_phase_vector(cfg)
    for _ in range(cfg.t):
        state = apply_floquet(state, cfg, phases)
    return state


@dataclass
class ProjectedEnsemble:
    """Bath-outcome resolved pure states on the subsystem.

    entries[z] = (p(z), normalized state or None when p(z) < P_FLOOR);
    z runs over bath outcomes with the left-bath bits most significant.
    """

    n_a: int
    entries: list = field(default_factory=list)

    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.entries])

    def mean_state(self) -> np.ndarray:
        """sum_z p(z) |psi(z)><psi(z)| = reduced density matrix of the chain."""
        rho = np.zeros((2**self.n_a, 2**self.n_a), dtype=complex)
        for p, psi in self.entries:
            if psi is not None:
                rho += p * np.outer(psi, psi.conj())
        return rho


def _subsystem_amplitudes(state: np.ndarray, cfg: KimConfig) -> np.ndarray:
    """amps[z, sigma] = <z1 sigma z2|Psi>, z = (z1, z2) with z1 bits leading."""
    off = cfg.offset
    A = state.reshape(2**off, 2**cfg.n_a, 2 ** (cfg.n - cfg.n_a - off))
    return np.transpose(A, (0, 2, 1)).reshape(2**cfg.n_b, 2**cfg.n_a)


def projected_ensemble(state: np.ndarray, cfg: KimConfig) -> ProjectedEnsemble:
    amps = _subsystem_amplitudes(state, cfg)
    p = np.einsum("zs,zs->z", amps, amps.conj()).real
    entries = []
    for z in range(amps.shape[0]):
        if p[z] < P_FLOOR:
            entries.append((float(p[z]), None))
        else:
            entries.append((float(p[z]), amps[z] / np.sqrt(p[z])))
    return ProjectedEnsemble(n_a=cfg.n_a, entries=entries)


def moment_operator(ens: ProjectedEnsemble, k: int) -> np.ndarray:
    """rho^(k) = sum_z p(z) (|psi(z)><psi(z)|)^{(x)k}."""
    if ens.n_a * k > 14:
        raise ValueError("replicated dimension too large")
    kept = [(p, psi) for p, psi in ens.entries if psi is not None]
    psi = np.array([psi for _, psi in kept])
    w = np.array([p for p, _ in kept])
    out = _kernels.moment_accumulate(psi, w, k)
    return out / np.trace(out)


def moment_from_state(state: np.ndarray, cfg: KimConfig, k: int, batch: int = 1 << 16) -> np.ndarray:
    """Streaming moment accumulation over bath outcomes (never stores states)."""
    if cfg.n_a * k > 14:
        raise ValueError("replicated dimension too large")
    amps = _subsystem_amplitudes(state, cfg)
    dim = (2**cfg.n_a) ** k
    out = np.zeros((dim, dim), dtype=complex)
    for lo in range(0, amps.shape[0], batch):
        blk = amps[lo : lo + batch]
        p = np.einsum("zs,zs->z", blk, blk.conj()).real
        w = np.where(p < P_FLOOR, 0.0, p ** (1 - k))
        _kernels.moment_accumulate(blk, w, k, out)
    return out / np.trace(out)


def delta_k(rho: np.ndarray, k: int) -> float:
    """Half trace distance to the Haar moment of matching order."""
    dim = rho.shape[0]
    d = round(dim ** (1.0 / k))
    if d**k != dim:
        raise ValueError(f"dimension {dim} is not a k={k} replica power")
    n_a = int(round(np.log2(d)))
    return 0.5 * trace_norm(rho - haar_moment_operator(n_a, k))


def design_time(series: dict, eps: float):
    """Smallest t with Delta(t) <= eps, or None when never reached."""
    for t in sorted(series):
        if series[t] <= eps:
            return t
    return None


def design_times(series_by_k: dict, eps: float) -> dict:
    """Design times per k; asserts the monotonicity t_{k+1} >= t_k."""
    out = {}
    prev = None
    for k in sorted(series_by_k):
        tk = design_time(series_by_k[k], eps)
        if prev is not None and tk is not None and prev[1] is not None and tk < prev[1]:
            raise AssertionError(f"design times not monotone: t_{k} < t_{prev[0]}")
        out[k] = tk
        prev = (k, tk)
    return out


def entanglement_entropy(state: np.ndarray, n: int, block_start: int, block_len: int) -> float:
    """Von Neumann entropy (bits) of a contiguous block."""
    pre = block_start
    post = n - block_start - block_len
    M = state.reshape(2**pre, 2**block_len, 2**post)
    M = np.transpose(M, (1, 0, 2)).reshape(2**block_len, -1)
    s = np.linalg.svd(M, compute_uv=False)
    p = s**2
    p = p[p > 1e-14]
    return float(-(p * np.log2(p)).sum())


def reduced_density_matrix(state: np.ndarray, cfg: KimConfig) -> np.ndarray:
    off = cfg.offset
    dims = [2**off, 2**cfg.n_a, 2 ** (cfg.n - cfg.n_a - off)]
    return partial_trace(np.outer(state, state.conj()), dims, keep=[1])


def haar_unitary_moment(t: int, k: int) -> np.ndarray:
    """int dU (U (x) U*)^{(x)k} on t qubits, from the Weingarten table."""
    table = weingarten_table(k, 2**t, on_singular="pseudo")
    dim = (2**t) ** (2 * k)
    out = np.zeros((dim, dim), dtype=complex)
    for sig in enumerate_sym(k):
        for tau in enumerate_sym(k):
            wg = table.value(sig.compose(tau.inverse()))
            out += wg * np.outer(
                permutation_vector_state(tau, t, k),
                permutation_vector_state(sig, t, k).conj(),
            )
    return out


def dual_unitary_ensemble_check(cfg: KimConfig, k: int) -> float:
    """Trace distance of the one-sided bath temporal-map ensemble to Haar.

    Builds U(z) for every outcome z of the bath segment to the right of the
    subsystem, checks each is unitary, and returns
    || 2^-L sum_z (U(z) (x) U(z)*)^{(x)k} - int dU (U (x) U*)^{(x)k} ||_1.
    """
    if k == 0:
        return 0.0
    L = cfg.n - cfg.n_a - cfg.offset
    if L < 1:
        raise ConfigError("bath side length must be >= 1")
    if cfg.t > 6:
        raise ConfigError("temporal register capped at t <= 6")
    if 2 * cfg.t * k > 14:
        raise ConfigError("replicated temporal space too large")
    haar = haar_unitary_moment(cfg.t, k)
    acc = np.zeros_like(haar)
    for code in range(2**L):
        zs = [(code >> (L - 1 - i)) & 1 for i in range(L)]
        U = bath_side_unitary(zs, cfg.t, cfg.g, j=cfg.j, h=cfg.h)
        M = np.kron(U, U.conj())
        acc += kron_all([M] * k)
    acc /= 2**L
    return trace_norm(acc - haar)


def delta_series(cfg: KimConfig, k: int, t_max: int | None = None) -> dict:
    """Delta^(k)(t) for t = 0..t_max along one trajectory."""
    t_max = cfg.t if t_max is None else t_max
    out = {}
    state = plus_state(cfg.n)
    phases = ising_phase_vector(cfg)
    for t in range(t_max + 1):
        if t > 0:
            state = apply_floquet(state, replace(cfg, t=t), phases)
        out[t] = delta_k(moment_from_state(state, cfg, k), k)
    return out
