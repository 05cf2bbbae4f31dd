"""Thermodynamic-limit replica moments as permutation sums over S_{k+n}.

The moment surrogate of order (k, n) is a double sum over S_m, m = k + n,

    rho ~ sum_{s,t} f_bc(s t^-1) * D(s, t),

where the prefactor carries all time dependence,

    f_pbc = Wg(s t^-1, 2^t) * (2^(t - t0))^{#(s t^-1)},
    f_obc = (2^(t - t0))^{#(s t^-1)} / (2^t (2^t+1) ... (2^t+m-1))^2,

and D(s, t) is a t-independent diagram: m copies of (W (x) W*) contracted
between vectorized permutation states on the temporal legs, with the last n
replica (ket, bra) pairs closed by maximally-entangled caps.

The evaluation engine groups the double sum by the conjugacy class of
s t^-1.  Writing s = c t and using the relabeling identities of the W-fold
tensor, the inner sum over t collapses onto digit-multiset orbits of the
replica index, so each class costs one dense contraction instead of m!
of them.  Class-resolved diagrams are cached and reweighted per (t, bc).
"""
from __future__ import annotations

import math
import string
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from . import _kernels
from .dual_tensors import WTensor, build_w, min_depth
from .linalg import digit_permute_codes, haar_moment_operator, trace_norm
from .permgroup import (
    Permutation,
    conjugacy_classes,
    cycle_count,
    enumerate_sym,
    weingarten_table,
)

MAX_REPLICAS = 8        # hard cap on m = k + n
PRACTICAL_REPLICAS = 6  # dense-engine comfort zone, matches the n <= 6-k sweeps
_MEM_BUDGET_BYTES = 3_500_000_000


class ReplicaError(ValueError):
    pass


@dataclass(frozen=True)
class ReplicaSpec:
    k: int
    n: int
    t: int
    n_a: int
    bc: str = "pbc"
    g: float = 0.3

    def __post_init__(self):
        if self.k < 1 or self.n < 0:
            raise ReplicaError("need k >= 1 and n >= 0")
        if self.m > MAX_REPLICAS:
            raise ReplicaError(f"m = k+n = {self.m} above hard cap {MAX_REPLICAS}")
        if self.bc not in ("pbc", "obc"):
            raise ReplicaError("bc must be 'pbc' or 'obc'")
        if self.t < min_depth(self.n_a):
            raise ReplicaError(f"need t >= ceil(n_a/2) = {min_depth(self.n_a)}")

    @property
    def m(self) -> int:
        return self.k + self.n

    @property
    def t0(self) -> int:
        return min_depth(self.n_a)


def _haar_denominator(d: int, m: int) -> float:
    out = 1.0
    for j in range(m):
        out *= d + j
    return out


def prefactor_pbc(sigma: Permutation, tau: Permutation, spec: ReplicaSpec) -> float:
    """Wg(s t^-1, 2^t) * (2^(t-t0))^{#(s t^-1)}."""
    gamma = sigma.compose(tau.inverse())
    table = weingarten_table(spec.m, 2**spec.t, on_singular="pseudo")
    return table.value(gamma) * (2.0 ** (spec.t - spec.t0)) ** cycle_count(gamma)


def prefactor_obc(sigma: Permutation, tau: Permutation, spec: ReplicaSpec) -> float:
    """(2^(t-t0))^{#(s t^-1)} / (2^t (2^t+1)...(2^t+m-1))^2."""
    gamma = sigma.compose(tau.inverse())
    den = _haar_denominator(2**spec.t, spec.m)
    return (2.0 ** (spec.t - spec.t0)) ** cycle_count(gamma) / den**2


def _prefactor_of_type(cycle_type: tuple, spec: ReplicaSpec) -> float:
    n_cycles = len(cycle_type)
    loop = (2.0 ** (spec.t - spec.t0)) ** n_cycles
    if spec.bc == "pbc":
        table = weingarten_table(spec.m, 2**spec.t, on_singular="pseudo")
        return table.value_of_type(cycle_type) * loop
    return loop / _haar_denominator(2**spec.t, spec.m) ** 2


@dataclass(frozen=True)
class DiagramTerm:
    sigma: Permutation
    tau: Permutation
    k: int
    n: int
    value: np.ndarray  # capped operator on the k-replica space


def diagram_term(sigma: Permutation, tau: Permutation, spec: ReplicaSpec, w: WTensor) -> DiagramTerm:
    """Direct contraction of one (sigma, tau) diagram (costly beyond m ~ 4).

    value[mu_vec, nu_vec] = sum over temporal legs and capped replicas of
    prod_j W[mu_j, a_j, b_j] * conj(W[nu_j, a_sigma(j), b_tau(j)]),
    with replicas j >= k sharing mu_j = nu_j.  No t enters: the diagram is
    time-independent by construction.
    """
    if w.t_legs != spec.t0:
        raise ReplicaError("diagram tensor must have t_legs = ceil(n_a/2)")
    k, n, m = spec.k, spec.n, spec.m
    letters = string.ascii_letters
    row = letters[:k]
    col = letters[k : 2 * k]
    cap = letters[2 * k : 2 * k + n]
    alegs = letters[2 * k + n : 2 * k + n + m]
    blegs = letters[2 * k + n + m : 2 * k + n + 2 * m]
    ops, subs = [], []
    for j in range(m):
        spat = row[j] if j < k else cap[j - k]
        subs.append(spat + alegs[j] + blegs[j])
        ops.append(w.data)
    for j in range(m):
        spat = col[j] if j < k else cap[j - k]
        subs.append(spat + alegs[sigma(j)] + blegs[tau(j)])
        ops.append(w.data.conj())
    spec_str = ",".join(subs) + "->" + row + col
    dA = 2**spec.n_a
    val = np.einsum(spec_str, *ops, optimize="greedy").reshape(dA**k, dA**k)
    return DiagramTerm(sigma=sigma, tau=tau, k=k, n=n, value=val)


def _estimate_engine_bytes(n_a: int, m: int) -> int:
    dA, q = 2**n_a, 2 ** min_depth(n_a)
    return 3 * (dA**m) * (q ** (2 * m)) * 16


def _orbit_structure(base: int, m: int):
    """Orbit ids and weights of digit strings under position permutations.

    weight[code] = prod_v (multiplicity of digit v)!  =  #{p in S_m : p fixes code}.
    """
    codes = np.arange(base**m)
    digits = np.stack([(codes // base ** (m - 1 - j)) % base for j in range(m)])
    sorted_digits = np.sort(digits, axis=0)
    key = np.zeros(base**m, dtype=np.int64)
    for j in range(m):
        key = key * base + sorted_digits[j]
    uniq, orb = np.unique(key, return_inverse=True)
    counts = np.zeros((base**m, base), dtype=np.int64)
    for v in range(base):
        counts[:, v] = (digits == v).sum(axis=0)
    fact = np.array([math.factorial(i) for i in range(m + 1)])
    weight = fact[counts].prod(axis=1).astype(np.float64)
    return orb, weight, len(uniq)


def _build_kfold(wdata: np.ndarray, m: int) -> np.ndarray:
    """K[mu_vec, a_vec, b_vec] = prod_j W[mu_j, a_j, b_j], replica 0 slowest."""
    dA, q = wdata.shape[0], wdata.shape[1]
    K = wdata
    for jj in range(1, m):
        K = np.einsum("Mab,nxy->Mnaxby", K, wdata).reshape(
            dA ** (jj + 1), q ** (jj + 1), q ** (jj + 1)
        )
    return K


@lru_cache(maxsize=8)
def _sagg_bundle(n_a: int, m: int, g: float, j: float, h: float):
    """Per-class symmetrized diagram halves.

    Returns (orb, weight, n_orbits, {cycle_type: Sagg}) where
    Sagg[orbit, s] aggregates the class-gathered conjugate K over all digit
    rearrangements of the replica index; the engine's inner sum over the
    second group element reduces to these orbit sums.
    """
    if _estimate_engine_bytes(n_a, m) > _MEM_BUDGET_BYTES:
        raise ReplicaError(
            f"replica engine at n_a={n_a}, m={m} needs ~"
            f"{_estimate_engine_bytes(n_a, m) / 1e9:.1f} GB, above budget"
        )
    w = build_w(n_a, g, j=j, h=h)
    dA, q = 2**n_a, 2 ** w.t_legs
    K = _build_kfold(w.data, m)
    Kc = K.conj()
    orb, weight, n_orbits = _orbit_structure(dA, m)
    # class gather matrices on the a-leg register
    classes = conjugacy_classes(m)
    saggs = {}
    for ct, members in classes.items():
        B = np.zeros((q**m, q**m))
        ar = np.arange(q**m)
        for gamma in members:
            B[digit_permute_codes(gamma.images, q)[ar], ar] += 1.0
        Kb = np.einsum("Myb,ya->Mab", Kc, B, optimize=True)
        saggs[ct] = _kernels.orbit_aggregate(
            Kb.reshape(dA**m, q**m * q**m), orb, n_orbits
        )
        del Kb
    return orb, weight, n_orbits, saggs


@lru_cache(maxsize=32)
def class_diagram_terms(n_a: int, k: int, n: int, g: float, j: float, h: float):
    """Capped diagram operators per conjugacy class of s t^-1 (t-independent)."""
    m = k + n
    orb, weight, _, saggs = _sagg_bundle(n_a, m, g, j, h)
    w = build_w(n_a, g, j=j, h=h)
    dA = 2**n_a
    q2m = (2 ** w.t_legs) ** (2 * m)
    K = _build_kfold(w.data, m).reshape(dA**k, dA**n, q2m)
    out = {}
    for ct, sagg in saggs.items():
        Z = (sagg[orb] * weight[:, None]).reshape(dA**k, dA**n, q2m)
        out[ct] = np.einsum("mcs,ncs->mn", K, Z, optimize=True)
    return out


def _kahan_matrix_sum(terms):
    total = None
    comp = None
    for x in terms:
        if total is None:
            total = x.copy()
            comp = np.zeros_like(x)
            continue
        y = x - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def replica_moment(spec: ReplicaSpec, w: WTensor | None = None, validate: bool = True) -> np.ndarray:
    """rho^(k,n) for the given boundary condition, normalized to unit trace."""
    if w is not None and (w.n_a != spec.n_a or w.t_legs != spec.t0):
        raise ReplicaError("supplied W tensor does not match the requested parameters")
    jj, hh = np.pi / 4, np.pi / 4
    diagrams = class_diagram_terms(spec.n_a, spec.k, spec.n, spec.g, jj, hh)
    ident = tuple([1] * spec.m)
    # off-diagonal classes first (fixed order), identity class last
    order = sorted((ct for ct in diagrams if ct != ident)) + [ident]
    terms = [_prefactor_of_type(ct, spec) * diagrams[ct] for ct in order]
    raw = _kahan_matrix_sum(terms)
    tr = np.trace(raw).real
    if tr <= 0:
        raise ReplicaError(f"replica sum numerically degenerate (trace {tr:.3e})")
    rho = raw / tr
    herm_defect = np.abs(rho - rho.conj().T).max()
    if herm_defect > 1e-9:
        raise ReplicaError(f"replica moment not Hermitian (defect {herm_defect:.2e})")
    rho = (rho + rho.conj().T) / 2
    if validate:
        wmin = np.linalg.eigvalsh(rho).min()
        if wmin < -1e-8:
            raise ReplicaError(f"replica moment not PSD (min eig {wmin:.2e})")
    return rho


def deviation_series(spec: ReplicaSpec, n_max: int, w: WTensor | None = None):
    """[(n, ||rho^(k,n) - rho_Haar^(k)||_1) for n = 0..n_max]."""
    if spec.k + n_max > MAX_REPLICAS:
        raise ReplicaError("k + n_max above the replica cap")
    haar = haar_moment_operator(spec.n_a, spec.k)
    out = []
    for n in range(n_max + 1):
        sp = ReplicaSpec(k=spec.k, n=n, t=spec.t, n_a=spec.n_a, bc=spec.bc, g=spec.g)
        rho = replica_moment(sp, w)
        out.append((n, trace_norm(rho - haar)))
    return out


@dataclass(frozen=True)
class ExtrapolationResult:
    estimate: float  # ||drho^(k)||_1 at n = 1-k
    a: float
    b: float
    c: float
    residual: float
    flagged: bool


RESIDUAL_THRESHOLD = 0.05  # log2 units


def extrapolate_to_physical(series, k: int) -> ExtrapolationResult:
    """Fit log2(norm) = a + b exp(-c n) and evaluate at n = 1 - k."""
    ns = np.array([float(n) for n, _ in series])
    vals = np.array([v for _, v in series])
    if len(ns) < 3:
        raise ReplicaError("extrapolation needs at least 3 points")
    if np.any(vals <= 0):
        raise ReplicaError("deviation series must be positive")
    y = np.log2(vals)
    target = float(1 - k)
    if np.ptp(y) < 1e-9:
        a = float(y.mean())
        return ExtrapolationResult(2.0**a, a, 0.0, 1.0, 0.0, False)
    # seed c from successive differences of the (geometric) decay
    d = y[:-1] - y[1:]
    ratios = d[:-1] / d[1:]
    pos = ratios[ratios > 0]
    c0 = float(np.log(pos).mean()) if len(pos) else 0.5
    c0 = min(max(c0, 1e-3), 10.0)
    X = np.column_stack([np.ones_like(ns), np.exp(-c0 * ns)])
    a0, b0 = np.linalg.lstsq(X, y, rcond=None)[0]

    def model(nn, a, b, c):
        return a + b * np.exp(-c * nn)

    flagged = False
    try:
        with warnings.catch_warnings():
            # 3 points vs 3 parameters fits exactly; covariance is undefined there
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, _ = curve_fit(model, ns, y, p0=[a0, b0, c0], maxfev=20000)
        a, b, c = (float(v) for v in popt)
    except RuntimeError:
        a, b, c = float(a0), float(b0), c0
        flagged = True
    residual = float(np.sqrt(np.mean((model(ns, a, b, c) - y) ** 2)))
    if c <= 0 or residual > RESIDUAL_THRESHOLD:
        flagged = True
    estimate = float(2.0 ** (a + b * np.exp(-c * target)))
    return ExtrapolationResult(estimate, a, b, c, residual, flagged)


def rate_estimate(values: dict) -> float:
    """Decay rate v: slope of -log2(norm) vs t over the largest-t half."""
    ts = sorted(values)
    if len(ts) < 3:
        raise ReplicaError("rate fit needs at least 3 times")
    vals = np.array([values[t] for t in ts], dtype=float)
    if np.any(vals <= 0):
        raise ReplicaError("rate fit needs positive values")
    half = max(2, (len(ts) + 1) // 2)
    tt = np.array(ts[-half:], dtype=float)
    yy = -np.log2(vals[-half:])
    slope = np.polyfit(tt, yy, 1)[0]
    return float(slope)


def direct_double_sum(spec: ReplicaSpec, w: WTensor) -> np.ndarray:
    """Brute-force sum over all (sigma, tau) pairs; oracle for the engine."""
    perms = enumerate_sym(spec.m)
    pref = prefactor_pbc if spec.bc == "pbc" else prefactor_obc
    acc = np.zeros((2 ** (spec.n_a * spec.k),) * 2, dtype=complex)
    for sig in perms:
        for tau in perms:
            acc += pref(sig, tau, spec) * diagram_term(sig, tau, spec, w).value
    return acc / np.trace(acc)
