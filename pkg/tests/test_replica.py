from __future__ import annotations

import numpy as np
import pytest

from deeptherm.linalg import haar_moment_operator, permutation_operator, trace_norm
from deeptherm.permgroup import Permutation, enumerate_sym
from deeptherm.replica import (
    ReplicaError,
    ReplicaSpec,
    deviation_series,
    diagram_term,
    direct_double_sum,
    extrapolate_to_physical,
    prefactor_obc,
    prefactor_pbc,
    rate_estimate,
    replica_moment,
)

G = 0.3


def spec(k, n, t, bc="pbc", n_a=2):
    return ReplicaSpec(k=k, n=n, t=t, n_a=n_a, bc=bc, g=G)


def test_spec_validation():
    with pytest.raises(ReplicaError):
        ReplicaSpec(k=0, n=1, t=2, n_a=2)
    with pytest.raises(ReplicaError):
        ReplicaSpec(k=5, n=4, t=2, n_a=2)  # above hard cap
    with pytest.raises(ReplicaError):
        ReplicaSpec(k=2, n=0, t=1, n_a=3)  # t below ceil(n_a/2)


def test_prefactor_pbc_values():
    e, swap = enumerate_sym(2)
    sp = spec(2, 0, 2)
    assert prefactor_pbc(e, e, sp) == pytest.approx(4 / 15)
    assert prefactor_pbc(swap, e, sp) == pytest.approx(-1 / 30)
    assert abs(prefactor_pbc(swap, e, sp) / prefactor_pbc(e, e, sp)) == pytest.approx(1 / 8)
    # off/diagonal ratio suppressed as 2^-2t (constant ~2 from the loop factor)
    for t in (4, 6, 8):
        sp_t = spec(2, 0, t)
        r = abs(prefactor_pbc(swap, e, sp_t) / prefactor_pbc(e, e, sp_t))
        assert r <= 2.0 ** (-2 * t) * 2.5


def test_prefactor_obc_values():
    e, swap = enumerate_sym(2)
    sp = spec(2, 0, 2, bc="obc")
    assert prefactor_obc(e, e, sp) == pytest.approx(1 / 100)
    assert prefactor_obc(swap, e, sp) == pytest.approx(1 / 200)
    assert prefactor_obc(swap, e, sp) > 0
    # exact off/diagonal ratio (2^(t-t0))^(# - m) = 2^(1-t) at n_a=2, m=2
    for t in (4, 6, 8):
        sp_t = spec(2, 0, t, bc="obc")
        r = prefactor_obc(swap, e, sp_t) / prefactor_obc(e, e, sp_t)
        assert r == pytest.approx(2.0 ** (1 - t))


def test_diagram_term_identity_direction(w2):
    # k=1, n=0, sigma=tau=e: proportional to vec of the identity
    sp = spec(1, 0, 2)
    e1 = Permutation((0,))
    val = diagram_term(e1, e1, sp, w2).value
    np.testing.assert_allclose(val, np.eye(4), atol=1e-12)


def test_diagram_term_diagonal_sums_to_haar(w2):
    # sum over sigma of the capped diagonal diagrams is proportional to the
    # Haar moment on the open replicas
    for (k, n) in [(1, 1), (2, 0), (2, 1)]:
        sp = spec(k, n, 2)
        acc = np.zeros((4**k, 4**k), dtype=complex)
        for s in enumerate_sym(k + n):
            acc += diagram_term(s, s, sp, w2).value
        acc /= np.trace(acc)
        np.testing.assert_allclose(acc, haar_moment_operator(2, k), atol=1e-12)


def test_diagram_term_time_independent(w2):
    e, swap = enumerate_sym(2)
    v1 = diagram_term(swap, e, spec(1, 1, 1), w2).value
    v2 = diagram_term(swap, e, spec(1, 1, 3), w2).value
    np.testing.assert_array_equal(v1, v2)


@pytest.mark.parametrize("k,n,t,bc", [(2, 1, 2, "pbc"), (2, 1, 2, "obc"), (3, 0, 3, "pbc"),
                                      (1, 2, 2, "obc"), (2, 2, 2, "pbc")])
def test_engine_matches_direct_double_sum(k, n, t, bc, w2):
    sp = spec(k, n, t, bc=bc)
    engine = replica_moment(sp)
    direct = direct_double_sum(sp, w2)
    assert np.abs(engine - direct).max() <= 1e-12


@pytest.mark.parametrize("bc", ["pbc", "obc"])
def test_k1_exact_for_all_n(bc):
    for n in (0, 1, 2):
        for t in (2, 3):
            rho = replica_moment(spec(1, n, t, bc=bc))
            assert np.abs(rho - np.eye(4) / 4).max() <= 1e-10


def test_moment_contract_properties():
    rho = replica_moment(spec(2, 1, 3, bc="obc"))
    assert np.abs(rho - rho.conj().T).max() <= 1e-12
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(rho).min() >= -1e-8
    for p in enumerate_sym(2):
        P = permutation_operator(p, 4)
        assert np.abs(P @ rho @ P.T - rho).max() <= 1e-11


def test_deviation_ratio_trends():
    # successive-t deviation ratios approach 1/4 (pbc) and 1/2 (obc)
    for bc, target in (("pbc", 0.25), ("obc", 0.5)):
        devs = {}
        for t in (3, 4, 5):
            rho = replica_moment(spec(2, 0, t, bc=bc))
            devs[t] = trace_norm(rho - haar_moment_operator(2, 2))
        r45 = devs[5] / devs[4]
        assert r45 == pytest.approx(target, rel=0.1)


def test_deviation_series_k1_flat_k2_positive():
    s1 = deviation_series(spec(1, 0, 2), 2)
    assert all(v <= 1e-10 for _, v in s1)
    s2 = deviation_series(spec(2, 0, 4), 4)
    vals = [v for _, v in s2]
    assert all(v > 0 for v in vals)
    # verified behavior: the series rises monotonically toward its asymptote
    assert all(b > a for a, b in zip(vals, vals[1:]))
    fit = extrapolate_to_physical(s2, 2)
    assert not fit.flagged
    assert fit.residual <= 0.01
    assert 0 < fit.estimate < vals[0]


def test_extrapolation_recovers_synthetic():
    ns = range(6)
    series = [(n, 2.0 ** (1 + 2 * np.exp(-0.5 * n))) for n in ns]
    fit = extrapolate_to_physical(series, 2)
    assert fit.a == pytest.approx(1.0, abs=1e-6)
    assert fit.b == pytest.approx(2.0, abs=1e-6)
    assert fit.c == pytest.approx(0.5, abs=1e-6)
    assert fit.estimate == pytest.approx(2.0 ** (1 + 2 * np.exp(0.5)), rel=1e-6)
    assert not fit.flagged


def test_extrapolation_constant_series():
    series = [(n, 0.125) for n in range(4)]
    fit = extrapolate_to_physical(series, 3)
    assert fit.estimate == pytest.approx(0.125, rel=1e-9)
    assert not fit.flagged


def test_extrapolation_flags_degenerate():
    # growing-with-n series fits only with c < 0: flagged
    series = [(n, 2.0 ** (1 + 2 * np.exp(+0.4 * n))) for n in range(5)]
    fit = extrapolate_to_physical(series, 2)
    assert fit.flagged
    with pytest.raises(ReplicaError):
        extrapolate_to_physical([(0, 1.0), (1, 0.5)], 2)
    with pytest.raises(ReplicaError):
        extrapolate_to_physical([(0, 1.0), (1, 0.5), (2, -0.1)], 2)


def test_rate_estimate():
    assert rate_estimate({t: 2.0 ** (-2 * t) for t in range(2, 6)}) == pytest.approx(2.0)
    assert rate_estimate({t: 2.0**-t for t in range(2, 6)}) == pytest.approx(1.0)
    with pytest.raises(ReplicaError):
        rate_estimate({2: 1.0, 3: 0.5})
    with pytest.raises(ReplicaError):
        rate_estimate({2: 1.0, 3: 0.0, 4: 1.0})


def test_replica_moment_rejects_mismatched_w(w2):
    from deeptherm.dual_tensors import build_w

    w1 = build_w(1, G)
    with pytest.raises(ReplicaError):
        replica_moment(spec(2, 0, 2), w1)
