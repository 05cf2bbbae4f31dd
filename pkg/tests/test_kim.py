from __future__ import annotations

import numpy as np
import pytest

from deeptherm.kim import (
    ConfigError,
    KimConfig,
    apply_floquet,
    build_floquet,
    delta_k,
    delta_series,
    design_time,
    design_times,
    dual_unitary_ensemble_check,
    entanglement_entropy,
    evolve,
    ising_phase_vector,
    moment_from_state,
    moment_operator,
    plus_state,
    projected_ensemble,
    reduced_density_matrix,
)
from deeptherm.linalg import haar_moment_operator, partial_trace, permutation_operator, trace_norm
from deeptherm.permgroup import enumerate_sym

G = 0.3


def test_config_validation():
    with pytest.raises(ConfigError):
        KimConfig(n=4, n_a=2, t=1, bc="periodic")
    with pytest.raises(ConfigError):
        KimConfig(n=4, n_a=4, t=1)
    with pytest.raises(ConfigError):
        KimConfig(n=4, n_a=2, t=1, g=0.0)  # on the excluded lattice
    with pytest.raises(ConfigError):
        KimConfig(n=4, n_a=2, t=1, g=np.pi / 8 + 1e-5)
    with pytest.raises(ConfigError):
        KimConfig(n=4, n_a=2, t=1, j=0.5)  # violates self-dual mode
    cfg = KimConfig(n=10, n_a=2, t=1, g=G)
    assert cfg.offset == 4
    assert not cfg.wraparound()
    assert KimConfig(n=10, n_a=2, t=4, g=G).wraparound()


def test_build_floquet_unitary_and_special_cases():
    cfg = KimConfig(n=4, n_a=2, t=1, g=G)
    U = build_floquet(cfg)
    assert np.abs(U.conj().T @ U - np.eye(16)).max() <= 1e-12
    # h=0 leaves a diagonal operator
    cfg0 = KimConfig(n=3, n_a=1, t=1, g=G, h=0.0, self_dual=False)
    U0 = build_floquet(cfg0)
    assert np.abs(U0 - np.diag(np.diag(U0))).max() <= 1e-14
    # decoupled kicks at n=2, obc, j=g=b=0 (guard band lifted for the degenerate point)
    cfgk = KimConfig(
        n=2, n_a=1, t=1, bc="obc", g=0.0, j=0.0, b1=0.0, bn=0.0,
        self_dual=False, g_guard=0.0,
    )
    from deeptherm.dual_tensors import kick_matrix

    np.testing.assert_allclose(
        build_floquet(cfgk),
        np.kron(kick_matrix(np.pi / 4), kick_matrix(np.pi / 4)),
        atol=1e-12,
    )


def test_evolve_basics():
    cfg = KimConfig(n=6, n_a=2, t=0, g=G)
    np.testing.assert_allclose(evolve(cfg), np.full(64, 2.0 ** (-3)), atol=1e-14)
    state = plus_state(6)
    phases = ising_phase_vector(KimConfig(n=6, n_a=2, t=1, g=G))
    for _ in range(10):
        state = apply_floquet(state, KimConfig(n=6, n_a=2, t=1, g=G), phases)
        assert np.vdot(state, state).real == pytest.approx(1.0, abs=1e-10)
    # diagonal evolution at h=0 only rephases the plus state
    cfgd = KimConfig(n=4, n_a=2, t=3, g=G, h=0.0, self_dual=False)
    amp = np.abs(evolve(cfgd))
    np.testing.assert_allclose(amp, 0.25 * np.ones(16), atol=1e-12)


def test_projected_ensemble_product_and_bell():
    # product state: every projected state identical up to phase
    cfg = KimConfig(n=4, n_a=2, t=0, g=G)
    ens = projected_ensemble(evolve(cfg), cfg)
    ref = None
    for p, psi in ens.entries:
        assert p == pytest.approx(1 / 4)
        if ref is None:
            ref = psi
        else:
            assert abs(abs(np.vdot(ref, psi)) - 1.0) <= 1e-12
    # Bell pair: outcomes 0/1 with p=1/2 and states |0>, |1>
    bell = np.zeros(4, dtype=complex)
    bell[0] = bell[3] = 1 / np.sqrt(2)
    cfgb = KimConfig(n=2, n_a=1, t=0, g=G, a_offset=0)
    ensb = projected_ensemble(bell, cfgb)
    assert [p for p, _ in ensb.entries] == pytest.approx([0.5, 0.5])
    np.testing.assert_allclose(ensb.entries[0][1], [1, 0], atol=1e-14)
    np.testing.assert_allclose(ensb.entries[1][1], [0, 1], atol=1e-14)


def test_projected_ensemble_completeness_and_mean():
    cfg = KimConfig(n=10, n_a=2, t=3, g=G)
    state = evolve(cfg)
    ens = projected_ensemble(state, cfg)
    assert ens.probabilities().sum() == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(
        ens.mean_state(), reduced_density_matrix(state, cfg), atol=1e-12
    )


def test_moment_operator_identities():
    cfg = KimConfig(n=8, n_a=2, t=2, g=G)
    state = evolve(cfg)
    ens = projected_ensemble(state, cfg)
    rho1 = moment_operator(ens, 1)
    np.testing.assert_allclose(rho1, reduced_density_matrix(state, cfg), atol=1e-12)
    # single pure state: rank-1 projector
    from deeptherm.kim import ProjectedEnsemble

    psi = np.array([1, 1j, 0, 0]) / np.sqrt(2)
    single = ProjectedEnsemble(n_a=2, entries=[(1.0, psi)])
    rho2 = moment_operator(single, 2)
    evals = np.linalg.eigvalsh(rho2)
    assert evals[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.abs(evals[:-1]).max() <= 1e-12
    # streaming accumulation agrees with the materialized ensemble
    rho3a = moment_operator(ens, 3)
    rho3b = moment_from_state(state, cfg, 3)
    np.testing.assert_allclose(rho3a, rho3b, atol=1e-12)


def test_rdm_maximally_mixed_at_t1():
    cfg = KimConfig(n=10, n_a=2, t=1, g=G)
    rho = moment_from_state(evolve(cfg), cfg, 1)
    assert np.abs(rho - np.eye(4) / 4).max() <= 1e-10


def test_moment_reduction_across_replicas():
    cfg = KimConfig(n=8, n_a=2, t=2, g=G)
    state = evolve(cfg)
    rho2 = moment_from_state(state, cfg, 2)
    rho1 = moment_from_state(state, cfg, 1)
    np.testing.assert_allclose(partial_trace(rho2, [4, 4], keep=[0]), rho1, atol=1e-12)


def test_moment_replica_permutation_symmetry():
    cfg = KimConfig(n=8, n_a=2, t=2, g=G)
    rho3 = moment_from_state(evolve(cfg), cfg, 3)
    for p in enumerate_sym(3):
        P = permutation_operator(p, 4)
        assert np.abs(P @ rho3 @ P.T - rho3).max() <= 1e-12


def test_delta_k_and_monotonicity():
    assert delta_k(haar_moment_operator(2, 2), 2) <= 1e-12
    rho = np.diag([1.0, 0.0]).astype(complex)
    assert delta_k(rho, 1) == pytest.approx(0.5)
    cfg = KimConfig(n=10, n_a=2, t=2, g=G)
    state = evolve(cfg)
    deltas = [delta_k(moment_from_state(state, cfg, k), k) for k in (1, 2, 3)]
    assert deltas[0] <= deltas[1] <= deltas[2]
    assert deltas[0] <= 1e-10


def test_delta_invariant_under_outcome_relabeling():
    cfg = KimConfig(n=8, n_a=2, t=2, g=G)
    ens = projected_ensemble(evolve(cfg), cfg)
    rho = moment_operator(ens, 2)
    rev = type(ens)(n_a=ens.n_a, entries=list(reversed(ens.entries)))
    np.testing.assert_allclose(moment_operator(rev, 2), rho, atol=1e-13)


def test_design_time():
    assert design_time({0: 0.5, 1: 0.0}, 1e-8) == 1
    assert design_time({0: 0.5, 1: 0.2}, 1e-8) is None
    cfg = KimConfig(n=10, n_a=2, t=3, g=G)
    series = delta_series(cfg, 1)
    assert design_time(series, 1e-8) == 1  # ceil(n_a/2)
    with pytest.raises(AssertionError):
        design_times({1: {0: 1.0, 1: 0.0}, 2: {0: 0.0, 1: 0.0}}, 1e-8)


def test_entanglement_entropy():
    prod = plus_state(4)
    assert entanglement_entropy(prod, 4, 1, 2) <= 1e-12
    bell = np.zeros(4, dtype=complex)
    bell[0] = bell[3] = 1 / np.sqrt(2)
    assert entanglement_entropy(bell, 2, 0, 1) == pytest.approx(1.0)


def test_entanglement_growth_and_saturation():
    # slope of 2 bits per step, saturating at n_a
    cfg1 = KimConfig(n=12, n_a=4, t=1, g=G)
    s1 = entanglement_entropy(evolve(cfg1), 12, cfg1.offset, 4)
    cfg2 = KimConfig(n=12, n_a=4, t=2, g=G)
    s2 = entanglement_entropy(evolve(cfg2), 12, cfg2.offset, 4)
    assert s1 == pytest.approx(2.0, abs=1e-8)
    assert s2 == pytest.approx(4.0, abs=1e-8)


def test_dual_unitary_ensemble_check():
    cfg = KimConfig(n=6, n_a=2, t=2, a_offset=0, g=G)
    assert dual_unitary_ensemble_check(cfg, 0) == 0.0
    d2 = dual_unitary_ensemble_check(KimConfig(n=4, n_a=2, t=2, a_offset=0, g=G), 1)
    d6 = dual_unitary_ensemble_check(KimConfig(n=8, n_a=2, t=2, a_offset=0, g=G), 1)
    assert d6 < d2


def test_rdm_exactness_boundary_field_independent():
    # within the pre-recurrence window the chain ends sit outside the block's
    # light cone, so delta_1 exactness cannot depend on the boundary fields;
    # higher moments do feel them at finite N
    d2 = {}
    for b in (np.pi / 4, 0.0, 0.5):
        cfg = KimConfig(n=10, n_a=2, t=2, bc="obc", g=G, b1=b, bn=b)
        state = evolve(cfg)
        assert delta_k(moment_from_state(state, cfg, 1), 1) <= 1e-10
        d2[b] = delta_k(moment_from_state(state, cfg, 2), 2)
    assert abs(d2[0.0] - d2[np.pi / 4]) > 1e-3
