import math

import numpy as np
import pytest

import oracles
from conftest import random_hermitian
from starotoc.evolution import (
    DecoherenceParams,
    EvolutionMode,
    LindbladMonitor,
    Propagator,
    ctp_propagator,
    ctp_schedule,
    dephasing_mask,
    evolve,
    lindblad_step,
    lindblad_trajectory,
    propagator,
    step_plan,
)
from starotoc.mqc import prepare_deviation
from starotoc.otoc import dimensionless_hamiltonian
from starotoc.spin_algebra import embed_pauli, overlap_trace
from starotoc.topology import HamiltonianParams, TopologySpec, build_hamiltonian

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def kraus_step(rho, U, gamma, dt):
    """The averaged jump update written out term by term."""
    n = int(round(math.log2(rho.shape[0])))
    r = U @ rho @ U.conj().T
    Ls = [embed_pauli("z", i, n) for i in range(n)]
    L0 = math.sqrt(1 - gamma * dt * n) * np.eye(2**n)
    out = L0 @ r @ L0.conj().T
    for L in Ls:
        out = out + gamma * dt * (L @ r @ L.conj().T)
    return out


def test_propagator_identity_at_zero(rng):
    H = random_hermitian(rng, 8)
    np.testing.assert_allclose(propagator(H, 0.0), np.eye(8), atol=1e-14)


def test_propagator_two_level_closed_form():
    U = propagator(math.pi / 2 * SZ, 1.0)
    np.testing.assert_allclose(U, -1j * SZ, atol=1e-15)


def test_propagator_matches_series_oracle():
    H = oracles.star_hamiltonian(1, 8.7, 0.3)
    t = 0.7 / 8.7
    U = propagator(build_hamiltonian(TopologySpec(1), HamiltonianParams(8.7, 0.3)), t)
    assert np.max(np.abs(U - oracles.expm_series(-1j * H * t))) < 1e-9


@pytest.mark.parametrize("g", [0.0, 0.1, 0.3, 1.0])
def test_propagator_unitarity(g):
    H = dimensionless_hamiltonian(TopologySpec(1), HamiltonianParams(8.7, g))
    prop = Propagator(H)
    for jt in np.linspace(0, 10, 11):
        U = prop(jt)
        assert np.max(np.abs(U.conj().T @ U - np.eye(64))) < 1e-11


def test_propagator_rejects_non_hermitian():
    with pytest.raises(ValueError):
        Propagator(np.array([[0, 1], [0, 0]], dtype=complex))


def test_propagator_blocks_match_full_matrix(rng):
    H = random_hermitian(rng, 16)
    prop = Propagator(H)
    rows, cols = np.array([1, 5, 7]), np.array([0, 2, 5, 11])
    np.testing.assert_allclose(prop.block(rows, cols, 0.3), prop(0.3)[np.ix_(rows, cols)], atol=1e-14)
    D = Propagator(np.diag([1.0, 2.0, 3.0, 4.0]).astype(complex))
    assert D.diagonal
    np.testing.assert_allclose(D.block([0, 2], [2, 3], 0.5), [[0, 0], [np.exp(-1.5j), 0]])


def test_ctp_schedule_examples():
    s = ctp_schedule(4.0, 4.0)
    assert (s.backward, s.forward) == (0.0, 4.0)
    s = ctp_schedule(0.0, 3.0)
    assert (s.backward, s.forward) == (1.5, 1.5)
    s = ctp_schedule(1.0, 3.0)
    assert s.backward + s.forward == s.total
    assert s.forward - s.backward == s.net
    for bad in [(2.0, 1.0), (-1.0, 2.0), (0.0, -1.0)]:
        with pytest.raises(ValueError):
            ctp_schedule(*bad)


def test_ctp_at_zero_net_time_is_identity():
    H = dimensionless_hamiltonian(TopologySpec(1), HamiltonianParams(8.7, 0.2))
    np.testing.assert_allclose(ctp_propagator(H, 0.0, 3.0), np.eye(64), atol=1e-12)


def test_ctp_composition_equals_direct_propagator(rng):
    H = dimensionless_hamiltonian(TopologySpec(1), HamiltonianParams(8.7, 0.2))
    prop = Propagator(H)
    for _ in range(20):
        T = rng.uniform(0, 8)
        t = rng.uniform(0, T)
        s = ctp_schedule(t, T)
        composed = prop(s.backward).conj().T @ prop(s.forward)
        assert np.max(np.abs(composed - prop(t))) < 1e-11


def test_dephasing_mask_equals_kraus_sum(rng):
    n = 3
    rho = random_hermitian(rng, 8)
    gamma, dt = 0.3, 0.05
    np.testing.assert_allclose(
        dephasing_mask(n, gamma, dt) * rho, kraus_step(rho, np.eye(8), gamma, dt), atol=1e-14
    )


def test_lindblad_step_matches_kraus_form(rng):
    H = random_hermitian(rng, 16)
    rho = random_hermitian(rng, 16)
    U = propagator(H, 0.01)
    np.testing.assert_allclose(lindblad_step(rho, H, 0.01, 0.5), kraus_step(rho, U, 0.5, 0.01), atol=1e-13)


def test_lindblad_step_without_dephasing_is_conjugation(rng):
    H = random_hermitian(rng, 8)
    rho = random_hermitian(rng, 8)
    U = propagator(H, 0.02)
    np.testing.assert_allclose(lindblad_step(rho, H, 0.02, 0.0), U @ rho @ U.conj().T, atol=1e-14)


def test_lindblad_step_conserves_trace_and_hermiticity(rng):
    H = random_hermitian(rng, 16)
    a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    out = lindblad_step(rho, H, 0.01, 1.0)
    assert abs(np.trace(out) - 1) < 1e-12
    assert np.max(np.abs(out - out.conj().T)) < 1e-12


def test_lindblad_step_precondition():
    with pytest.raises(ValueError):
        lindblad_step(np.eye(4) / 4, np.zeros((4, 4)), dt=1.0, gamma=1.0)


def test_single_qubit_dephasing_rate():
    gamma = DecoherenceParams(t2_star=2.0).gamma
    assert gamma == 0.25
    rho0 = SX / 2
    traj = list(lindblad_trajectory(rho0, np.zeros((2, 2)), [0.0, 1.0], gamma, 0.005))
    ratio = overlap_trace(traj[-1], rho0).real / overlap_trace(rho0, rho0).real
    assert ratio == pytest.approx(math.exp(-2 * gamma), rel=1e-3)


def test_step_plan_lands_on_grid():
    plan = step_plan([0.0, 0.1, 0.25, 0.25], 0.04)
    assert plan[0] == (3, pytest.approx(0.1 / 3))
    assert plan[1] == (4, pytest.approx(0.0375))
    assert plan[2][0] == 0


def test_long_trajectory_conservation(rng):
    H = dimensionless_hamiltonian(TopologySpec(1), HamiltonianParams(8.7, 0.3))
    rho0 = prepare_deviation(TopologySpec(1), 1) + np.eye(64) / 64
    mon = LindbladMonitor()
    traj = list(lindblad_trajectory(rho0, H, [0.0, 5.0], gamma=0.25, dt=0.005, monitor=mon))
    assert mon.steps == 1000
    assert mon.max_step_trace_drift < 1e-12
    assert mon.cumulative_trace_drift < 1e-9
    assert mon.max_hermiticity < 1e-12
    assert abs(np.trace(traj[-1]) - 1) < 1e-9


def test_integrator_is_first_order():
    H = dimensionless_hamiltonian(TopologySpec(1), HamiltonianParams(8.7, 0.3))
    rho0 = prepare_deviation(TopologySpec(1), 1)
    finals = [
        list(lindblad_trajectory(rho0, H, [0.0, 1.0], gamma=0.25, dt=dt))[-1]
        for dt in (0.04, 0.02, 0.01, 0.005)
    ]
    errs = [np.max(np.abs(a - b)) for a, b in zip(finals, finals[1:])]
    for e1, e2 in zip(errs, errs[1:]):
        assert 1.7 <= e1 / e2 <= 2.3


def test_zero_dephasing_reduces_to_unitary(rng):
    H = dimensionless_hamiltonian(TopologySpec(1), HamiltonianParams(8.7, 0.3))
    rho0 = prepare_deviation(TopologySpec(1), 0)
    grid = [0.0, 0.5, 1.0]
    lind = list(lindblad_trajectory(rho0, H, grid, gamma=0.0, dt=0.005))
    uni = list(evolve(rho0, H, grid, "unitary_only"))
    for a, b in zip(lind, uni):
        assert np.max(np.abs(a - b)) < 1e-11


def test_diagonal_fast_path_matches_dense_steps():
    topo = TopologySpec(1)
    H = dimensionless_hamiltonian(topo, HamiltonianParams(8.7, 0.0))
    rho0 = prepare_deviation(topo, 1)
    fast = list(lindblad_trajectory(rho0, H, [0.0, 0.2], gamma=0.4, dt=0.01))[-1]
    slow = rho0
    U = propagator(H, 0.01)
    for _ in range(20):
        slow = kraus_step(slow, U, 0.4, 0.01)
    np.testing.assert_allclose(fast, slow, atol=1e-13)


def test_evolve_modes(k1):
    H = dimensionless_hamiltonian(k1, HamiltonianParams(8.7, 0.2))
    rho0 = prepare_deviation(k1, 1)
    grid = [0.0, 0.6, 1.2]
    uni = list(evolve(rho0, H, grid, EvolutionMode.UNITARY_ONLY))
    np.testing.assert_allclose(uni[0], rho0, atol=1e-14)
    ctp = list(evolve(rho0, H, grid, "ctp", total_time=1.2))
    np.testing.assert_allclose(ctp[-1], uni[-1], atol=1e-12)
    with pytest.raises(ValueError):
        list(evolve(rho0, H, grid, "ctp"))
    with pytest.raises(ValueError):
        list(evolve(rho0, H, grid, "decoherence_only"))
    with pytest.raises(ValueError):
        list(evolve(rho0, H, [0.5, 1.0], "unitary_only"))


def test_decoherence_only_decays_monotonically(k2):
    H = dimensionless_hamiltonian(k2, HamiltonianParams(8.7, 0.0), decouple_hf=True)
    rho0 = prepare_deviation(k2, 3)
    grid = np.linspace(0, 2, 21)
    vals = [overlap_trace(r, rho0).real for r in evolve(rho0, H, grid, "decoherence_only", DecoherenceParams(2.0))]
    assert np.all(np.diff(vals) < 0)
