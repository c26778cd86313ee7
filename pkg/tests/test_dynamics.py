import dataclasses
import math

import numpy as np
import pytest
from scipy.linalg import expm

from exsurf import (
    BranchAmbiguity,
    ESPoint,
    PointClass,
    SingularStateMatrix,
    TruncationViolation,
    VanishingProjection,
    berry_phase_experiment,
    build_h_es,
    classify_point,
    conditional_hamiltonian,
    default_circuit,
    effective_couplings,
    evolve_conditional,
    evolve_lab_frame,
    fit_eigensystem,
    postselect,
    schedule_loop_point,
    state_matrix,
)
from exsurf.dynamics import _mu_for_bessel

TWO_PI = 2 * np.pi


def bessel_series(order, x, terms=40):
    """Power-series Bessel of the first kind (independent oracle)."""
    if order < 0:
        return (-1) ** (-order) * bessel_series(-order, x, terms)
    total = 0.0
    for m in range(terms):
        total += (
            (-1) ** m
            / (math.factorial(m) * math.factorial(m + order))
            * (x / 2.0) ** (2 * m + order)
        )
    return total


def test_effective_couplings_zero_drive():
    c = dataclasses.replace(default_circuit(), eps1=0.0)
    omega1, _ = effective_couplings(c)
    assert omega1 == 0.0


def test_bessel_identity_and_series_oracle():
    from scipy.special import jv

    for mu in np.linspace(-2.5, 2.5, 21):
        assert abs(jv(-1, mu) + jv(1, mu)) < 1e-14
        for order in (-1, 1, 2):
            assert abs(jv(order, mu) - bessel_series(order, mu)) < 1e-12
        assert abs(jv(2, mu)) <= 1.0


def test_coupling_from_bessel_root():
    # mu with J_2(mu) = 1/60 found through the series oracle, then g1/60
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if bessel_series(2, mid) < 1 / 60:
            lo = mid
        else:
            hi = mid
    mu_oracle = 0.5 * (lo + hi)
    mu = _mu_for_bessel(2, 1 / 60)
    assert abs(mu - mu_oracle) < 1e-10
    base = default_circuit()
    c = dataclasses.replace(base, eps1=mu * base.nu1)
    omega1, _ = effective_couplings(c)
    assert abs(omega1 - TWO_PI * 20.0 / 60.0) < 1e-10


def test_default_circuit_resonant():
    c = default_circuit()
    r1, r2 = c.resonance_residuals()
    assert abs(r1) < 1e-9 and abs(r2) < 1e-9


def test_reported_drive_frequencies_flagged():
    c = default_circuit()
    published = dataclasses.replace(c, nu1=TWO_PI * 400.0, nu2=TWO_PI * 280.0)
    with pytest.warns(UserWarning):
        published.check_resonance()


def test_conditional_hamiltonian_trivial():
    h = conditional_hamiltonian(0.0, 0.0, 5.0)
    assert np.allclose(h, np.diag([0.0, 0.0, -2.5j]))


def test_conditional_decomposes_into_three_band_model():
    # traceless part is the lossy three-band family at kappa_d2 / (2 sqrt3)
    omega1, omega2, kd2 = 0.31, 0.9, 5.0
    h = conditional_hamiltonian(omega1, omega2, kd2)
    kappa_eff = kd2 / (2 * np.sqrt(3))
    shifted = h + 1j * (kd2 / 6.0) * np.eye(3)
    assert np.abs(
        shifted - build_h_es(ESPoint(omega1, 0.0, omega2, 0.0, kappa_eff))
    ).max() < 1e-14


def test_conditional_triple_point_matches_classifier():
    kd2 = 5.0
    kappa_eff = kd2 / (2 * np.sqrt(3))
    omega1 = kappa_eff / 3
    omega2 = 2 * np.sqrt(2) * kappa_eff / 3
    p = ESPoint(omega1, 0.0, omega2, 0.0, kappa_eff)
    assert classify_point(p).label is PointClass.EP3
    from exsurf.eigensystem import eigvals_closed_3x3

    values = eigvals_closed_3x3(conditional_hamiltonian(omega1, omega2, kd2))
    assert np.abs(values - values[0]).max() < 1e-10


def test_conditional_decay_closed_form():
    kd2 = 5.0
    h = conditional_hamiltonian(0.0, 0.0, kd2)
    times = np.linspace(0.0, 0.5, 41)
    traj = evolve_conditional(h, [0, 0, 1], times)
    assert np.abs(traj.norm - np.exp(-kd2 * times / 2)).max() < 1e-8


def test_conditional_matches_matrix_exponential():
    rng = np.random.default_rng(51)
    for _ in range(5):
        h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        psi0 = rng.normal(size=3) + 1j * rng.normal(size=3)
        psi0 /= np.linalg.norm(psi0)
        times = np.linspace(0.0, 1.0, 11)
        traj = evolve_conditional(h, psi0, times)
        for k, t in enumerate(times):
            exact = expm(-1j * h * t) @ psi0
            assert np.abs(traj.states[k] - exact).max() < 1e-8


def test_conditional_hermitian_norm_conserved():
    h = conditional_hamiltonian(0.4, 0.9, 0.0)
    times = np.linspace(0.0, 1.0, 21)
    traj = evolve_conditional(h, [0, 1, 0], times)
    assert np.abs(traj.norm - 1.0).max() < 1e-10


def test_no_jump_norm_identity():
    # norm^2 + kd2 * int |c_g01|^2 dt accounts for all lost weight
    point = schedule_loop_point(default_circuit(), 0.7, delta=1.36, radius=1.22)
    omega1, omega2 = effective_couplings(point)
    h = conditional_hamiltonian(omega1, omega2, point.kappa_d2,
                                point.resonator2_detuning)
    times = np.linspace(0.0, 0.5, 4001)
    traj = evolve_conditional(h, [0, 1, 0], times)
    jumped = point.kappa_d2 * np.trapezoid(
        np.abs(traj.states[:, 2]) ** 2, times
    )
    assert abs(traj.norm[-1] ** 2 + jumped - 1.0) < 1e-6


def test_lab_frame_trace_preserved_and_postselection_consistent():
    point = schedule_loop_point(default_circuit(), 0.0, delta=1.3608, radius=1.2269)
    times = np.linspace(0.0, 0.1, 51)
    rho_traj = evolve_lab_frame(point, "e00", mode="lindblad", times=times)
    assert np.abs(rho_traj.norm - 1.0).max() < 1e-8
    psi_traj = evolve_lab_frame(point, "e00", mode="nojump", times=times)
    # postselected density-matrix populations match the renormalized no-jump branch
    for k in range(0, len(times), 10):
        rho_s = postselect(rho_traj.states[k])
        psi_s = postselect(psi_traj.states[k])
        assert np.abs(np.diag(rho_s).real - np.abs(psi_s) ** 2).max() < 0.02


def test_lab_frame_zero_coupling_decay():
    c = dataclasses.replace(
        default_circuit(), g1=0.0, g2=0.0, eps1=0.0, eps2=0.0,
        resonator2_detuning=0.0,
    )
    times = np.linspace(0.0, 0.4, 41)
    traj = evolve_lab_frame(c, "g01", mode="lindblad", times=times)
    # single decay channel: occupation moves to the ground state exponentially
    assert np.abs(traj.populations[:, 2] - np.exp(-c.kappa_d2 * times)).max() < 1e-6
    assert np.abs(
        traj.populations[:, 3] - (1 - np.exp(-c.kappa_d2 * times))
    ).max() < 1e-6


def test_lab_frame_truncation_guard():
    c = default_circuit()
    psi0 = np.zeros(8, dtype=complex)
    psi0[7] = 1.0  # |e11>: outside the modeled sector
    with pytest.raises(TruncationViolation):
        evolve_lab_frame(c, psi0, mode="nojump", times=np.linspace(0, 0.01, 5))


def test_lab_frame_matches_effective_model_at_loop_start():
    base = default_circuit()
    k_eff = base.kappa_eff
    point = schedule_loop_point(
        base, 0.0, delta=2 * np.sqrt(2) * k_eff / 3, radius=0.85 * k_eff
    )
    omega1, omega2 = effective_couplings(point)
    h_eff = conditional_hamiltonian(omega1, omega2, point.kappa_d2,
                                    point.resonator2_detuning)
    times = np.linspace(0.0, 0.2, 201)
    for j, label in enumerate(("g10", "e00", "g01")):
        lab = evolve_lab_frame(point, label, mode="nojump", times=times)
        psi0 = np.zeros(3, dtype=complex)
        psi0[j] = 1.0
        eff = evolve_conditional(h_eff, psi0, times)
        rms = np.sqrt(np.mean((lab.populations[:, :3] - eff.populations[:, :3]) ** 2))
        assert rms < 0.05


def test_postselect_cases():
    vec = np.zeros(8, dtype=complex)
    vec[4] = 1 / np.sqrt(2)  # |e00>
    vec[0] = 1 / np.sqrt(2)  # |g00>
    out = postselect(vec)
    assert np.allclose(out, [0, 1, 0])
    already = np.array([0.6, 0.8j, 0.0])
    assert np.allclose(postselect(already), already)
    with pytest.raises(VanishingProjection):
        postselect(np.zeros(3, dtype=complex))


def test_fit_round_trip():
    rng = np.random.default_rng(52)
    for _ in range(10):
        h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        h /= np.abs(np.linalg.eigvals(h)).max()  # keep |E dt| small
        times = np.array([0.0, 0.3, 0.6, 0.9])
        mats = np.stack([expm(-1j * h * t) for t in times])
        fit = fit_eigensystem(times, mats, pair=1)
        a = np.sort_complex(fit.eigenvalues)
        b = np.sort_complex(np.linalg.eigvals(h))
        assert np.abs(a - b).max() / np.abs(b).max() < 1e-6
        assert fit.residual < 1e-8


def test_fit_error_modes():
    times = np.array([0.0, 0.1])
    singular = np.stack([np.ones((3, 3), dtype=complex)] * 2)
    with pytest.raises(SingularStateMatrix):
        fit_eigensystem(times, singular)
    h = np.diag([20.0, -17.0, 3.0]).astype(complex)
    mats = np.stack([expm(-1j * h * t) for t in times])
    with pytest.raises(BranchAmbiguity):
        fit_eigensystem(times, mats)


def test_experiment_pipeline_quantized_phase():
    result = berry_phase_experiment(default_circuit(), n_theta=60)
    assert abs(result.braid.phase - 2 * np.pi) < 0.02 * 2 * np.pi
    assert result.braid.loops_to_close == 3
    assert result.max_residual < 1e-6


def test_experiment_non_nested_trivial():
    base = default_circuit()
    k_eff = base.kappa_eff
    ring = 2 * np.sqrt(2) * k_eff / 3
    result = berry_phase_experiment(
        base, n_theta=60, delta=0.85 * k_eff + 1.5 * ring, radius=0.85 * k_eff
    )
    assert abs(result.braid.phase) < 0.02 * 2 * np.pi
    assert result.braid.loops_to_close == 1


def test_experiment_constant_loop():
    base = default_circuit()
    ring = 2 * np.sqrt(2) * base.kappa_eff / 3
    result = berry_phase_experiment(
        base, n_theta=24, delta=1.5 * ring, radius=1e-9
    )
    assert abs(result.braid.phase) < 1e-6
    assert result.braid.loops_to_close == 1
