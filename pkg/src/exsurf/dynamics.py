"""Circuit simulation: a driven qubit coupled to a lossless and a lossy resonator.

Units: angular frequencies in rad/us (2 pi x MHz), times in us, hbar = 1.
Basis conventions: the single-excitation subspace is ordered
(|g10>, |e00>, |g01>) so the conditional Hamiltonian displays the
three-band structure directly; the lab-frame space is
qubit (g, e) x resonator1 (0, 1) x resonator2 (0, 1), index = 4q + 2n1 + n2.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm, logm
from scipy.optimize import brentq
from scipy.special import jv

from .errors import (
    BranchAmbiguity,
    SingularStateMatrix,
    TruncationViolation,
    VanishingProjection,
)
from .eigensystem import eig_biorthogonal
from .invariants import BraidResult, berry_phase_frames

TWO_PI = 2.0 * np.pi

#: single-excitation basis order
BASIS3 = ("g10", "e00", "g01")

#: populations reported by trajectories
POPULATION_LABELS = ("e00", "g10", "g01", "g00")

# lab-frame indices, |q n1 n2> with q in (g=0, e=1)
_IDX = {"g00": 0, "g01": 1, "g10": 2, "g11": 3, "e00": 4, "e01": 5, "e10": 6, "e11": 7}
_SINGLE = [_IDX[s] for s in BASIS3]
_OUTSIDE = [_IDX[s] for s in ("g11", "e01", "e10", "e11")]


@dataclass(frozen=True)
class CircuitParams:
    """Device frequencies, couplings, modulation drive, and decay rates.

    The two modulation tones sit at nu1 = (omega_q - omega_r1)/2 and
    nu2 = -(omega_q - omega_r2), selecting the second and the minus-first
    sideband respectively; `default_circuit` derives them from the mode
    frequencies.  `resonator2_detuning` is the extra rotating-frame shift
    on the lossy resonator used as the out-of-plane control knob.
    """

    omega_q: float
    omega_r1: float
    omega_r2: float
    g1: float
    g2: float
    eps1: float
    eps2: float
    nu1: float
    nu2: float
    kappa_d2: float
    resonator2_detuning: float = 0.0
    gamma_d: float = 0.0
    gamma_p: float = 0.0
    kappa_d1: float = 0.0
    kappa_p1: float = 0.0
    kappa_p2: float = 0.0

    @property
    def detuning1(self) -> float:
        return self.omega_q - self.omega_r1

    @property
    def detuning2(self) -> float:
        return self.omega_q - self.omega_r2

    @property
    def mu1(self) -> float:
        if self.nu1 == 0:
            raise ValueError("modulation frequency nu1 is zero")
        return self.eps1 / self.nu1

    @property
    def mu2(self) -> float:
        if self.nu2 == 0:
            raise ValueError("modulation frequency nu2 is zero")
        return self.eps2 / self.nu2

    @property
    def kappa_eff(self) -> float:
        """Loss scale of the traceless three-band part, kappa_d2 / (2 sqrt3)."""
        return self.kappa_d2 / (2.0 * np.sqrt(3.0))

    def resonance_residuals(self) -> tuple[float, float]:
        """(nu1 - detuning1/2, nu2 + detuning2); zero when sidebands are resonant."""
        return (self.nu1 - self.detuning1 / 2.0, self.nu2 + self.detuning2)

    def check_resonance(self) -> None:
        r1, r2 = self.resonance_residuals()
        scale = max(abs(self.detuning1), abs(self.detuning2))
        if max(abs(r1), abs(r2)) > 1e-6 * scale:
            warnings.warn(
                "modulation frequencies do not satisfy the sideband resonance "
                f"conditions (residuals {r1:.4g}, {r2:.4g} rad/us); the "
                "effective three-level model will not apply",
                stacklevel=2,
            )


def _mu_for_bessel(order: int, target: float) -> float:
    """Smallest-|mu| solution of J_order(mu) = target."""
    f = lambda m: jv(order, m) - target
    for lo, hi in ((0.0, 3.0), (-3.0, 0.0)):
        if f(lo) * f(hi) <= 0:
            return brentq(f, lo, hi, xtol=1e-15)
    raise ValueError(f"J_{order} never reaches {target} on [-3, 3]")


def default_circuit(kappa_d2: float = 5.0) -> CircuitParams:
    """Reported device frequencies with self-consistent modulation tones.

    The published drive frequencies do not satisfy the sideband resonance
    conditions for these mode frequencies, so the tones are derived from
    the detunings instead; couplings are scheduled for the loop start
    (theta = 0) of the nominal braiding experiment.
    """
    omega_q = TWO_PI * 5860.0
    omega_r1 = TWO_PI * 5580.0
    omega_r2 = TWO_PI * 6660.0
    base = CircuitParams(
        omega_q=omega_q,
        omega_r1=omega_r1,
        omega_r2=omega_r2,
        g1=TWO_PI * 20.0,
        g2=TWO_PI * 40.0,
        eps1=0.0,
        eps2=0.0,
        nu1=(omega_q - omega_r1) / 2.0,
        nu2=-(omega_q - omega_r2),
        kappa_d2=kappa_d2,
    )
    k_eff = base.kappa_eff
    r_ring = 2.0 * np.sqrt(2.0) * k_eff / 3.0
    return schedule_loop_point(base, theta=0.0, delta=r_ring, radius=0.85 * k_eff)


def schedule_loop_point(
    base: CircuitParams, theta: float, delta: float, radius: float
) -> CircuitParams:
    """Drive amplitudes realizing one point of the braiding loop.

    Targets Omega1 = kappa_eff / 3 (pinned), Omega2 = radius sin(theta)
    + delta, and the out-of-plane control q_perp = radius cos(theta)
    realized as a rotating-frame shift -sqrt3 q_perp on the lossy
    resonator.
    """
    k_eff = base.kappa_eff
    omega1 = k_eff / 3.0
    omega2 = radius * np.sin(theta) + delta
    q_perp = radius * np.cos(theta)
    eps1 = _mu_for_bessel(2, omega1 / base.g1) * base.nu1
    eps2 = _mu_for_bessel(-1, omega2 / base.g2) * base.nu2
    return dataclasses.replace(
        base,
        eps1=eps1,
        eps2=eps2,
        resonator2_detuning=-np.sqrt(3.0) * q_perp,
    )


def effective_couplings(c: CircuitParams) -> tuple[float, float]:
    """Sideband-selected couplings (Omega1, Omega2) = (g1 J_2(mu1), g2 J_-1(mu2))."""
    return float(c.g1 * jv(2, c.mu1)), float(c.g2 * jv(-1, c.mu2))


def conditional_hamiltonian(
    omega1: float,
    omega2: float,
    kappa_d2: float,
    detuning2: float = 0.0,
) -> np.ndarray:
    """Single-excitation no-jump Hamiltonian in the (g10, e00, g01) basis.

    [[0,      omega1, 0                          ],
     [omega1, 0,      omega2                     ],
     [0,      omega2, detuning2 - i kappa_d2 / 2 ]]

    Up to the uniform shift -i kappa_d2/6 (plus the detuning knob) the
    matrix belongs to the three-band family with loss kappa_d2/(2 sqrt3).
    """
    return np.array(
        [
            [0.0, omega1, 0.0],
            [omega1, 0.0, omega2],
            [0.0, omega2, detuning2 - 0.5j * kappa_d2],
        ],
        dtype=complex,
    )


@dataclass
class Trajectory:
    """Time-stamped states with norms and subspace populations.

    For pure-state runs `states` is (nt, dim) and `norm` the vector norm
    (monotone non-increasing under conditional evolution); for density
    runs `states` is (nt, dim, dim) and `norm` the trace.  `populations`
    columns follow POPULATION_LABELS; in the three-level conditional model
    the ground weight is the leaked 1 - |psi|^2.
    """

    times: np.ndarray
    states: np.ndarray
    norm: np.ndarray
    populations: np.ndarray

    @property
    def labels(self) -> tuple[str, ...]:
        return POPULATION_LABELS


def _populations_3(states: np.ndarray, norm: np.ndarray) -> np.ndarray:
    p = np.abs(states) ** 2  # columns (g10, e00, g01)
    return np.column_stack([p[:, 1], p[:, 0], p[:, 2], 1.0 - norm**2])


def evolve_conditional(h, psi0, times) -> Trajectory:
    """Integrate d psi/dt = -i H(t) psi with adaptive error control.

    Args:
        h: (3, 3) array or callable t -> (n, n) array.
        psi0: normalized initial state in the (g10, e00, g01) basis.
        times: sample times (the first entry is the initial time).
    """
    times = np.asarray(times, dtype=float)
    psi0 = np.asarray(psi0, dtype=complex)
    h_of_t = h if callable(h) else (lambda t, _h=np.asarray(h, dtype=complex): _h)

    def rhs(t, y):
        return -1j * (h_of_t(t) @ y)

    sol = solve_ivp(
        rhs,
        (times[0], times[-1]),
        psi0,
        t_eval=times,
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
    )
    if not sol.success:
        raise RuntimeError(f"integrator failed: {sol.message}")
    states = sol.y.T
    norm = np.linalg.norm(states, axis=1)
    return Trajectory(times, states, norm, _populations_3(states, norm))


def _kron3(a, b, c):
    return np.kron(np.kron(a, b), c)


def _lab_operators():
    low = np.array([[0, 1], [0, 0]], dtype=complex)  # (g,e) and (0,1) ordering
    eye = np.eye(2, dtype=complex)
    sigma_minus = _kron3(low, eye, eye)
    a1 = _kron3(eye, low, eye)
    a2 = _kron3(eye, eye, low)
    return sigma_minus, a1, a2


def _lab_dissipators(c: CircuitParams):
    sigma_minus, a1, a2 = _lab_operators()
    sigma_z = _kron3(np.diag([-1.0, 1.0]).astype(complex), np.eye(2), np.eye(2))
    ops = [(c.kappa_d2, a2)]
    if c.gamma_d:
        ops.append((c.gamma_d, sigma_minus))
    if c.gamma_p:
        ops.append((c.gamma_p / 2.0, sigma_z))
    if c.kappa_d1:
        ops.append((c.kappa_d1, a1))
    if c.kappa_p1:
        ops.append((c.kappa_p1, a1.conj().T @ a1))
    if c.kappa_p2:
        ops.append((c.kappa_p2, a2.conj().T @ a2))
    return ops


def _check_truncation(populations_outside: float):
    if populations_outside > 1e-6:
        raise TruncationViolation(
            f"population {populations_outside:.3e} leaked outside the "
            "single-excitation + ground sector"
        )


def evolve_lab_frame(
    c: CircuitParams,
    psi0,
    t_final: float | None = None,
    mode: str = "nojump",
    n_samples: int = 201,
    times=None,
) -> Trajectory:
    """Interaction-picture evolution with the bichromatically modulated drive.

    The coupling phases carry the accumulated qubit phase
    mu1 sin(nu1 t) + mu2 sin(nu2 t) on top of the static detunings.  In
    "nojump" mode the state vector evolves under H(t) minus i/2 times the
    jump-operator products; in "lindblad" mode the full density matrix
    evolves with the lossy resonator's jump term (plus any optional rates).

    Args:
        psi0: 8-component lab vector, 3-component (g10, e00, g01) vector,
            or a basis label from BASIS3.

    Raises:
        TruncationViolation: weight above 1e-6 appears outside the
            single-excitation + ground sector.
    """
    if mode not in ("nojump", "lindblad"):
        raise ValueError(f"mode must be 'nojump' or 'lindblad', got {mode!r}")
    c.check_resonance()
    sigma_minus, a1, a2 = _lab_operators()
    coupling1 = a1.conj().T @ sigma_minus
    coupling2 = a2.conj().T @ sigma_minus
    n2 = a2.conj().T @ a2

    if isinstance(psi0, str):
        vec = np.zeros(8, dtype=complex)
        vec[_IDX[psi0]] = 1.0
        psi0 = vec
    else:
        psi0 = np.asarray(psi0, dtype=complex)
        if psi0.shape == (3,):
            vec = np.zeros(8, dtype=complex)
            vec[_SINGLE] = psi0
            psi0 = vec

    d1, d2 = c.detuning1, c.detuning2
    mu1, mu2 = c.mu1, c.mu2
    nu1, nu2 = c.nu1, c.nu2

    def h_of_t(t):
        phase_mod = mu1 * np.sin(nu1 * t) + mu2 * np.sin(nu2 * t)
        c1 = c.g1 * np.exp(1j * (d1 * t - phase_mod))
        c2 = c.g2 * np.exp(1j * (d2 * t - phase_mod))
        h = c1 * coupling1 + c2 * coupling2
        h = h + h.conj().T
        return h + c.resonator2_detuning * n2

    if times is None:
        if t_final is None:
            raise ValueError("pass either t_final or explicit sample times")
        times = np.linspace(0.0, t_final, n_samples)
    else:
        times = np.asarray(times, dtype=float)
    t_final = float(times[-1])
    # bound the step by the fastest drive component
    max_freq = max(abs(d1) + 2 * abs(nu1), abs(d2) + 2 * abs(nu2), abs(nu2)) / TWO_PI
    max_step = 1.0 / (50.0 * max_freq)
    dissipators = _lab_dissipators(c)

    if mode == "nojump":
        decay = sum(rate * (op.conj().T @ op) for rate, op in dissipators)

        def rhs(t, y):
            return -1j * ((h_of_t(t) - 0.5j * decay) @ y)

        sol = solve_ivp(
            rhs,
            (0.0, t_final),
            psi0,
            t_eval=times,
            method="DOP853",
            rtol=1e-10,
            atol=1e-12,
            max_step=max_step,
        )
        if not sol.success:
            raise RuntimeError(f"integrator failed: {sol.message}")
        states = sol.y.T
        _check_truncation(float((np.abs(states[:, _OUTSIDE]) ** 2).max()))
        norm = np.linalg.norm(states, axis=1)
        pops = np.column_stack(
            [
                np.abs(states[:, _IDX["e00"]]) ** 2,
                np.abs(states[:, _IDX["g10"]]) ** 2,
                np.abs(states[:, _IDX["g01"]]) ** 2,
                np.abs(states[:, _IDX["g00"]]) ** 2,
            ]
        )
        return Trajectory(times, states, norm, pops)

    rho0 = np.outer(psi0, psi0.conj())

    def rhs_rho(t, y):
        rho = y.reshape(8, 8)
        h = h_of_t(t)
        out = -1j * (h @ rho - rho @ h)
        for rate, op in dissipators:
            op_dag = op.conj().T
            prod = op_dag @ op
            out = out + rate * (op @ rho @ op_dag - 0.5 * (prod @ rho + rho @ prod))
        return out.reshape(-1)

    sol = solve_ivp(
        rhs_rho,
        (0.0, t_final),
        rho0.reshape(-1),
        t_eval=times,
        method="DOP853",
        rtol=1e-10,
        atol=1e-12,
        max_step=max_step,
    )
    if not sol.success:
        raise RuntimeError(f"integrator failed: {sol.message}")
    rhos = sol.y.T.reshape(-1, 8, 8)
    diag = np.real(np.einsum("tii->ti", rhos))
    _check_truncation(float(diag[:, _OUTSIDE].max()))
    norm = np.einsum("tii->t", rhos).real
    pops = np.column_stack(
        [diag[:, _IDX["e00"]], diag[:, _IDX["g10"]], diag[:, _IDX["g01"]], diag[:, _IDX["g00"]]]
    )
    return Trajectory(times, rhos, norm, pops)


def postselect(state: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Project onto the single-excitation subspace and renormalize.

    Accepts an 8-component lab vector, a 3-component conditional vector,
    or an 8x8 density matrix; the result is in the (g10, e00, g01) basis.

    Raises:
        VanishingProjection: subspace weight below eps.
    """
    state = np.asarray(state, dtype=complex)
    if state.ndim == 2:
        sub = state[np.ix_(_SINGLE, _SINGLE)]
        weight = float(np.trace(sub).real)
        if weight < eps:
            raise VanishingProjection(f"subspace weight {weight:.3e} below {eps:.0e}")
        return sub / weight
    vec = state if state.shape == (3,) else state[_SINGLE]
    norm = np.linalg.norm(vec)
    if norm < eps:
        raise VanishingProjection(f"subspace norm {norm:.3e} below {eps:.0e}")
    return vec / norm


@dataclass
class FitResult:
    """Hamiltonian recovered from trajectory snapshots."""

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    residual: float
    h_fit: np.ndarray


def state_matrix(trajectories) -> np.ndarray:
    """(nt, 3, 3) stack with column j the state launched from basis state j."""
    return np.stack([t.states for t in trajectories], axis=-1)


def fit_eigensystem(times, matrices, pair: int = 0) -> FitResult:
    """Recover the generator from two propagator snapshots.

    H_fit = (i/dt) log(U(t+dt) U(t)^{-1}) with the principal matrix log;
    valid while every |E dt| < pi/2.  The residual is the worst relative
    defect of propagating each recorded snapshot from the first one with
    H_fit.

    Raises:
        SingularStateMatrix: a snapshot is not invertible.
        BranchAmbiguity: eigenvalues too large for the sample spacing.
    """
    times = np.asarray(times, dtype=float)
    matrices = np.asarray(matrices, dtype=complex)
    if len(times) < 2:
        raise ValueError("need at least two sample times")
    if np.linalg.cond(matrices[pair]) > 1e12:
        raise SingularStateMatrix("state matrix is numerically singular")
    dt = times[pair + 1] - times[pair]
    step = matrices[pair + 1] @ np.linalg.inv(matrices[pair])
    h_fit = (1j / dt) * logm(step)
    sys = eig_biorthogonal(h_fit)
    if np.max(np.abs(sys.values)) * dt >= np.pi / 2.0:
        raise BranchAmbiguity(
            "|E dt| >= pi/2: principal log branch cannot be trusted; "
            "use closer sample times"
        )
    residual = 0.0
    for k in range(len(times)):
        pred = expm(-1j * h_fit * (times[k] - times[0])) @ matrices[0]
        residual = max(
            residual,
            float(np.linalg.norm(pred - matrices[k]) / np.linalg.norm(matrices[k])),
        )
    return FitResult(
        eigenvalues=sys.values,
        right=sys.right,
        left=sys.left,
        residual=residual,
        h_fit=h_fit,
    )


@dataclass
class ExperimentResult:
    """Fitted eigensystem sweep along the control loop plus its braid."""

    thetas: np.ndarray
    fitted_values: np.ndarray  # (n_theta, 3)
    braid: BraidResult
    max_residual: float


def berry_phase_experiment(
    base: CircuitParams,
    n_theta: int = 120,
    delta: float | None = None,
    radius: float | None = None,
    source: str = "effective",
    fit_times=(0.08, 0.10),
    max_loops: int = 6,
) -> ExperimentResult:
    """Full measurement pipeline: evolve, fit, accumulate the braid phase.

    For every theta on the loop the three basis states are evolved (with
    the effective conditional model, or the full lab-frame drive), the
    generator is fitted from two snapshots, and the loop phase is then
    accumulated through the fitted biorthogonal frames exactly as in the
    idealized computation.

    Args:
        source: "effective" evolves under the scheduled conditional
            Hamiltonian; "lab" runs the full modulated interaction picture
            and projects onto the single-excitation subspace (no-jump
            branch, amplitudes kept unnormalized).
    """
    if source not in ("effective", "lab"):
        raise ValueError(f"source must be 'effective' or 'lab', got {source!r}")
    k_eff = base.kappa_eff
    if delta is None:
        delta = 2.0 * np.sqrt(2.0) * k_eff / 3.0
    if radius is None:
        radius = 0.85 * k_eff
    thetas = TWO_PI * np.arange(n_theta) / n_theta
    sample_times = np.array([0.0, *fit_times])
    frames = []
    fitted = []
    max_residual = 0.0
    for theta in thetas:
        point = schedule_loop_point(base, theta, delta=delta, radius=radius)
        omega1, omega2 = effective_couplings(point)
        h_eff = conditional_hamiltonian(
            omega1, omega2, point.kappa_d2, point.resonator2_detuning
        )
        trajs = []
        for j in range(3):
            psi0 = np.zeros(3, dtype=complex)
            psi0[j] = 1.0
            if source == "effective":
                trajs.append(evolve_conditional(h_eff, psi0, sample_times))
            else:
                lab = evolve_lab_frame(
                    point, psi0, mode="nojump", times=sample_times
                )
                # keep raw single-excitation amplitudes; fitting needs linearity
                trajs.append(
                    Trajectory(
                        lab.times,
                        lab.states[:, _SINGLE],
                        lab.norm,
                        lab.populations,
                    )
                )
        fit = fit_eigensystem(sample_times, state_matrix(trajs), pair=1)
        max_residual = max(max_residual, fit.residual)
        frames.append(eig_biorthogonal(fit.h_fit))
        fitted.append(frames[-1].values)
    braid = berry_phase_frames(frames, max_loops=max_loops)
    return ExperimentResult(
        thetas=thetas,
        fitted_values=np.array(fitted),
        braid=braid,
        max_residual=max_residual,
    )
