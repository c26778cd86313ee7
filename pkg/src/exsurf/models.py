"""Hamiltonian families: lossy three-band model, loop-control models, and trimer chains.

All builders are pure functions of their arguments (hbar = 1, energies and
rates share one angular-frequency unit), so they are safe to call from
worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gellmann import GELL_MANN, IDENTITY, SQRT3

#: the four directions entering the three-band model, in coordinate order
MODEL_DIRECTIONS = ("q1", "q2", "q3", "q4")

# lambda_1, lambda_2, lambda_6, lambda_7 stacked for vectorized contraction
LAMBDA_Q = np.stack([GELL_MANN[0], GELL_MANN[1], GELL_MANN[5], GELL_MANN[6]])

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class ESPoint:
    """A point of the four-dimensional parameter space with loss rate kappa."""

    q1: float
    q2: float
    q3: float
    q4: float
    kappa: float = 0.0

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")

    @property
    def omega1(self) -> complex:
        """Coupling between the first two levels, q1 + i q2."""
        return self.q1 + 1j * self.q2

    @property
    def omega2(self) -> complex:
        """Coupling between the last two levels, q3 + i q4."""
        return self.q3 + 1j * self.q4

    @property
    def q(self) -> np.ndarray:
        return np.array([self.q1, self.q2, self.q3, self.q4])


def h_es_array(q: np.ndarray, kappa: float) -> np.ndarray:
    """Three-band Hamiltonians for a batch of parameter points.

    Args:
        q: (..., 4) real array of (q1, q2, q3, q4).
        kappa: loss rate.

    Returns:
        (..., 3, 3) complex array q.lambda + i*kappa*lambda_8.
    """
    q = np.asarray(q, dtype=float)
    return np.einsum("...k,kij->...ij", q, LAMBDA_Q) + 1j * kappa * GELL_MANN[7]


def build_h_es(p: ESPoint) -> np.ndarray:
    """Hamiltonian of the lossy three-band model at one parameter point.

    H = q1 l1 + q2 l2 + q3 l6 + q4 l7 + i kappa l8.  For q2 = q4 = 0 this is

        [[i k/sqrt3, Omega1,    0        ],
         [Omega1,    i k/sqrt3, Omega2   ],
         [0,         Omega2,    -2i k/sqrt3]].
    """
    return h_es_array(p.q, p.kappa)


def dh_es(direction: str | int) -> np.ndarray:
    """Analytic derivative of build_h_es along one parameter direction.

    The model is linear in q, so the derivative is the corresponding
    Gell-Mann matrix exactly.

    Args:
        direction: one of "q1".."q4" or an index 0..3.
    """
    if isinstance(direction, str):
        if direction not in MODEL_DIRECTIONS:
            raise ValueError(f"unknown direction {direction!r}")
        direction = MODEL_DIRECTIONS.index(direction)
    if not 0 <= direction <= 3:
        raise ValueError(f"direction index must be in 0..3, got {direction}")
    return LAMBDA_Q[direction].copy()


@dataclass(frozen=True)
class BerryLoopSpec:
    """Circular control loop for the three-band braiding experiment.

    The loop lives in the (q3, q_perp) control plane:
    q3 = radius*sin(theta) + delta, q4 = 0, q_perp = radius*cos(theta),
    with the first coupling pinned at kappa/3.
    """

    delta: float
    radius: float
    kappa: float = 1.0
    steps_per_loop: int = 3000
    max_loops: int = 6

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("loop radius must be positive")
        if self.steps_per_loop < 16:
            raise ValueError("steps_per_loop must be at least 16")

    @property
    def er_radius(self) -> float:
        """Radius of the exceptional ring in the (q3, q4) plane, 2*sqrt(2)*kappa/3."""
        return 2.0 * np.sqrt(2.0) * self.kappa / 3.0

    @property
    def nesting_ratio(self) -> float:
        """(delta - radius) / er_radius; the loop threads the ring iff < 1."""
        return (self.delta - self.radius) / self.er_radius

    def q3(self, theta: float) -> float:
        return self.radius * np.sin(theta) + self.delta

    def q_perp(self, theta: float) -> float:
        return self.radius * np.cos(theta)

    def hamiltonian(self, theta: float) -> np.ndarray:
        return build_h_berry(self, theta)


def build_h_berry(spec: BerryLoopSpec, theta: float) -> np.ndarray:
    """Control Hamiltonian along the braiding loop.

    H = (kappa/3) l1 + q3 l6 + q_perp (l8 - I/sqrt3) + i kappa l8,
    with (q3, q_perp) from the loop map at angle theta.
    """
    k = spec.kappa
    return (
        (k / 3.0) * GELL_MANN[0]
        + spec.q3(theta) * GELL_MANN[5]
        + spec.q_perp(theta) * (GELL_MANN[7] - IDENTITY / SQRT3)
        + 1j * k * GELL_MANN[7]
    )


@dataclass(frozen=True)
class TwoLevelParams:
    """Bloch-vector parametrization of the two-level control model."""

    amplitude: float
    theta: float
    phi: float
    gamma: float = 0.0


def build_h_twolevel(p: TwoLevelParams, nonhermitian: bool = False) -> np.ndarray:
    """Two-level Hamiltonian R(sin t cos f sx + sin t sin f sy + cos t sz) [+ i gamma sz]."""
    h = p.amplitude * (
        np.sin(p.theta) * np.cos(p.phi) * _PAULI_X
        + np.sin(p.theta) * np.sin(p.phi) * _PAULI_Y
        + np.cos(p.theta) * _PAULI_Z
    )
    if nonhermitian:
        h = h + 1j * p.gamma * _PAULI_Z
    return h


@dataclass(frozen=True)
class TwoLevelLoopSpec:
    """Circular loop in the (x, z) plane of the two-level model with loss.

    H(theta) = x sx + z sz + i gamma sz with x = radius*sin(theta) + delta
    and z = radius*cos(theta).  The exceptional ring sits at |x| = gamma, z = 0,
    so the loop threads it iff (delta - radius)/gamma < 1 (for delta > 0).
    """

    delta: float
    radius: float
    gamma: float = 1.0
    steps_per_loop: int = 2000
    max_loops: int = 6

    @property
    def er_radius(self) -> float:
        return self.gamma

    @property
    def nesting_ratio(self) -> float:
        return (self.delta - self.radius) / self.gamma

    def hamiltonian(self, theta: float) -> np.ndarray:
        x = self.radius * np.sin(theta) + self.delta
        z = self.radius * np.cos(theta)
        return x * _PAULI_X + (z + 1j * self.gamma) * _PAULI_Z


@dataclass(frozen=True)
class SSH3Params:
    """Parameters of the two trimer chain variants.

    model "one": intra-cell asymmetric hopping t1 +- gamma, plain t2, and
    inter-cell couplings w1, w2.
    model "two": diagonal loss/gain block instead of hopping asymmetry; w2
    is unused there.
    """

    model: str
    t1: float
    t2: float
    w1: float
    w2: float = 0.0
    gamma: float = 0.0
    n_cells: int = 10
    bc: str = "obc"

    def __post_init__(self):
        if self.model not in ("one", "two"):
            raise ValueError(f"model must be 'one' or 'two', got {self.model!r}")
        if self.bc not in ("pbc", "obc"):
            raise ValueError(f"bc must be 'pbc' or 'obc', got {self.bc!r}")


def build_ssh3_bloch(p: SSH3Params, k: float) -> np.ndarray:
    """Bulk Hamiltonian of the selected trimer model at crystal momentum k.

    Model one:
        (t1 + w1 cos k) l1 + (w1 sin k + i gamma) l2
        + (t2 + w2 cos k) l6 + (w2 sin k) l7,
    so element (1,2) reads (t1 + gamma) + w1 e^{-ik}.

    Model two:
        (t1 + w1 cos k) l1 + (w1 sin k) l3 + t2 l6 - i gamma (l8 - I/sqrt3),
    whose only non-Hermitian entry is +i sqrt3 gamma on the third site.
    """
    if p.model == "one":
        return (
            (p.t1 + p.w1 * np.cos(k)) * GELL_MANN[0]
            + (p.w1 * np.sin(k) + 1j * p.gamma) * GELL_MANN[1]
            + (p.t2 + p.w2 * np.cos(k)) * GELL_MANN[5]
            + (p.w2 * np.sin(k)) * GELL_MANN[6]
        )
    return (
        (p.t1 + p.w1 * np.cos(k)) * GELL_MANN[0]
        + (p.w1 * np.sin(k)) * GELL_MANN[2]
        + p.t2 * GELL_MANN[5]
        - 1j * p.gamma * (GELL_MANN[7] - IDENTITY / SQRT3)
    )


def ssh3_blocks(p: SSH3Params) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Real-space blocks (H0, Hplus, Hminus) of the Bloch matrix.

    Convention: H(k) = H0 + Hplus e^{-ik} + Hminus e^{+ik}, where Hplus
    hops from cell n+1 to cell n (it sits on the (n, n+1) block of the
    chain).  This makes the discrete-k ring spectrum identity exact.
    """
    if p.model == "one":
        h0 = np.array(
            [[0, p.t1 + p.gamma, 0], [p.t1 - p.gamma, 0, p.t2], [0, p.t2, 0]],
            dtype=complex,
        )
        hp = np.array([[0, p.w1, 0], [0, 0, p.w2], [0, 0, 0]], dtype=complex)
        hm = np.array([[0, 0, 0], [p.w1, 0, 0], [0, p.w2, 0]], dtype=complex)
        return h0, hp, hm
    h0 = np.array(
        [[0, p.t1, 0], [p.t1, 0, p.t2], [0, p.t2, 1j * SQRT3 * p.gamma]],
        dtype=complex,
    )
    # w1 cos k on l1 and w1 sin k on l3 split into e^{-+ik} halves
    hp = 0.5 * p.w1 * np.array([[1j, 1, 0], [1, -1j, 0], [0, 0, 0]], dtype=complex)
    hm = 0.5 * p.w1 * np.array([[-1j, 1, 0], [1, 1j, 0], [0, 0, 0]], dtype=complex)
    return h0, hp, hm


def build_ssh3_chain(p: SSH3Params) -> np.ndarray:
    """Real-space chain of n_cells trimer cells, 3N x 3N.

    Under "pbc" the wrap-around blocks are included and the spectrum equals
    the union of Bloch spectra over k = 2 pi n / N; under "obc" they are
    dropped.
    """
    if p.n_cells < 2:
        raise ValueError(f"n_cells must be >= 2, got {p.n_cells}")
    h0, hp, hm = ssh3_blocks(p)
    n = p.n_cells
    h = np.zeros((3 * n, 3 * n), dtype=complex)
    for c in range(n):
        h[3 * c : 3 * c + 3, 3 * c : 3 * c + 3] = h0
        if c + 1 < n:
            h[3 * c : 3 * c + 3, 3 * c + 3 : 3 * c + 6] = hp
            h[3 * c + 3 : 3 * c + 6, 3 * c : 3 * c + 3] = hm
    if p.bc == "pbc":
        h[3 * (n - 1) :, 0:3] += hp
        h[0:3, 3 * (n - 1) :] += hm
    return h
