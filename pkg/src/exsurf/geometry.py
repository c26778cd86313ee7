"""Biorthogonal quantum geometric tensor on three-direction charts.

Two independent evaluation routes are provided: `qgt_sum` contracts
analytic Hamiltonian derivatives against the spectral decomposition, and
`qgt_fd` differentiates gauge-fixed eigenvectors numerically.  Their
agreement is the principal correctness property of this layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DefectivePair,
    NearDegenerate,
    NegativeDeterminant,
    StencilCrossesEP,
)
from .eigensystem import BiorthEigensystem, eig_biorthogonal
from .models import LAMBDA_Q, h_es_array

#: default minimal |E_band - E_n| accepted by the tensor denominators
EPS_GAP = 1e-6

#: relative tolerance deciding whether g counts as positive semidefinite
EPS_DEFINITE = 1e-9


class Chart3:
    """A three-direction parametrization of a Hamiltonian family.

    Subclasses provide `names`, `hamiltonian(x)` and, when available,
    analytic `d_hamiltonian(x)`; the base class falls back to central
    differences for the latter.
    """

    names: tuple[str, str, str] = ("x0", "x1", "x2")

    def hamiltonian(self, x) -> np.ndarray:
        raise NotImplementedError

    def d_hamiltonian(self, x) -> np.ndarray:
        """(3, n, n) array of dH along the three chart directions."""
        h = 1e-7
        out = []
        for mu in range(3):
            xp = np.array(x, dtype=float)
            xm = np.array(x, dtype=float)
            xp[mu] += h
            xm[mu] -= h
            out.append((self.hamiltonian(xp) - self.hamiltonian(xm)) / (2 * h))
        return np.stack(out)


@dataclass(frozen=True)
class SphereChart(Chart3):
    """Angular chart (alpha, beta, phi) of the parameter sphere of radius R.

    Omega1 = R cos(alpha) e^{i beta}, Omega2 = R sin(alpha) e^{i phi},
    alpha in [0, pi/2], beta and phi periodic on [0, 2 pi).  Derivatives
    are assembled by the chain rule on the linear model, so the chart
    Jacobian is carried inside the tensor itself.
    """

    radius: float
    kappa: float

    names = ("alpha", "beta", "phi")

    def coords(self, x) -> np.ndarray:
        """(..., 4) parameter-space point(s) for chart coordinates (..., 3)."""
        a, b, f = np.moveaxis(np.asarray(x, dtype=float), -1, 0)
        r = self.radius
        return np.stack(
            [
                r * np.cos(a) * np.cos(b),
                r * np.cos(a) * np.sin(b),
                r * np.sin(a) * np.cos(f),
                r * np.sin(a) * np.sin(f),
            ],
            axis=-1,
        )

    def d_coords(self, x) -> np.ndarray:
        """(..., 3, 4) Jacobian d q / d (alpha, beta, phi)."""
        a, b, f = np.moveaxis(np.asarray(x, dtype=float), -1, 0)
        r = self.radius
        ca, sa = np.cos(a), np.sin(a)
        cb, sb = np.cos(b), np.sin(b)
        cf, sf = np.cos(f), np.sin(f)
        zero = np.zeros_like(a)
        da = np.stack([-r * sa * cb, -r * sa * sb, r * ca * cf, r * ca * sf], axis=-1)
        db = np.stack([-r * ca * sb, r * ca * cb, zero, zero], axis=-1)
        df = np.stack([zero, zero, -r * sa * sf, r * sa * cf], axis=-1)
        return np.stack([da, db, df], axis=-2)

    def hamiltonian(self, x) -> np.ndarray:
        return h_es_array(self.coords(x), self.kappa)

    def d_hamiltonian(self, x) -> np.ndarray:
        return np.einsum("...dk,kij->...dij", self.d_coords(x), LAMBDA_Q)


class FunctionChart(Chart3):
    """Chart defined by a callable x -> H; derivatives by central differences
    unless an analytic d_fun is supplied."""

    def __init__(self, fun, d_fun=None, names=("x0", "x1", "x2")):
        self._fun = fun
        self._d_fun = d_fun
        self.names = tuple(names)

    def hamiltonian(self, x) -> np.ndarray:
        return self._fun(np.asarray(x, dtype=float))

    def d_hamiltonian(self, x) -> np.ndarray:
        if self._d_fun is not None:
            return self._d_fun(np.asarray(x, dtype=float))
        return super().d_hamiltonian(x)


@dataclass
class QGTResult:
    """Quantum geometric tensor of one band at one chart point.

    g is the metric (symmetric), curvature the antisymmetric two-form with
    the convention curvature = Im chi - Im chi^T, which reduces to 2 Im chi
    whenever chi is conjugate-symmetric (always in the Hermitian limit).
    `metric_definite` records whether g is positive semidefinite within
    tolerance; the non-Hermitian metric is not guaranteed to be.
    """

    g: np.ndarray
    curvature: np.ndarray
    chi: np.ndarray
    band: int
    at: tuple
    min_gap: float
    metric_definite: bool

    @property
    def F(self) -> np.ndarray:
        return self.curvature


def _chi_from_frame(
    values: np.ndarray,
    right: np.ndarray,
    left: np.ndarray,
    dh: np.ndarray,
    band: int,
    verbatim: bool = False,
) -> np.ndarray:
    """chi_{mu nu} = sum_{n != band} <L_b|dH_mu|R_n><L_n|dH_nu|R_b> / (E_b - E_n)^2.

    With verbatim=True the two matrix elements enter as absolute values
    (the as-printed variant); this destroys the phase information and is
    kept for comparison runs only.
    """
    n = len(values)
    mask = np.ones(n, dtype=bool)
    mask[band] = False
    m_out = np.einsum("i,dij,jn->dn", left[band], dh, right)[:, mask]
    m_in = np.einsum("ni,dij,j->dn", left, dh, right[:, band])[:, mask]
    if verbatim:
        m_out = np.abs(m_out)
        m_in = np.abs(np.einsum("i,dij,jn->dn", left[band], dh, right)[:, mask])
    de = (values[band] - values)[mask]
    return np.einsum("dn,en,n->de", m_out, m_in, 1.0 / de**2)


def _result_from_chi(chi: np.ndarray, band: int, at, min_gap: float) -> QGTResult:
    g = 0.5 * (chi.real + chi.real.T)
    curvature = chi.imag - chi.imag.T
    w = np.linalg.eigvalsh(g)
    definite = bool(w[0] >= -EPS_DEFINITE * max(abs(w[0]), abs(w[-1]), 1e-300))
    return QGTResult(
        g=g,
        curvature=curvature,
        chi=chi,
        band=band,
        at=tuple(np.asarray(at, dtype=float)),
        min_gap=min_gap,
        metric_definite=definite,
    )


def qgt_sum(
    chart: Chart3,
    x,
    band: int,
    eps_gap: float = EPS_GAP,
    verbatim: bool = False,
) -> QGTResult:
    """Geometric tensor from the spectral sum over the other bands.

    Args:
        chart: Hamiltonian family with three named directions.
        x: chart coordinates.
        band: index into the (Re, Im)-sorted eigensystem.
        eps_gap: minimal accepted |E_band - E_n|.
        verbatim: evaluate the as-printed absolute-value variant instead.

    Raises:
        DefectivePair: no biorthogonal frame at x.
        NearDegenerate: some |E_band - E_n| < eps_gap.
    """
    sys = eig_biorthogonal(chart.hamiltonian(x))
    gaps = np.abs(sys.values[band] - np.delete(sys.values, band))
    min_gap = float(gaps.min())
    if min_gap < eps_gap:
        raise NearDegenerate(f"min gap {min_gap:.3e} < eps_gap {eps_gap:.0e} at {x}")
    chi = _chi_from_frame(
        sys.values, sys.right, sys.left, chart.d_hamiltonian(x), band, verbatim
    )
    return _result_from_chi(chi, band, x, min_gap)


def _gauge_fixed_frame(chart, x, ref_values, ref_left, band, eps_gap):
    """Eigenvector pair at x continuing `band`, in the real-positive-overlap gauge."""
    sys = eig_biorthogonal(chart.hamiltonian(x))
    dist = np.abs(sys.values - ref_values[band])
    b = int(np.argmin(dist))
    others = np.delete(np.abs(ref_values - ref_values[band]), band)
    if dist[b] > 0.45 * others.min():
        raise StencilCrossesEP(
            f"band match moved {dist[b]:.3e}, a sizeable fraction of the gap"
        )
    v = sys.right[:, b]
    ov = ref_left @ v
    if ov == 0:
        raise StencilCrossesEP("vanishing overlap with the reference band")
    phase = ov / abs(ov)
    return v / phase, sys.left[b] * phase


def qgt_fd(
    chart: Chart3,
    x,
    band: int,
    h: float = 1e-5,
    eps_gap: float = EPS_GAP,
) -> QGTResult:
    """Geometric tensor from central differences of gauge-fixed eigenvectors.

    chi_{mu nu} = <d_mu psi^L| (1 - |psi><psi^L|) |d_nu psi> with the gauge
    <psi^L(x0)|psi(x)> real positive on every stencil point.  Serves as the
    independent oracle for qgt_sum.

    Raises:
        StencilCrossesEP: band matching failed inside the stencil.
    """
    x = np.asarray(x, dtype=float)
    sys0 = eig_biorthogonal(chart.hamiltonian(x))
    gaps = np.abs(sys0.values[band] - np.delete(sys0.values, band))
    min_gap = float(gaps.min())
    if min_gap < eps_gap:
        raise NearDegenerate(f"min gap {min_gap:.3e} < eps_gap {eps_gap:.0e} at {x}")
    psi0 = sys0.right[:, band]
    left0 = sys0.left[band]
    d_psi, d_left = [], []
    for mu in range(3):
        pair = []
        for sign in (+1.0, -1.0):
            xs = x.copy()
            xs[mu] += sign * h
            try:
                pair.append(
                    _gauge_fixed_frame(chart, xs, sys0.values, left0, band, eps_gap)
                )
            except DefectivePair as exc:
                raise StencilCrossesEP(str(exc)) from exc
        d_psi.append((pair[0][0] - pair[1][0]) / (2.0 * h))
        d_left.append((pair[0][1] - pair[1][1]) / (2.0 * h))
    proj = np.eye(len(psi0), dtype=complex) - np.outer(psi0, left0)
    chi = np.array(
        [[d_left[mu] @ proj @ d_psi[nu] for nu in range(3)] for mu in range(3)]
    )
    return _result_from_chi(chi, band, x, min_gap)


@dataclass(frozen=True)
class ThreeForm:
    """Scalar three-form data derived from one QGTResult.

    m_metric is the metric route 4 sqrt(det g); the two curvature variants
    are diagnostics (the as-printed combination omits one term, the
    symmetrized one includes all three).  `metric_definite` is carried
    along so integrators can restrict to points where g is an actual
    metric.
    """

    m_metric: float
    m_curv_paper: float
    m_curv_sym: float
    det_g: float
    metric_definite: bool


def three_form(q: QGTResult, strict: bool = True) -> ThreeForm:
    """Three-form values from a geometric tensor.

    Raises:
        NegativeDeterminant: det g < -1e-9 and strict is set.
    """
    det_g = float(np.linalg.det(q.g))
    if strict and det_g < -1e-9:
        raise NegativeDeterminant(f"det g = {det_g:.3e} at {q.at}")
    f = q.curvature
    return ThreeForm(
        m_metric=4.0 * np.sqrt(max(det_g, 0.0)),
        m_curv_paper=-0.5 * (f[0, 1] + f[2, 0]),
        m_curv_sym=-0.5 * (f[0, 1] + f[1, 2] + f[2, 0]),
        det_g=det_g,
        metric_definite=q.metric_definite,
    )
