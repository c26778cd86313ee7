"""Point classification, spectrum datasets, and trimer-chain diagnostics."""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .eigensystem import (
    cubic_invariants,
    eig_closed_form_3x3,
    eigvals_closed_3x3,
    match_bands,
)
from .invariants import BraidResult, berry_phase_frames, sample_loop_frames
from .models import (
    ESPoint,
    SSH3Params,
    build_ssh3_bloch,
    build_ssh3_chain,
)


class PointClass(Enum):
    EP3 = "EP3"
    EP2 = "EP2"
    FERMI_ARC = "FermiArcInterior"
    REGULAR = "Regular"


@dataclass(frozen=True)
class ClassifiedPoint:
    label: PointClass
    witness: dict


def es_distance(p: ESPoint) -> float:
    """Parameter-space distance from p to the triple-degeneracy set."""
    return float(
        np.hypot(
            abs(p.omega1) - p.kappa / 3.0,
            abs(p.omega2) - 2.0 * np.sqrt(2.0) * p.kappa / 3.0,
        )
    )


def classify_point(p: ESPoint, tol: float = 1e-6) -> ClassifiedPoint:
    """Classify a parameter point as EP3 / EP2 / Fermi-arc interior / regular.

    All witnesses are normalized by the point's energy scale so the label
    is invariant under (q, kappa) -> (s q, s kappa) for s > 0.  Triple
    degeneracy is tested through the known surface location; double
    degeneracy through the cubic discriminant; the arc interior through
    coalescence of the real parts with distinct eigenvalues.
    """
    scale = max(abs(p.omega1), abs(p.omega2), p.kappa, 1e-300)
    inv = cubic_invariants(p)
    dist = es_distance(p)
    values = eig_closed_form_3x3(p)
    re_spread = float(values.real.max() - values.real.min())
    gaps = [abs(values[i] - values[j]) for i, j in itertools.combinations(range(3), 2)]
    witness = {
        "es_distance": dist,
        "disc": inv.disc,
        "B": inv.B,
        "re_spread": re_spread,
        "min_gap": min(gaps),
    }
    if dist < tol * scale:
        return ClassifiedPoint(PointClass.EP3, witness)
    if abs(inv.disc) < tol * scale**6:
        return ClassifiedPoint(PointClass.EP2, witness)
    if re_spread < tol * scale and min(gaps) > tol * scale:
        return ClassifiedPoint(PointClass.FERMI_ARC, witness)
    return ClassifiedPoint(PointClass.REGULAR, witness)


@dataclass
class ScanNode:
    point: ESPoint
    values: np.ndarray
    label: PointClass


def es_scan(
    q1_values,
    q3_values,
    kappa: float,
    q2_values=(0.0,),
    q4: float = 0.0,
    tol: float = 1e-6,
) -> list[ScanNode]:
    """Closed-form eigenvalues and classification over a (q1[, q2], q3) grid.

    Emitted in row-major order over (q1, q2, q3); one node per grid point
    with all three eigenvalues attached.
    """
    nodes = []
    for q1 in q1_values:
        for q2 in q2_values:
            for q3 in q3_values:
                p = ESPoint(float(q1), float(q2), float(q3), q4, kappa)
                values = eig_closed_form_3x3(p)
                nodes.append(ScanNode(p, values, classify_point(p, tol).label))
    return nodes


@dataclass
class RiemannTrack:
    """Continued eigenvalue curves along a multi-loop parameter path."""

    thetas: np.ndarray
    energies: np.ndarray  # (n_samples, n_bands), band-continued
    braid: BraidResult
    closure_residual: float


def riemann_track(loop, steps: int | None = None) -> RiemannTrack:
    """Track all eigenvalue sheets along the loop until the braid closes.

    The track covers theta in [0, 2 pi loops_to_close]; the residual is the
    largest distance between the final continued eigenvalues and the
    starting ones.

    Raises:
        EPOnPath: the loop passes through a defective point.
    """
    if steps is not None:
        loop = dataclasses.replace(loop, steps_per_loop=steps)
    thetas, frames = sample_loop_frames(loop)
    braid = berry_phase_frames(frames, max_loops=loop.max_loops)
    n = frames[0].n
    loops = braid.loops_to_close
    perms = [match_bands(frames[j], frames[(j + 1) % len(frames)]) for j in range(len(frames))]

    all_thetas = []
    energies = []
    labels = np.arange(n)
    for loop_i in range(loops):
        for j, frame in enumerate(frames):
            all_thetas.append(thetas[j] + 2.0 * np.pi * loop_i)
            energies.append(frame.values[labels])
            labels = perms[j][labels]
    all_thetas.append(2.0 * np.pi * loops)
    energies.append(frames[0].values[labels])
    energies = np.array(energies)
    residual = float(np.abs(energies[-1] - energies[0]).max())
    return RiemannTrack(
        thetas=np.array(all_thetas),
        energies=energies,
        braid=braid,
        closure_residual=residual,
    )


# ---------------------------------------------------------------------------
# trimer chains


@dataclass
class SSH3Spectrum:
    params: SSH3Params
    k_values: np.ndarray | None
    values: np.ndarray
    right: np.ndarray | None  # eigenvectors of the open chain


def ssh3_spectrum(p: SSH3Params, closed_form: bool = False) -> SSH3Spectrum:
    """Spectrum of the trimer model under the requested boundary condition.

    PBC uses the Bloch sweep over k = 2 pi n / N (optionally through the
    closed-form cubic, which resolves exact triple degeneracies); OBC
    diagonalizes the open chain and keeps the right eigenvectors for
    localization metrics.
    """
    if p.bc == "pbc":
        ks = 2.0 * np.pi * np.arange(p.n_cells) / p.n_cells
        solve = eigvals_closed_3x3 if closed_form else np.linalg.eigvals
        values = np.concatenate([solve(build_ssh3_bloch(p, k)) for k in ks])
        return SSH3Spectrum(p, ks, values, None)
    chain = build_ssh3_chain(p)
    values, right = np.linalg.eig(chain)
    return SSH3Spectrum(p, None, values, right)


@dataclass(frozen=True)
class NHSEMetrics:
    boundary_weight: float
    mean_ipr: float


def nhse_metrics(spectrum: SSH3Spectrum) -> NHSEMetrics:
    """Boundary localization of the open-chain right eigenstates.

    boundary_weight averages the probability weight in the first and last
    unit cell over all normalized eigenstates; mean_ipr averages
    sum_i |psi_i|^4.
    """
    if spectrum.right is None:
        raise ValueError("nhse_metrics needs an open-chain spectrum with eigenvectors")
    prob = np.abs(spectrum.right) ** 2
    prob = prob / prob.sum(axis=0)
    boundary = prob[:3].sum(axis=0) + prob[-3:].sum(axis=0)
    ipr = (prob**2).sum(axis=0)
    return NHSEMetrics(
        boundary_weight=float(boundary.mean()), mean_ipr=float(ipr.mean())
    )


def coalescence_measure(values: np.ndarray) -> float:
    """min over triples of (max pairwise |dE| within the triple).

    Zero iff some three eigenvalues coincide; the detector for third-order
    degeneracies in a spectrum of any size.
    """
    values = np.asarray(values)
    best = np.inf
    for tri in itertools.combinations(range(len(values)), 3):
        spread = max(
            abs(values[a] - values[b]) for a, b in itertools.combinations(tri, 2)
        )
        best = min(best, spread)
    return float(best)


def ep3_detector(p: SSH3Params, t1_values) -> np.ndarray:
    """Triple-coalescence measure along a t1 sweep.

    PBC spectra go through the closed-form cubic so an exact triple
    degeneracy detects as an exact zero instead of eigensolver noise.
    """
    out = []
    for t1 in t1_values:
        pt = dataclasses.replace(p, t1=float(t1))
        spec = ssh3_spectrum(pt, closed_form=(pt.bc == "pbc"))
        out.append(coalescence_measure(spec.values))
    return np.array(out)
