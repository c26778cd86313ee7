"""Biorthogonal eigendecomposition and the closed-form cubic for 3x3 families.

The closed-form path (Cardano on the characteristic cubic) is kept fully
independent of the LAPACK-based general path so each can serve as the
other's oracle.  Near a multiple root the cubic solver snaps to the exact
repeated root instead of amplifying coefficient round-off by a cube root,
which is what a direct eigensolver cannot avoid at a defective point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import AmbiguousMatch, DefectivePair
from .gellmann import SQRT3
from .models import ESPoint, build_h_es

#: relative coefficient size below which the characteristic cubic is treated
#: as having an exact multiple root (floating noise of the traceless family)
_SNAP = 200.0 * np.finfo(float).eps

_PERMS3 = np.array(list(itertools.permutations(range(3))))


@dataclass(frozen=True)
class CubicInvariants:
    """Coefficient data of the characteristic cubic E^3 - B E - det H = 0."""

    A: float
    B: float
    det_h: complex
    disc: float

    @property
    def c_reported(self) -> complex:
        """sqrt(4B^3 - A^2) as quoted in the source model; diagnostic only.

        Dimensionally inconsistent (B^3 vs A^2), retained for comparison.
        The meaningful degeneracy witness is `disc` = 4B^3 + kappa^2 A^2.
        """
        return np.sqrt(complex(4.0 * self.B**3 - self.A**2))


def cubic_invariants(p: ESPoint) -> CubicInvariants:
    """Invariants of the three-band characteristic polynomial at a point.

    A = 6|O1|^2 - 3|O2|^2 + 2 kappa^2, B = |O1|^2 + |O2|^2 - kappa^2,
    det H = i kappa A / (3 sqrt3), disc = 4 B^3 + kappa^2 A^2.  disc
    vanishes exactly on eigenvalue degeneracies of the family.
    """
    o1 = abs(p.omega1) ** 2
    o2 = abs(p.omega2) ** 2
    k2 = p.kappa**2
    a = 6.0 * o1 - 3.0 * o2 + 2.0 * k2
    b = o1 + o2 - k2
    det_h = 1j * p.kappa * a / (3.0 * SQRT3)
    disc = 4.0 * b**3 + k2 * a**2
    return CubicInvariants(A=a, B=b, det_h=det_h, disc=disc)


def _depressed_cubic_roots(c1: complex, c0: complex, scale: float) -> np.ndarray:
    """Roots of E^3 + c1 E + c0 = 0 (complex Cardano with multiple-root snap).

    Args:
        c1, c0: cubic coefficients.
        scale: magnitude of the underlying matrix entries; coefficients below
            the floating noise floor of this scale are snapped to zero.
    """
    scale = max(scale, 1e-300)
    if abs(c1) < _SNAP * scale**2 and abs(c0) < _SNAP * scale**3:
        return np.zeros(3, dtype=complex)
    d = (c0 / 2.0) ** 2 + (c1 / 3.0) ** 3
    sq = np.sqrt(complex(d))
    # pick the branch that avoids cancellation in -c0/2 +- sq
    u3 = -c0 / 2.0 + sq
    alt = -c0 / 2.0 - sq
    if abs(alt) > abs(u3):
        u3 = alt
    if u3 == 0:
        # c1 = 0 exactly: pure cube roots of -c0
        r = (-c0) ** (1.0 / 3.0)
        w = np.exp(2j * np.pi / 3.0)
        return np.array([r, r * w, r * w**2])
    u = u3 ** (1.0 / 3.0)
    w = np.exp(2j * np.pi / 3.0)
    us = np.array([u, u * w, u * w**2])
    return us - c1 / (3.0 * us)


def eig_closed_form_3x3(p: ESPoint) -> np.ndarray:
    """Eigenvalues of the three-band model from its characteristic cubic.

    Solves E^3 - B E - det H = 0 with the analytically known coefficients;
    repeated roots are returned with multiplicity.  Independent of the
    general eigensolver path.
    """
    inv = cubic_invariants(p)
    scale = max(abs(p.omega1), abs(p.omega2), p.kappa)
    return _depressed_cubic_roots(-inv.B, -inv.det_h, scale)


def eigvals_closed_3x3(h: np.ndarray) -> np.ndarray:
    """Closed-form eigenvalues of an arbitrary 3x3 matrix.

    Trace-shifts to a depressed cubic and applies the same multiple-root
    snap as the model-specific path, so exact triple degeneracies come out
    exactly coalesced.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    shift = np.trace(h) / 3.0
    a = h - shift * np.eye(3)
    c1 = -0.5 * np.trace(a @ a)
    c0 = -np.linalg.det(a)
    scale = float(np.abs(a).max())
    return _depressed_cubic_roots(c1, c0, scale) + shift


@dataclass
class BiorthEigensystem:
    """Eigenvalues with paired right/left eigenvectors, <L_n|R_m> = delta_nm.

    Attributes:
        values: (n,) complex eigenvalues, sorted by (Re, Im).
        right: (n, n) array whose column m is |psi_m>.
        left: (n, n) array whose row m is <psi^L_m| (already normalized
            against `right`).
        condition: (n,) values 1/|<L_m|R_m>| measured with unit-norm vectors
            before normalization; grows without bound approaching an EP.
    """

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        """sum_n E_n |R_n><L_n|; equals the input matrix for a complete frame."""
        return (self.right * self.values[None, :]) @ self.left


def _anchor(n: int) -> np.ndarray:
    # fixed positive weights with irrational ratios so the anchor overlap
    # never vanishes identically on symmetric families
    golden = (1.0 + np.sqrt(5.0)) / 2.0
    return golden ** -np.arange(n)


def _canonical_gauge(right: np.ndarray, left: np.ndarray):
    """Deterministic smooth phase convention for eigenvector pairs.

    Each right vector is rotated so its overlap with a fixed positive
    anchor vector is real positive (the left row absorbs the inverse
    factor, preserving <L|R> = 1).  Along one-parameter families the
    anchor overlap is a complex curve that generically avoids zero, so the
    gauge varies continuously; LAPACK's own convention jumps whenever the
    largest-magnitude component changes, which would corrupt step-phase
    accumulation.
    """
    c = _anchor(right.shape[0]) @ right
    mag = np.abs(c)
    phase = np.where(mag > 1e-12, c / np.where(mag > 1e-12, mag, 1.0), 1.0)
    return right / phase[None, :], left * phase[:, None]


def _pair_conjugate(values: np.ndarray, adj_values: np.ndarray) -> np.ndarray:
    """Assignment pairing of eigenvalues with conjugated adjoint eigenvalues."""
    cost = np.abs(values[:, None] - np.conj(adj_values)[None, :])
    if len(values) <= 6:
        perms = list(itertools.permutations(range(len(values))))
        totals = [cost[np.arange(len(values)), p].sum() for p in perms]
        return np.array(perms[int(np.argmin(totals))])
    _, cols = linear_sum_assignment(cost)
    return cols


def eig_biorthogonal(h: np.ndarray, eps_defect: float = 1e-10) -> BiorthEigensystem:
    """Biorthogonal eigendecomposition of a dense square matrix.

    Right eigenvectors come from h, left ones from the eigendecomposition
    of the adjoint (conjugated back), paired by eigenvalue proximity and
    normalized so that <L_n|R_n> = 1.  Matrix inversion is deliberately
    avoided: a small raw overlap is the physically meaningful signal of an
    exceptional point and is reported as `condition` or, below eps_defect,
    as a DefectivePair error.

    Raises:
        DefectivePair: some |<L_n|R_n>| < eps_defect before normalization.
    """
    h = np.asarray(h, dtype=complex)
    values, right = np.linalg.eig(h)
    adj_values, adj_vecs = np.linalg.eig(h.conj().T)
    cols = _pair_conjugate(values, adj_values)
    left = adj_vecs[:, cols].conj().T

    order = np.lexsort((values.imag, values.real))
    values = values[order]
    right = right[:, order]
    left = left[order, :]

    overlaps = np.einsum("ni,in->n", left, right)
    if np.any(np.abs(overlaps) < eps_defect):
        worst = float(np.abs(overlaps).min())
        raise DefectivePair(
            f"biorthogonal frame does not exist: min |<L|R>| = {worst:.3e}"
        )
    condition = 1.0 / np.abs(overlaps)
    left = left / overlaps[:, None]
    right, left = _canonical_gauge(right, left)
    return BiorthEigensystem(values=values, right=right, left=left, condition=condition)


def match_bands(
    prev: BiorthEigensystem,
    next: BiorthEigensystem,
    eps_match: float = 1e-12,
) -> np.ndarray:
    """Band assignment between two nearby eigensystems.

    Minimizes the total |E_prev - E_next| cost; a cost tie within eps_match
    is broken by the larger total |<L_prev|R_next>| overlap.

    Returns:
        perm with perm[i] = index in `next` of the band that continues
        prev band i.

    Raises:
        AmbiguousMatch: the two best assignments tie in cost and overlap.
    """
    if prev.n != next.n:
        raise ValueError("eigensystem sizes differ")
    n = prev.n
    cost = np.abs(prev.values[:, None] - next.values[None, :])
    if n > 6:
        _, cols = linear_sum_assignment(cost)
        return cols

    perms = list(itertools.permutations(range(n)))
    totals = np.array([cost[np.arange(n), p].sum() for p in perms])
    order = np.argsort(totals)
    best = perms[order[0]]
    if len(order) > 1 and totals[order[1]] - totals[order[0]] < eps_match:
        # cost tie: compare total overlap with the runner-up
        ovl = np.abs(prev.left @ next.right)  # (n_prev, n_next)
        second = perms[order[1]]
        s_best = ovl[np.arange(n), best].sum()
        s_second = ovl[np.arange(n), second].sum()
        if abs(s_best - s_second) < eps_match:
            raise AmbiguousMatch(
                "band assignment is ambiguous; refine the parameter step"
            )
        if s_second > s_best:
            best = second
    return np.array(best)


# ---------------------------------------------------------------------------
# batched helpers for dense grids (same math as above, vectorized)


def eig_biorthogonal_batched(h: np.ndarray):
    """Vectorized biorthogonal decomposition of (..., 3, 3) arrays.

    Returns (values, right, left, condition) with the same conventions as
    eig_biorthogonal but WITHOUT sorting, so callers can track bands by
    continuation.  No defectiveness check here; inspect `condition`.
    """
    values, right = np.linalg.eig(h)
    adj_values, adj_vecs = np.linalg.eig(np.conj(np.swapaxes(h, -1, -2)))
    target = np.conj(adj_values)
    cost = np.abs(values[..., :, None] - target[..., None, :])
    totals = cost[..., np.arange(3)[None, :], _PERMS3].sum(-1)
    sel = _PERMS3[np.argmin(totals, axis=-1)]
    adj_sorted = np.take_along_axis(adj_vecs, sel[..., None, :], axis=-1)
    left = np.conj(np.swapaxes(adj_sorted, -1, -2))
    overlaps = np.einsum("...ni,...in->...n", left, right)
    condition = 1.0 / np.abs(overlaps)
    left = left / overlaps[..., :, None]
    return values, right, left, condition


def match_bands_batched(e_prev: np.ndarray, e_next: np.ndarray) -> np.ndarray:
    """Vectorized nearest-eigenvalue assignment for (..., 3) value arrays."""
    cost = np.abs(e_prev[..., :, None] - e_next[..., None, :])
    totals = cost[..., np.arange(3)[None, :], _PERMS3].sum(-1)
    return _PERMS3[np.argmin(totals, axis=-1)]
