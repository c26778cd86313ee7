"""Topological invariants: hypersphere flux, multi-loop phases, spectral winding.

The flux integral runs on a tensor-product grid that is midpoint in the
polar direction (no endpoint evaluations, where the chart degenerates) and
uniform in the two periodic directions (trapezoid rule, spectrally
accurate).  Band identity across the grid is fixed by continuation: a loss
ramp at the chart origin anchors the band to the lowest Hermitian one, and
nearest-eigenvalue matching extends the label along the polar line, then
over the two angles.
"""

from __future__ import annotations

import bisect
import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import (
    AmbiguousMatch,
    DefectivePair,
    EPOnPath,
    GridHitsEP,
    NoClosure,
    RefOnSpectrum,
)
from .eigensystem import (
    eig_biorthogonal,
    eig_biorthogonal_batched,
    match_bands,
    match_bands_batched,
)
from .geometry import EPS_DEFINITE, EPS_GAP, SphereChart
from .models import SSH3Params, build_ssh3_bloch, h_es_array


def es_center_distance(kappa: float) -> float:
    """Distance from the parameter-space origin to the triple-degeneracy set.

    Every such point satisfies |O1| = kappa/3, |O2| = 2 sqrt2 kappa/3 and
    therefore lies at radius kappa.
    """
    return float(kappa)


@dataclass(frozen=True)
class DDRequest:
    """Flux integration request on the sphere chart.

    The sphere is centered at the parameter-space origin; r0 (shortest
    center-to-degeneracy distance) is kappa, and ratio = radius / r0.
    """

    radius: float
    kappa: float
    n_alpha: int = 48
    n_beta: int = 48
    n_phi: int = 48
    eps_gap: float = EPS_GAP
    eps_defect: float = 1e-10

    @property
    def r0(self) -> float:
        return es_center_distance(self.kappa)

    @property
    def ratio(self) -> float:
        return self.radius / self.r0 if self.r0 > 0 else np.inf


@dataclass
class DDReport:
    """Value of the flux integral plus per-grid diagnostics."""

    value: float
    ratio: float
    radius: float
    kappa: float
    grid: tuple[int, int, int]
    masked_fraction: float
    negative_det_fraction: float
    min_gap: float
    max_condition: float


def _band_continuation(e_grid: np.ndarray, chart: SphereChart, alpha0: float) -> np.ndarray:
    """Tracked band index per grid node.

    The band is anchored at the chart origin (alpha0, 0, 0) by ramping the
    loss from zero and following the lowest Hermitian band, then extended
    along the alpha line at beta = phi = 0, then over beta, then phi.
    """
    na, nb, nf = e_grid.shape[:3]
    q0 = chart.coords([alpha0, 0.0, 0.0])
    h_herm = h_es_array(q0, 0.0)
    current = complex(np.sort(np.linalg.eigvalsh(h_herm))[0])
    if chart.kappa > 0:
        for k in np.linspace(0.0, chart.kappa, 65)[1:]:
            ev = np.linalg.eigvals(h_es_array(q0, k))
            current = ev[np.argmin(np.abs(ev - current))]
    band = np.zeros((na, nb, nf), dtype=int)
    band[0, 0, 0] = int(np.argmin(np.abs(e_grid[0, 0, 0] - current)))
    for i in range(1, na):
        p = match_bands_batched(e_grid[i - 1, 0, 0], e_grid[i, 0, 0])
        band[i, 0, 0] = p[band[i - 1, 0, 0]]
    for j in range(1, nb):
        p = match_bands_batched(e_grid[:, j - 1, 0], e_grid[:, j, 0])
        band[:, j, 0] = np.take_along_axis(p, band[:, j - 1, 0][:, None], -1)[:, 0]
    for k in range(1, nf):
        p = match_bands_batched(e_grid[:, :, k - 1], e_grid[:, :, k])
        band[:, :, k] = np.take_along_axis(p, band[:, :, k - 1][..., None], -1)[..., 0]
    return band


def dd_invariant_report(req: DDRequest) -> DDReport:
    """Flux of the metric three-form over the sphere chart, with diagnostics.

    The integrand is 4 sqrt(det g) restricted to grid nodes where the
    tracked band's metric is positive semidefinite; where the non-Hermitian
    metric loses positivity the volume element is undefined and contributes
    zero (the masked fraction is reported, never hidden).  On manifolds
    enclosing the degeneracy surface the mask is empty and the flux is
    quantized; on manifolds inside it the metric is indefinite everywhere
    and the flux vanishes.

    Raises:
        GridHitsEP: a node is too close to a degeneracy (gap or overlap
            threshold), or the sphere passes within one grid cell of the
            triple-degeneracy surface.
    """
    chart = SphereChart(radius=req.radius, kappa=req.kappa)
    h_alpha = (np.pi / 2.0) / req.n_alpha
    if req.kappa > 0 and abs(req.radius - req.r0) < req.radius * h_alpha:
        raise GridHitsEP(
            f"sphere radius {req.radius} is within one grid cell of the "
            f"degeneracy surface at r0 = {req.r0}"
        )
    alpha = (np.arange(req.n_alpha) + 0.5) * h_alpha
    h_beta = 2.0 * np.pi / req.n_beta
    beta = np.arange(req.n_beta) * h_beta
    h_phi = 2.0 * np.pi / req.n_phi
    phi = np.arange(req.n_phi) * h_phi
    aa, bb, ff = np.meshgrid(alpha, beta, phi, indexing="ij")
    x = np.stack([aa, bb, ff], axis=-1)

    h = chart.hamiltonian(x)
    values, right, left, condition = eig_biorthogonal_batched(h)
    max_condition = float(condition.max())
    if max_condition > 1.0 / req.eps_defect:
        raise GridHitsEP(
            f"defective frame on the grid: max condition {max_condition:.3e}"
        )

    band = _band_continuation(values, chart, alpha[0])
    dh = chart.d_hamiltonian(x)

    chi = np.zeros(aa.shape + (3, 3), dtype=complex)
    min_gap = np.full(aa.shape, np.inf)
    for b in range(3):
        sel = band == b
        if not sel.any():
            continue
        e_sel = values[sel]
        gaps = np.abs(e_sel - e_sel[:, b : b + 1])
        gaps[:, b] = np.inf
        min_gap[sel] = gaps.min(axis=-1)
        keep = np.ones(3, dtype=bool)
        keep[b] = False
        m_out = np.einsum("...i,...dij,...jn->...dn", left[sel][:, b, :], dh[sel], right[sel])
        m_in = np.einsum("...ni,...dij,...j->...dn", left[sel], dh[sel], right[sel][:, :, b])
        de = e_sel[:, b : b + 1] - e_sel
        chi[sel] = np.einsum(
            "...dn,...en,...n->...de",
            m_out[:, :, keep],
            m_in[:, :, keep],
            1.0 / de[:, keep] ** 2,
        )
    worst_gap = float(min_gap.min())
    if worst_gap < req.eps_gap:
        raise GridHitsEP(f"grid point with band gap {worst_gap:.3e} < eps_gap")

    g = 0.5 * (chi.real + np.swapaxes(chi.real, -1, -2))
    eigs = np.linalg.eigvalsh(g)
    scale = np.maximum(np.abs(eigs[..., 0]), np.abs(eigs[..., -1]))
    definite = eigs[..., 0] >= -EPS_DEFINITE * np.maximum(scale, 1e-300)
    det_g = np.linalg.det(g)
    integrand = np.where(definite, 4.0 * np.sqrt(np.clip(det_g, 0.0, None)), 0.0)
    value = float(integrand.sum() * h_alpha * h_beta * h_phi / (2.0 * np.pi**2))
    return DDReport(
        value=value,
        ratio=req.ratio,
        radius=req.radius,
        kappa=req.kappa,
        grid=(req.n_alpha, req.n_beta, req.n_phi),
        masked_fraction=float(1.0 - definite.mean()),
        negative_det_fraction=float((det_g < -1e-9).mean()),
        min_gap=worst_gap,
        max_condition=max_condition,
    )


def dd_invariant(req: DDRequest) -> float:
    """Flux value only; see dd_invariant_report for diagnostics."""
    return dd_invariant_report(req).value


@dataclass
class DDSweepRow:
    ratio: float
    value: float
    status: str
    masked_fraction: float


def dd_sweep(ratios, template: DDRequest) -> list[DDSweepRow]:
    """dd_invariant per requested radius/r0 ratio, with per-row status.

    A row is flagged "ill-defined" when the grid hits a degeneracy even
    after one automatic grid perturbation, or when the positivity mask is
    partial (the volume element does not exist over the whole manifold, so
    the flux is ambiguous).  Flagged rows still report the value when one
    could be computed.
    """
    rows = []
    for ratio in ratios:
        req = dataclasses.replace(template, radius=float(ratio) * template.r0)
        try:
            report = dd_invariant_report(req)
        except GridHitsEP:
            # perturb all grid nodes once by changing the grid sizes
            retry = dataclasses.replace(
                req,
                n_alpha=req.n_alpha + 5,
                n_beta=req.n_beta + 3,
                n_phi=req.n_phi + 3,
            )
            try:
                report = dd_invariant_report(retry)
            except GridHitsEP:
                rows.append(DDSweepRow(float(ratio), np.nan, "ill-defined", np.nan))
                continue
        partial = 0.0 < report.masked_fraction < 1.0
        status = "ill-defined" if partial else "ok"
        rows.append(
            DDSweepRow(float(ratio), report.value, status, report.masked_fraction)
        )
    return rows


# ---------------------------------------------------------------------------
# multi-loop phases


@dataclass
class BraidResult:
    """Accumulated phase and braid data of a closed multi-loop lift.

    phase is the total over the closed lift (not reduced mod 2 pi);
    permutation maps the band index at the start of a loop to the index
    after one loop; loops_to_close is the order of that permutation.
    Per-step increments are retained for audit.
    """

    phase: float
    permutation: tuple[int, ...]
    loops_to_close: int
    increments: np.ndarray


def _permutation_order(perm: np.ndarray) -> int:
    order = 1
    current = perm.copy()
    identity = np.arange(len(perm))
    while not np.array_equal(current, identity):
        current = perm[current]
        order += 1
        if order > len(perm) + 1:
            raise NoClosure("permutation failed to close")
    return order


def berry_phase_frames(frames, band0: int = 0, max_loops: int = 6) -> BraidResult:
    """Phase of the closed lift through a periodic sequence of eigensystems.

    Args:
        frames: eigensystems sampled over one period (wrap-around implied).
        band0: starting band index in frames[0].
        max_loops: abort if the braid does not close within this many loops.

    The step increments are d_i = -Im ln <L(theta_i)|R(theta_{i+1})> with
    bands matched between neighboring frames; the <L|R> = 1 normalization
    makes the total over the closed lift invariant under rescaling any
    individual eigenvector sample.
    """
    n_steps = len(frames)
    perms = [
        match_bands(frames[j], frames[(j + 1) % n_steps]) for j in range(n_steps)
    ]
    loop_perm = np.arange(frames[0].n)
    for p in perms:
        loop_perm = p[loop_perm]
    loops = _permutation_order(loop_perm)
    if loops > max_loops:
        raise NoClosure(
            f"braid closes after {loops} loops, above max_loops = {max_loops}"
        )
    phase = 0.0
    increments = []
    band = band0
    for _ in range(loops):
        for j in range(n_steps):
            nxt = int(perms[j][band])
            overlap = frames[j].left[band] @ frames[(j + 1) % n_steps].right[:, nxt]
            inc = -float(np.imag(np.log(overlap)))
            increments.append(inc)
            phase += inc
            band = nxt
    if band != band0:
        raise NoClosure("lift did not return to the starting band")
    return BraidResult(
        phase=phase,
        permutation=tuple(int(v) for v in loop_perm),
        loops_to_close=loops,
        increments=np.array(increments),
    )


def sample_loop_frames(loop, max_points: int = 1 << 20, min_step: float = 1e-9):
    """Eigensystems along one period of a loop, refined until every
    neighboring increment is below pi/4 for every band.

    Args:
        loop: object with hamiltonian(theta), steps_per_loop.
        min_step: smallest allowed theta spacing during bisection; hitting
            it means the loop effectively passes through an EP.

    Returns:
        (thetas, frames) covering [0, 2 pi) with the wrap step included in
        the refinement criterion.

    Raises:
        EPOnPath: a sample point is defective, matching is ambiguous, or
            bisection underflows.
    """
    def frame(theta):
        try:
            return eig_biorthogonal(loop.hamiltonian(theta))
        except DefectivePair as exc:
            raise EPOnPath(f"defective eigensystem at theta = {theta}") from exc

    thetas = list(np.linspace(0.0, 2.0 * np.pi, loop.steps_per_loop, endpoint=False))
    frames = [frame(t) for t in thetas]
    while True:
        inserts = []
        m = len(thetas)
        for j in range(m):
            nxt = (j + 1) % m
            theta_next = thetas[nxt] if nxt else 2.0 * np.pi
            try:
                perm = match_bands(frames[j], frames[nxt])
            except AmbiguousMatch as exc:
                raise EPOnPath(str(exc)) from exc
            ovl = np.einsum("ni,im->nm", frames[j].left, frames[nxt].right)
            incs = np.abs(np.imag(np.log(ovl[np.arange(frames[j].n), perm])))
            if incs.max() >= np.pi / 4.0:
                if theta_next - thetas[j] < min_step:
                    raise EPOnPath(
                        f"step bisection underflow near theta = {thetas[j]}; "
                        "the loop passes through an exceptional point"
                    )
                inserts.append(0.5 * (thetas[j] + theta_next))
        if not inserts:
            return np.array(thetas), frames
        if len(thetas) + len(inserts) > max_points:
            raise EPOnPath("refinement exceeded the point budget; loop too close to an EP")
        for t in inserts:
            pos = bisect.bisect_left(thetas, t)
            thetas.insert(pos, t)
            frames.insert(pos, frame(t))


def berry_phase(loop, band0: int = 0) -> BraidResult:
    """Accumulated phase of the closed lift along a control loop.

    The loop object supplies hamiltonian(theta), steps_per_loop and
    max_loops (see models.BerryLoopSpec and models.TwoLevelLoopSpec).
    Steps whose increment would reach pi/4 are bisected before
    accumulation, which keeps 2 pi unambiguously distinct from 0.
    """
    _, frames = sample_loop_frames(loop)
    return berry_phase_frames(frames, band0=band0, max_loops=loop.max_loops)


@dataclass
class BerrySweepRow:
    delta: float
    nesting_ratio: float
    phase: float
    loops_to_close: int
    permutation: tuple[int, ...]
    status: str


def berry_transition_sweep(deltas, template) -> list[BerrySweepRow]:
    """berry_phase per loop offset, flagging rows where the loop hits the ring."""
    rows = []
    for delta in deltas:
        spec = dataclasses.replace(template, delta=float(delta))
        try:
            res = berry_phase(spec)
            rows.append(
                BerrySweepRow(
                    delta=float(delta),
                    nesting_ratio=spec.nesting_ratio,
                    phase=res.phase,
                    loops_to_close=res.loops_to_close,
                    permutation=res.permutation,
                    status="ok",
                )
            )
        except (EPOnPath, NoClosure) as exc:
            rows.append(
                BerrySweepRow(
                    delta=float(delta),
                    nesting_ratio=spec.nesting_ratio,
                    phase=np.nan,
                    loops_to_close=0,
                    permutation=(),
                    status=f"ep-on-path: {exc}",
                )
            )
    return rows


# ---------------------------------------------------------------------------
# spectral winding


@dataclass
class WindingResult:
    winding: float
    permutation: tuple[int, ...]


def spectral_winding(p: SSH3Params, e_ref: complex, n_k: int = 401) -> WindingResult:
    """Winding of det(H_k - E) around zero over the Brillouin zone.

    Returns the accumulated argument of the determinant divided by 2 pi
    (an integer once the k grid resolves the curve) together with the
    eigenvalue braid permutation over the k loop.

    Raises:
        RefOnSpectrum: e_ref coincides with a Bloch eigenvalue on the grid.
    """
    ks = np.linspace(0.0, 2.0 * np.pi, n_k, endpoint=False)
    h = np.stack([build_ssh3_bloch(p, k) for k in ks])
    dets = np.linalg.det(h - e_ref * np.eye(3))
    scale = max(float(np.abs(h).max()), abs(e_ref), 1.0)
    if np.any(np.abs(dets) < 1e-12 * scale**3):
        raise RefOnSpectrum(f"reference energy {e_ref} lies on the spectrum")
    ratio = np.roll(dets, -1) / dets
    total = float(np.angle(ratio).sum())
    values = np.linalg.eigvals(h)
    perm = np.arange(3)
    for j in range(n_k):
        step = match_bands_batched(values[j], values[(j + 1) % n_k])
        perm = step[perm]
    return WindingResult(
        winding=total / (2.0 * np.pi), permutation=tuple(int(v) for v in perm)
    )
