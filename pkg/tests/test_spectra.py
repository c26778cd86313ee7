import dataclasses

import numpy as np
import pytest

from exsurf import (
    BerryLoopSpec,
    ESPoint,
    PointClass,
    SSH3Params,
    TwoLevelLoopSpec,
    build_h_es,
    classify_point,
    coalescence_measure,
    ep3_detector,
    es_distance,
    es_scan,
    nhse_metrics,
    riemann_track,
    ssh3_spectrum,
)
from exsurf.eigensystem import eig_biorthogonal

RING = 2 * np.sqrt(2) / 3
EP3 = ESPoint(1 / 3, 0.0, RING, 0.0, 1.0)


def test_classify_reference_points():
    assert classify_point(EP3).label is PointClass.EP3
    assert (
        classify_point(ESPoint(0.0, 0.0, np.sqrt(3) / 2, 0.0, 1.0)).label
        is PointClass.EP2
    )
    assert classify_point(ESPoint(1.0, 0.0, 0.0, 0.0, 0.0)).label is PointClass.REGULAR
    assert (
        classify_point(ESPoint(0.0, 0.0, 0.3, 0.0, 1.0)).label
        is PointClass.FERMI_ARC
    )


def test_classify_scaling_covariance():
    rng = np.random.default_rng(41)
    points = [
        EP3,
        ESPoint(0.0, 0.0, np.sqrt(3) / 2, 0.0, 1.0),
        ESPoint(0.0, 0.0, 0.3, 0.0, 1.0),
        ESPoint(1.0, 0.2, -0.4, 0.1, 0.7),
    ]
    for p in points:
        label = classify_point(p).label
        for _ in range(5):
            s = float(rng.uniform(0.2, 5.0))
            scaled = ESPoint(s * p.q1, s * p.q2, s * p.q3, s * p.q4, s * p.kappa)
            assert classify_point(scaled).label is label


def test_classify_ep3_for_all_positive_loss():
    for kappa in (0.2, 1.0, 3.7):
        p = ESPoint(kappa / 3, 0.0, 2 * np.sqrt(2) * kappa / 3, 0.0, kappa)
        assert es_distance(p) < 1e-14
        assert classify_point(p).label is PointClass.EP3


def test_scan_contains_expected_classes():
    nodes = es_scan(np.linspace(-1.2, 1.2, 13), np.linspace(-1.2, 1.2, 13), 1.0)
    labels = {node.label for node in nodes}
    assert PointClass.FERMI_ARC in labels
    assert PointClass.REGULAR in labels
    arc_nodes = [n for n in nodes if n.label is PointClass.FERMI_ARC]
    for node in arc_nodes:
        spread = node.values.real.max() - node.values.real.min()
        assert spread < 1e-6


def test_scan_hermitian_all_real():
    nodes = es_scan(np.linspace(-1.0, 1.0, 9), np.linspace(-1.0, 1.0, 9), 0.0)
    for node in nodes:
        assert np.abs(node.values.imag).max() < 1e-12


def test_far_field_imaginary_parts_first_order():
    # far from the surface, Im E approaches kappa <n|l8|n> of the Hermitian
    # eigenvectors; along the q1 axis those are (k/sqrt3, k/sqrt3, -2k/sqrt3)
    from exsurf.gellmann import GELL_MANN

    kappa = 1.0
    for direction in ((1.0, 0.0, 0.0, 0.0), (0.4, 0.3, 0.8, -0.2)):
        q = 8.0 * np.asarray(direction) / np.linalg.norm(direction)
        herm = build_h_es(ESPoint(*q, 0.0))
        evals, vecs = np.linalg.eigh(herm)
        expected = kappa * np.real(
            np.einsum("in,ij,jn->n", vecs.conj(), GELL_MANN[7], vecs)
        )
        full = np.sort(
            eig_biorthogonal(build_h_es(ESPoint(*q, kappa))).values.imag
        )
        assert np.abs(np.sort(expected) - full).max() < 0.02
    axis = np.sort(
        eig_biorthogonal(build_h_es(ESPoint(8.0, 0, 0, 0, kappa))).values.imag
    )
    assert np.abs(axis - np.sort([1 / np.sqrt(3), 1 / np.sqrt(3), -2 / np.sqrt(3)])).max() < 1e-6


def test_riemann_track_three_loop_closure():
    loop = BerryLoopSpec(delta=RING, radius=0.85, kappa=1.0, steps_per_loop=600)
    track = riemann_track(loop)
    assert track.braid.loops_to_close == 3
    assert track.closure_residual < 1e-8
    # each sheet is continuous: no jumps larger than the step scale
    jumps = np.abs(np.diff(track.energies, axis=0)).max()
    assert jumps < 0.1


def test_riemann_track_two_level_closure():
    loop = TwoLevelLoopSpec(delta=1.0, radius=0.5, gamma=1.0, steps_per_loop=400)
    track = riemann_track(loop)
    assert track.braid.loops_to_close == 2
    assert track.closure_residual < 1e-8


def test_riemann_track_constant_path():
    class ConstantLoop:
        steps_per_loop = 16
        max_loops = 6

        def hamiltonian(self, theta):
            return build_h_es(ESPoint(0.9, 0.1, 0.4, -0.2, 0.8))

    track = riemann_track(ConstantLoop())
    assert track.braid.loops_to_close == 1
    assert track.braid.permutation == (0, 1, 2)
    assert np.abs(np.diff(track.energies, axis=0)).max() < 1e-12
    assert abs(track.braid.phase) < 1e-10


def model_one(**kw):
    base = dict(
        model="one", t1=1.0, t2=0.25, w1=1.0, w2=0.25, gamma=1.0,
        n_cells=10, bc="obc",
    )
    base.update(kw)
    return SSH3Params(**base)


def model_two_ep3(gamma=1.0, **kw):
    omega1 = gamma / 3.0
    omega2 = 2.0 * np.sqrt(2.0) * gamma / 3.0
    base = dict(
        model="two", t1=0.0, t2=omega2, w1=omega1, w2=0.0, gamma=gamma,
        n_cells=10, bc="pbc",
    )
    base.update(kw)
    return SSH3Params(**base)


def test_model_two_gap_closes_at_triple_points():
    # at t1 = 0 both k = 0 and k = pi satisfy |t1 +- w1| = gamma/3
    spec = ssh3_spectrum(model_two_ep3(), closed_form=True)
    assert coalescence_measure(spec.values) < 1e-10


def test_model_one_gap_closure_condition():
    # (t1 + w1)^2 + (t2 + w2)^2 = gamma^2 makes the k = 0 cell triple degenerate
    p = model_one(t1=0.3, w1=0.3, t2=0.5, w2=0.3, gamma=1.0, bc="pbc")
    from exsurf.eigensystem import eigvals_closed_3x3
    from exsurf.models import build_ssh3_bloch

    values = eigvals_closed_3x3(build_ssh3_bloch(p, 0.0))
    assert np.abs(values).max() < 1e-8


def test_obc_hermitian_spectrum_real():
    spec = ssh3_spectrum(model_one(gamma=0.0))
    assert np.abs(spec.values.imag).max() < 1e-12


def test_nhse_metrics_thresholds():
    lossy = nhse_metrics(ssh3_spectrum(model_one()))
    control = nhse_metrics(ssh3_spectrum(model_one(gamma=0.0)))
    assert lossy.boundary_weight > 0.5
    assert control.boundary_weight < 0.3
    assert lossy.mean_ipr > control.mean_ipr


def test_nhse_metrics_bounds_and_small_chain():
    for p in (model_one(), model_one(n_cells=2)):
        m = nhse_metrics(ssh3_spectrum(p))
        assert 0.0 <= m.boundary_weight <= 1.0
        assert 1.0 / (3 * p.n_cells) <= m.mean_ipr <= 1.0
    tiny = nhse_metrics(ssh3_spectrum(model_one(n_cells=2)))
    assert np.isclose(tiny.boundary_weight, 1.0)


def test_nhse_metrics_requires_eigenvectors():
    with pytest.raises(ValueError):
        nhse_metrics(ssh3_spectrum(model_one(bc="pbc")))


def test_ep3_detector_pbc_vs_obc():
    p = model_two_ep3()
    sweep = np.linspace(-1.0, 1.0, 21) * (3 * p.w1)
    pbc = ep3_detector(p, sweep)
    obc = ep3_detector(dataclasses.replace(p, bc="obc"), sweep)
    assert pbc.min() < 1e-6
    at_ep3 = np.argmin(np.abs(sweep - 0.0))
    assert obc[at_ep3] >= 10 * max(pbc[at_ep3], 1e-12)
    assert obc[at_ep3] > 1e-3


def test_ep3_detector_hermitian_control():
    p = model_two_ep3(gamma=0.0)
    # keep the couplings of the lossy model but switch the loss off
    p = dataclasses.replace(p, t2=2 * np.sqrt(2) / 3, w1=1 / 3)
    measures = ep3_detector(p, [0.0])
    assert measures[0] > 1e-3
