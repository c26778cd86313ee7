"""Command-line entry point: one subcommand per dataset pipeline.

Every command reads the layered configuration (defaults, then --config,
then flags), runs deterministically, and writes long-form CSV tables (or a
JSON mirror) with a version comment line and a header row.  Exit codes:
0 success, 2 configuration error, 3 unrecoverable numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, emit_config, load_config
from .dynamics import (
    berry_phase_experiment,
    conditional_hamiltonian,
    default_circuit,
    effective_couplings,
    evolve_conditional,
    evolve_lab_frame,
    fit_eigensystem,
    schedule_loop_point,
    state_matrix,
)
from .errors import ConfigError, ExsurfError
from .invariants import DDRequest, berry_transition_sweep, dd_sweep
from .models import BerryLoopSpec, SSH3Params
from .spectra import ep3_detector, es_scan, nhse_metrics, riemann_track, ssh3_spectrum


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "nan" if np.isnan(value) else repr(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_table(path: Path, header: list[str], rows: list[tuple], fmt: str) -> Path:
    """Write rows as CSV (default) or a JSON record mirror."""
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = path.with_suffix(".json")
        records = [
            {name: (None if isinstance(v, float) and np.isnan(v) else v)
             for name, v in zip(header, row)}
            for row in rows
        ]
        with open(path, "w") as fh:
            json.dump({"version": __version__, "rows": records}, fh, indent=1,
                      default=float)
            fh.write("\n")
        return path
    path = path.with_suffix(".csv")
    with open(path, "w") as fh:
        fh.write(f"# exsurf {__version__}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _perm_str(perm) -> str:
    return "-".join(str(p) for p in perm) if len(perm) else ""


def cmd_spectrum(cfg: RunConfig, out: Path, fmt: str, threads: int) -> list[Path]:
    s = cfg.spectrum
    nodes = es_scan(
        np.linspace(s.q1_min, s.q1_max, s.n_q1),
        np.linspace(s.q3_min, s.q3_max, s.n_q3),
        cfg.model.kappa,
        tol=s.tol,
    )
    rows = []
    for node in nodes:
        p = node.point
        for band, e in enumerate(node.values):
            rows.append(
                (p.q1, p.q2, p.q3, p.q4, p.kappa, band, e.real, e.imag,
                 node.label.value)
            )
    header = ["q1", "q2", "q3", "q4", "kappa", "band", "reE", "imE", "class"]
    return [write_table(out / "spectrum", header, rows, fmt)]


def cmd_dd(cfg: RunConfig, out: Path, fmt: str, threads: int) -> list[Path]:
    template = DDRequest(
        radius=1.0,
        kappa=cfg.model.kappa,
        n_alpha=cfg.dd.n_alpha,
        n_beta=cfg.dd.n_beta,
        n_phi=cfg.dd.n_phi,
    )
    ratios = list(cfg.dd.ratios)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(dd_sweep, [r], template) for r in ratios]
            rows_nested = [f.result() for f in futures]
        sweep = [row for rows in rows_nested for row in rows]
    else:
        sweep = dd_sweep(ratios, template)
    rows = [(r.ratio, r.value, r.status, r.masked_fraction) for r in sweep]
    header = ["ratio", "dd", "status", "masked_fraction"]
    return [write_table(out / "dd", header, rows, fmt)]


def cmd_berry(cfg: RunConfig, out: Path, fmt: str, threads: int) -> list[Path]:
    b = cfg.berry
    loop = BerryLoopSpec(
        delta=b.delta,
        radius=b.radius,
        kappa=cfg.model.kappa,
        steps_per_loop=b.steps_per_loop,
        max_loops=b.max_loops,
    )
    track = riemann_track(loop)
    track_rows = []
    for i, theta in enumerate(track.thetas):
        for band in range(track.energies.shape[1]):
            e = track.energies[i, band]
            track_rows.append((theta, band, e.real, e.imag))
    paths = [
        write_table(out / "berry_tracks", ["theta", "band", "reE", "imE"],
                    track_rows, fmt)
    ]

    deltas = [loop.radius + r * loop.er_radius for r in b.sweep_ratios]
    rows = []
    for row in berry_transition_sweep(deltas, loop):
        rows.append(
            (row.delta, row.nesting_ratio, row.phase, row.loops_to_close,
             _perm_str(row.permutation), row.status)
        )
    header = ["delta", "nesting_ratio", "phase", "loops_to_close", "permutation",
              "status"]
    paths.append(write_table(out / "berry_sweep", header, rows, fmt))
    return paths


def cmd_ssh3(cfg: RunConfig, out: Path, fmt: str, threads: int) -> list[Path]:
    s = cfg.ssh3
    base = SSH3Params(
        model=s.model, t1=s.t1, t2=s.t2, w1=s.w1, w2=s.w2, gamma=s.gamma,
        n_cells=s.n_cells, bc="pbc",
    )
    spec_rows = []
    metric_rows = []
    for bc in ("pbc", "obc"):
        p = dataclasses.replace(base, bc=bc)
        spectrum = ssh3_spectrum(p)
        for band, e in enumerate(spectrum.values):
            spec_rows.append((p.model, bc, p.t1, p.gamma, band, e.real, e.imag))
        if bc == "obc":
            m = nhse_metrics(spectrum)
            metric_rows.append(
                (p.model, p.gamma, p.t1, m.boundary_weight, m.mean_ipr)
            )
            control = dataclasses.replace(p, gamma=0.0)
            mc = nhse_metrics(ssh3_spectrum(control))
            metric_rows.append(
                (p.model, 0.0, p.t1, mc.boundary_weight, mc.mean_ipr)
            )

    # triple-degeneracy sweep of the second model against t1
    omega1 = s.gamma / 3.0
    two = SSH3Params(
        model="two", t1=0.0, t2=2.0 * np.sqrt(2.0) * s.gamma / 3.0,
        w1=omega1, w2=0.0, gamma=s.gamma, n_cells=s.n_cells, bc="pbc",
    )
    t1_values = np.linspace(-3.0 * omega1, 3.0 * omega1, s.n_t1_sweep)
    sweep_rows = []
    for bc in ("pbc", "obc"):
        p = dataclasses.replace(two, bc=bc)
        measures = ep3_detector(p, t1_values)
        for t1, measure in zip(t1_values, measures):
            sweep_rows.append(("two", bc, t1, measure))
        for t1 in t1_values:
            spectrum = ssh3_spectrum(dataclasses.replace(p, t1=float(t1)))
            for band, e in enumerate(spectrum.values):
                spec_rows.append(("two", bc, float(t1), s.gamma, band, e.real, e.imag))

    return [
        write_table(
            out / "ssh3_spectra",
            ["model", "bc", "t1", "gamma", "band", "reE", "imE"],
            spec_rows, fmt,
        ),
        write_table(
            out / "ssh3_metrics",
            ["model", "gamma", "t1", "boundary_weight", "mean_ipr"],
            metric_rows, fmt,
        ),
        write_table(out / "ssh3_ep3_sweep", ["model", "bc", "t1", "coalescence"],
                    sweep_rows, fmt),
    ]


def cmd_dynamics(cfg: RunConfig, out: Path, fmt: str, threads: int) -> list[Path]:
    c = cfg.circuit
    base = default_circuit(kappa_d2=c.kappa_d2)
    k_eff = base.kappa_eff
    r_ring = 2.0 * np.sqrt(2.0) * k_eff / 3.0
    delta = r_ring
    radius = 0.85 * k_eff

    # theta = 0 trajectories: full drive, effective model, and fitted model
    point = schedule_loop_point(base, 0.0, delta=delta, radius=radius)
    omega1, omega2 = effective_couplings(point)
    h_eff = conditional_hamiltonian(
        omega1, omega2, point.kappa_d2, point.resonator2_detuning
    )
    times = np.linspace(0.0, c.theta0_time, 201)
    traj_rows = []
    eff_trajs = []
    for j, label in enumerate(("g10", "e00", "g01")):
        psi0 = np.zeros(3, dtype=complex)
        psi0[j] = 1.0
        lab = evolve_lab_frame(point, label, mode="nojump", times=times)
        eff = evolve_conditional(h_eff, psi0, times)
        eff_trajs.append(eff)
        for traj, source in ((lab, "lab"), (eff, "effective")):
            for k, t in enumerate(traj.times):
                traj_rows.append(
                    (source, label, t, *traj.populations[k], traj.norm[k])
                )
    fit = fit_eigensystem(times, state_matrix(eff_trajs), pair=1)
    for j, label in enumerate(("g10", "e00", "g01")):
        psi0 = np.zeros(3, dtype=complex)
        psi0[j] = 1.0
        fitted_traj = evolve_conditional(fit.h_fit, psi0, times)
        for k, t in enumerate(fitted_traj.times):
            traj_rows.append(
                ("fitted", label, t, *fitted_traj.populations[k], fitted_traj.norm[k])
            )
    header = ["source", "init", "t", "p_e00", "p_g10", "p_g01", "p_g00", "norm"]
    paths = [write_table(out / "trajectories", header, traj_rows, fmt)]

    # fitted eigenenergies along the loop, continued over the closed braid
    result = berry_phase_experiment(
        base, n_theta=c.n_theta, delta=delta, radius=radius, source=c.source,
        fit_times=(c.fit_t1, c.fit_t2),
    )
    n_theta = len(result.thetas)
    labels = np.arange(3)
    fitted_rows = []
    perm = np.array(result.braid.permutation)
    for loop_i in range(result.braid.loops_to_close):
        for j in range(n_theta):
            theta = result.thetas[j] + 2.0 * np.pi * loop_i
            for sheet in range(3):
                e = result.fitted_values[j, labels[sheet]]
                fitted_rows.append((theta, sheet, e.real, e.imag))
        labels = perm[labels]
    paths.append(
        write_table(out / "fitted_tracks", ["theta", "band", "reE", "imE"],
                    fitted_rows, fmt)
    )

    # experimental transition table
    table_rows = []
    for ratio in c.sweep_ratios:
        d = radius + ratio * r_ring
        res = berry_phase_experiment(
            base, n_theta=c.n_theta, delta=d, radius=radius, source=c.source,
            fit_times=(c.fit_t1, c.fit_t2),
        )
        table_rows.append(
            (d, ratio, res.braid.phase, res.braid.loops_to_close,
             _perm_str(res.braid.permutation), "ok")
        )
    header = ["delta", "nesting_ratio", "phase", "loops_to_close", "permutation",
              "status"]
    paths.append(write_table(out / "berry_experiment", header, table_rows, fmt))
    return paths


COMMANDS = {
    "spectrum": cmd_spectrum,
    "dd": cmd_dd,
    "berry": cmd_berry,
    "ssh3": cmd_ssh3,
    "dynamics": cmd_dynamics,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exsurf",
        description="Datasets for the lossy three-band model: spectra, "
        "hypersphere flux, braiding phases, trimer chains, and the circuit "
        "measurement simulation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", default=None, choices=["csv", "json"])
        p.add_argument("--threads", type=int, default=1)
        p.add_argument(
            "--emit-config", action="store_true",
            help="print the fully resolved config and exit",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.output.directory = args.out
        if args.format is not None:
            cfg.output.format = args.format
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.emit_config:
            print(emit_config(cfg), end="")
            return 0
        out = Path(cfg.output.directory)
        paths = COMMANDS[args.command](cfg, out, cfg.output.format, args.threads)
        for p in paths:
            print(p)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ExsurfError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
