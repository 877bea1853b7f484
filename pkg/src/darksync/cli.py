"""Command-line front end.

Each subcommand builds an ``ExperimentConfig`` (defaults, then ``--config``,
then flag overrides), validates it completely, and only then creates a run
directory ``<out>/<command>-<hash12>-<timestamp>/`` holding ``config.json``
plus CSV/JSON results and SVG figures.

Exit codes: 0 success, 2 invalid input (nothing written), 3 numerical
failure (the message names the module and the tolerance breached).
"""

from __future__ import annotations

import argparse
import shutil
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .analysis import dominant_frequency, lyapunov, phase_clustering, steady_sync
from .config import ExperimentConfig, load_config
from .errors import DarksyncError, InvalidStateError, ValidationError
from .io import _now, read_series_csv, run_directory, write_csv, write_json
from .master import default_observables, evolve
from .model import build_lindbladian, preset
from .operators import site_label
from .series import TimeSeries
from .spectral import PURELY_IMAGINARY, ZERO, build_liouvillian, diagonalize, find_dark_states, verify_pseudo_density
from .states import resolve_initial_state
from .trajectories import run_ensemble

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
# |C| band and phase half-width used for the ensemble synchronization summary
SYNC_BAND = (0.65, 0.95)
PHASE_HALFWIDTH = 0.3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--out", help="root directory for run folders (default: config output_dir)")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--preset", choices=("xxz", "xyz"), help="replace the model with a coupling preset")
    common.add_argument("--topology", choices=("ring", "chain"), help="override the bond topology")
    common.add_argument("--threads", type=int, help="worker processes for trajectory ensembles")
    common.add_argument("--no-plots", action="store_true", help="skip SVG figures")

    p = argparse.ArgumentParser(prog="darksync", description="Four-spin dissipative synchronization toolkit")
    p.add_argument("--version", action="version", version=f"darksync {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="Liouvillian eigenvalues and flags")
    sub.add_parser("darkstates", parents=[common], help="dark states and pseudo-density-matrix check")
    sub.add_parser("evolve", parents=[common], help="master-equation time series")
    sub.add_parser("trajectories", parents=[common], help="stochastic ensemble vs master equation")
    sub.add_parser("sync", parents=[common], help="per-trajectory synchronization statistics")
    sub.add_parser("lyapunov", parents=[common], help="largest Lyapunov exponent over several seeds")
    f = sub.add_parser("fft", parents=[common], help="dominant frequency of a series")
    f.add_argument("--input", help="series CSV (e.g. series.csv from evolve); default: run evolve first")
    f.add_argument("--column", help="column of --input to analyse (default: config fft.observable)")
    return p


def build_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    model = cfg.model
    if args.preset:
        model = preset(args.preset, topology=args.topology or model.topology, gamma=model.gamma)
    elif args.topology:
        model = replace(model, topology=args.topology)
    cfg.model = model
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.threads is not None:
        cfg.workers = args.threads
    if args.out:
        cfg.output_dir = args.out
    return cfg.validate()


class _Run:
    """Run directory plus the provenance shared by every file written into it."""

    def __init__(self, cfg: ExperimentConfig, command: str, plots: bool):
        self.created = _now()
        self.dir, self.hash = run_directory(cfg.output_dir, cfg, command, self.created)
        self.plots = plots

    def csv(self, name, columns, rows):
        return write_csv(self.dir / name, columns, rows, self.hash, self.created)

    def json(self, name, payload):
        return write_json(self.dir / name, payload, self.hash, self.created)

    def plot(self, fn, *args, **kw):
        if self.plots:
            fn(*args, **kw)


def _plotting():
    from . import plotting
    return plotting


def _series_rows(times, columns):
    return [[t, *(c[i] for c in columns)] for i, t in enumerate(times)]


def cmd_spectrum(cfg, lind, state, run: _Run):
    spec = diagonalize(build_liouvillian(lind))
    cluster_of = {}
    for c in spec.clusters:
        for i in c.indices:
            cluster_of[i] = c
    rows = [[i, lam.real, lam.imag, spec.flags[i], cluster_of[i].multiplicity, cluster_of[i].defective]
            for i, lam in enumerate(spec.eigenvalues)]
    run.csv("eigenvalues.csv", ["index", "re", "im", "flag", "multiplicity", "defective"], rows)
    distinct = sorted({(c.center, spec.flags[c.indices[0]], c.multiplicity) for c in spec.clusters},
                      key=lambda x: (-round(x[0].real, 9), -x[0].imag))
    run.csv("distinct.csv", ["re", "im", "flag", "multiplicity"],
            [[z.real, z.imag, f, m] for z, f, m in distinct])
    pure = spec.distinct(PURELY_IMAGINARY)
    summary = {
        "n_eigenvalues": len(spec.eigenvalues),
        "n_zero": len(spec.indices(ZERO)),
        "n_purely_imaginary": len(spec.indices(PURELY_IMAGINARY)),
        "purely_imaginary_distinct": [{"value": [z.real, z.imag], "multiplicity": m} for z, m in pure],
        "adr": None if spec.adr is None else [spec.adr.real, spec.adr.imag],
        "condition": spec.condition,
        "max_residual": spec.max_residual,
        "defective_clusters": [{"center": [c.center.real, c.center.imag], "multiplicity": c.multiplicity}
                               for c in spec.clusters if c.defective],
        "warnings": list(spec.warnings),
    }
    run.json("summary.json", summary)
    run.plot(lambda: _plotting().plot_eigenvalues(spec.eigenvalues, run.dir / "eigenvalues.svg", spec.flags))
    print(f"zero modes: {summary['n_zero']}; purely imaginary: "
          + (", ".join(f"{z.imag:+.6f}i (x{m})" for z, m in pure) or "none"))
    return EXIT_OK


def cmd_darkstates(cfg, lind, state, run: _Run):
    dark = find_dark_states(lind)
    rows = []
    for k, (w, psi) in enumerate(zip(dark.energies, dark.states)):
        rows.append([k, w, *(x for a in psi for x in (a.real, a.imag))])
    amp_cols = [f"{part}_{b}" for b in range(lind.dim) for part in ("re", "im")]
    run.csv("darkstates.csv", ["index", "energy", *amp_cols], rows)
    report = verify_pseudo_density(build_liouvillian(lind), dark, strict=False)
    run.csv("pairs.csv", ["j", "l", "gap", "theta", "real_part", "residual", "ok"],
            [[c.j, c.l, c.gap, c.theta, c.real_part, c.residual, c.ok] for c in report.checks])
    run.json("summary.json", {
        "n_dark": len(dark),
        "energies": dark.energies,
        "predicted_frequencies": list(dark.predicted_frequencies),
        "sign_convention": report.sign_convention,
        "max_residual": report.max_residual,
        "tolerance": report.tol,
        "ok": report.ok,
    })
    print(f"{len(dark)} dark states; gaps {', '.join(f'{g:.6f}' for g in dark.predicted_frequencies) or 'none'}; "
          f"pseudo-density residual {report.max_residual:.3g}")
    if not report.ok:
        print(f"error: spectral: {len(report.failures)} dark pair(s) exceed residual tolerance {report.tol:g}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _evolve(cfg, lind, rho0):
    return evolve(lind, rho0, cfg.t_final, cfg.dt, record_stride=cfg.record_stride)


def cmd_evolve(cfg, lind, state, run: _Run):
    ev = _evolve(cfg, lind, state[1])
    names = list(ev.series)
    cols = [ev.series[k].values for k in names] + [ev.purity.values, ev.loschmidt.values]
    run.csv("series.csv", ["t", *names, "purity", "loschmidt"], _series_rows(ev.times, cols))
    late = ev.purity.window(30.0)
    dp = np.abs(np.gradient(late.values, late.times)) if len(late) > 2 else np.zeros(1)
    run.json("summary.json", {
        "t_final": cfg.t_final, "dt": cfg.dt, "method": ev.method,
        "max_trace_error": ev.max_trace_error, "min_eigenvalue": ev.min_eigenvalue,
        "final_purity": float(ev.purity.values[-1]),
        "max_abs_dpurity_dt_after_30": float(dp.max()),
    })

    def figs():
        pl = _plotting()
        pl.plot_series([ev.series[k] for k in names], run.dir / "sigma_y.svg", ylabel=r"$\langle\sigma^y\rangle$")
        pl.plot_series([ev.purity, ev.loschmidt], run.dir / "purity_loschmidt.svg")
    run.plot(figs)
    print(f"evolved to t={cfg.t_final}; final purity {ev.purity.values[-1]:.6f}")
    return EXIT_OK


def cmd_fft(cfg, lind, state, run: _Run, input_path=None, column=None):
    if input_path:
        t, v, name = read_series_csv(input_path, column or cfg.fft.observable)
        series = TimeSeries(t, v, name)
    else:
        ev = _evolve(cfg, lind, state[1])
        name = column or cfg.fft.observable
        if name not in ev.series:
            raise ValidationError(f"fft.observable: unknown observable {name!r}; choose from {list(ev.series)}")
        series = ev.series[name]
    peak = dominant_frequency(series, cfg.fft.transient_cut, cfg.fft.window)
    run.csv("spectrum.csv", ["frequency", "magnitude"], _series_rows(peak.spectrum.times, [peak.spectrum.values]))
    run.json("summary.json", {
        "observable": series.label, "window": cfg.fft.window, "transient_cut": cfg.fft.transient_cut,
        "dominant_frequency": peak.frequency, "angular_frequency": peak.angular_frequency,
        "amplitude": peak.amplitude, "resolution": peak.resolution, "n_samples": peak.n_samples,
    })
    run.plot(lambda: _plotting().plot_spectrum(peak.spectrum.times, peak.spectrum.values,
                                              run.dir / "spectrum.svg", peak.frequency))
    print(f"f_d = {peak.frequency:.6f} (resolution {peak.resolution:.6f}), amplitude {peak.amplitude:.4g}")
    return EXIT_OK


def _pure(state):
    if state[0] is None:
        raise InvalidStateError("initial_state: trajectory commands need a pure (product or named) state")
    return state[0]


def _ensemble(cfg, lind, psi0, snapshots: bool, keep_runs: bool):
    tr = cfg.trajectories
    return run_ensemble(lind, psi0, tr.t_final, cfg.dt, n_traj=cfg.n_traj, master_seed=cfg.master_seed,
                        record_stride=tr.record_stride,
                        snapshot_stride=tr.snapshot_stride if snapshots else None,
                        snapshot_start=tr.snapshot_start, scheme=cfg.scheme, workers=cfg.workers,
                        keep_runs=keep_runs)


def cmd_trajectories(cfg, lind, state, run: _Run):
    psi0 = _pure(state)
    ens = _ensemble(cfg, lind, psi0, snapshots=False, keep_runs=False)
    names = list(ens.mean)
    cols = []
    for k in names:
        cols += [ens.mean[k].values, ens.stderr[k].values]
    header = ["t"] + [x for k in names for x in (f"{k}_mean", f"{k}_stderr")]
    run.csv("ensemble.csv", header, _series_rows(ens.times, cols))

    tr = cfg.trajectories
    ev = evolve(lind, state[1], tr.t_final, cfg.dt, record_stride=tr.record_stride)
    obs = names[0]
    z_rows, zmax = [], 0.0
    for t in np.linspace(tr.t_final / 20, tr.t_final, 20):
        i = int(np.argmin(np.abs(ens.times - t)))
        m, se = float(ens.mean[obs].values[i]), float(ens.stderr[obs].values[i])
        ref = float(ev.series[obs].at(ens.times[i]))
        z = abs(m - ref) / se if se > 0 else (0.0 if m == ref else np.inf)
        zmax = max(zmax, z)
        z_rows.append([ens.times[i], m, se, ref, z])
    run.csv("comparison.csv", ["t", "ensemble_mean", "stderr", "master", "z"], z_rows)
    run.json("summary.json", {
        "n_traj": ens.n_traj, "master_seed": ens.master_seed, "scheme": cfg.scheme,
        "observable": obs, "max_z_at_probes": zmax,
        "norm_drift_median": float(np.median([s["norm_drift_median"] for s in ens.summaries])),
        "norm_drift_max": float(max(s["norm_drift_max"] for s in ens.summaries)),
    })

    def figs():
        pl = _plotting()
        pl.plot_series([replace(ens.mean[obs], label="ensemble mean"), ev.series[obs]],
                       run.dir / "ensemble_vs_master.svg", ylabel=obs)
    run.plot(figs)
    print(f"{ens.n_traj} trajectories; max |mean - master| / stderr at 20 probes: {zmax:.2f}")
    return EXIT_OK


def cmd_sync(cfg, lind, state, run: _Run):
    psi0 = _pure(state)
    ens = _ensemble(cfg, lind, psi0, snapshots=True, keep_runs=True)
    j, l = cfg.sync.pair
    results = [steady_sync(r, j, l, cfg.sync.window) for r in ens.runs]
    mods = np.array([s.modulus_mean for s in results])
    phases = np.array([s.phase for s in results])
    run.csv("sync.csv", ["trajectory", "seed", "modulus", "phase", "drift", "n_samples", "n_undefined"],
            [[i, r.seed, s.modulus_mean, s.phase, s.phase_drift, s.n_samples, s.n_undefined]
             for i, (r, s) in enumerate(zip(ens.runs, results))])
    center, frac_cluster = phase_clustering(phases, PHASE_HALFWIDTH)
    in_band = float(np.mean((mods >= SYNC_BAND[0]) & (mods <= SYNC_BAND[1])))
    run.json("summary.json", {
        "pair": [site_label(j) + site_label(l)], "window": list(results[0].window),
        "n_traj": len(results), "modulus_median": float(np.median(mods)),
        "fraction_modulus_in_band": in_band, "band": list(SYNC_BAND),
        "phase_cluster_center": center, "phase_cluster_center_over_2pi_3": center / (2 * np.pi / 3),
        "fraction_phase_within_halfwidth": frac_cluster, "halfwidth": PHASE_HALFWIDTH,
        "median_abs_phase_drift": float(np.median(np.abs([s.phase_drift for s in results]))),
    })
    run.plot(lambda: _plotting().plot_polar(mods, phases, run.dir / "sync_polar.svg",
                                           title=f"C_{site_label(j)}{site_label(l)}"))
    print(f"|C| in {SYNC_BAND}: {in_band:.1%}; phase center {center:+.4f} rad, "
          f"{frac_cluster:.1%} within +/-{PHASE_HALFWIDTH}")
    return EXIT_OK


def cmd_lyapunov(cfg, lind, state, run: _Run):
    psi0 = _pure(state)
    ly = cfg.lyapunov
    obs = default_observables(cfg.model.n_spins)["sigma_y_A"]
    traces, events, per_seed = [], [], []
    for k in range(ly.n_seeds):
        seed = cfg.master_seed + k
        tr = lyapunov(lind, psi0, obs, ly.t_final, cfg.dt, seed, ly.delta, ly.delta_max,
                      record_stride=cfg.record_stride)
        traces.append(tr)
        events += [[seed, t, d] for t, d in tr.events]
        per_seed.append({"seed": seed, "delta0": tr.delta0, "lambda_final": tr.final, "n_events": len(tr.events),
                         "last_event": tr.events[-1][0] if tr.events else None,
                         "max_abs_distance": float(np.max(np.abs(tr.distance.values)))})
    run.csv("events.csv", ["seed", "t", "growth"], events)
    times = traces[0].lam.times
    run.csv("lambda.csv", ["t", *[f"seed_{p['seed']}" for p in per_seed]],
            _series_rows(times, [tr.lam.values for tr in traces]))
    run.json("summary.json", {"delta": ly.delta, "delta_max": ly.delta_max, "t_final": ly.t_final,
                              "seeds": per_seed})
    run.plot(lambda: _plotting().plot_series([replace(tr.lam, label=f"seed {p['seed']}")
                                              for tr, p in zip(traces, per_seed)],
                                             run.dir / "lambda.svg", ylabel=r"$\lambda(t)$"))
    for p in per_seed:
        print(f"seed {p['seed']}: lambda(T) = {p['lambda_final']:+.4g}, events {p['n_events']}")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "darkstates": cmd_darkstates,
    "evolve": cmd_evolve,
    "trajectories": cmd_trajectories,
    "sync": cmd_sync,
    "lyapunov": cmd_lyapunov,
    "fft": cmd_fft,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = build_config(args)
        lind = build_lindbladian(cfg.model)
        state = resolve_initial_state(cfg.initial_state, cfg.model.n_spins)
        if args.command in ("trajectories", "sync", "lyapunov"):
            _pure(state)
        if args.command == "fft" and args.input:
            read_series_csv(args.input, args.column or cfg.fft.observable)
    except (ValidationError, InvalidStateError) as exc:
        for e in getattr(exc, "errors", [str(exc)]):
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT

    run = _Run(cfg, args.command, plots=not args.no_plots)
    extra = {"input_path": args.input, "column": args.column} if args.command == "fft" else {}
    try:
        code = COMMANDS[args.command](cfg, lind, state, run, **extra)
    except (ValidationError, InvalidStateError) as exc:
        shutil.rmtree(run.dir, ignore_errors=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DarksyncError as exc:
        print(f"error: {exc.module}: {exc}", file=sys.stderr)
        run.json("error.json", {"module": exc.module, "message": str(exc)})
        return EXIT_NUMERICAL
    print(run.dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
