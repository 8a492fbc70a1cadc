"""Command-line entry point: ``mep-lab <subcommand>``.

Exit codes: 0 success, 1 configuration or input error, 2 blow-up or solver
breakdown (partial artifacts are kept), 3 a check or comparison failed.
Errors are reported on stderr as a single ``key=value`` line.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from .. import hamiltonian
from ..eulerian import SolverConfig, evolve
from ..lagrangian import FlowState, cross_validate, evolve_lagrangian, to_eulerian
from ..spectral import Grid
from . import experiments
from .config import ConfigError, RunConfig, parse_text, render_report
from .diagnostics import DiagnosticsWriter, record_for, truncate_before
from .presets import make_state
from .snapshot import Snapshot, SnapshotError, latest_snapshot, read_snapshot, snapshot_name, write_snapshot

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_FAILED = 0, 1, 2, 3

RESOLVED_NAME = "config.resolved.txt"
DIAGNOSTICS_NAME = "diagnostics.csv"
REPORT_NAME = "report.txt"


class CliError(Exception):
    def __init__(self, status: int, kind: str, detail: str):
        super().__init__(detail)
        self.status = status
        self.kind = kind
        self.detail = detail


def _fail_line(kind: str, detail: str) -> str:
    flat = " ".join(str(detail).split()).replace('"', "'")
    return f'mep-lab: error={kind} detail="{flat}"'


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = (p.strip() for p in item.split("=", 1))
        out[k] = v
    return out


def _load_config(path: str, sets) -> RunConfig:
    cfg = RunConfig.load(path)
    extra = _overrides(sets)
    return cfg.with_overrides(**extra) if extra else cfg


def _explicit_keys(path: str | None) -> dict:
    """Keys a config file sets explicitly (validated), without defaults."""
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    raw = parse_text(text, path)
    resolved = RunConfig.from_mapping(raw)
    return {k: resolved[k] for k in raw}


# -- run / resume --------------------------------------------------------------------


def _simulate(cfg: RunConfig, outdir: Path, start=None, append: bool = False) -> int:
    """March the configured solver, writing diagnostics and snapshots. Returns an exit code."""
    grid = Grid(cfg["dimension"], cfg["grid.n"])
    scfg = cfg.solver_config()
    sigma = cfg["gevrey.sigma"]
    writer = DiagnosticsWriter(outdir / DIAGNOSTICS_NAME, append=append)
    try:
        if cfg["solver"] == "lagrangian":
            if start is None:
                F0, step0 = FlowState.from_eulerian(make_state(cfg["preset"], grid, cfg["preset.amplitude_n"],
                                                               cfg["preset.amplitude_v"])), 0
            else:
                F0, step0 = start.flow(), start.step

            def hook(F, step):
                s = to_eulerian(F)
                writer.write(record_for(s, sigma))
                write_snapshot(outdir / snapshot_name(step), Snapshot.from_flow(F, step, s))

            tr = evolve_lagrangian(F0, scfg, hooks=[hook], start_step=step0)
            final_state = to_eulerian(tr.final)
        else:
            if start is None:
                s0, step0 = make_state(cfg["preset"], grid, cfg["preset.amplitude_n"], cfg["preset.amplitude_v"]), 0
            else:
                s0, step0 = start.state(), start.step

            def hook(s, step):
                writer.write(record_for(s, sigma))
                write_snapshot(outdir / snapshot_name(step), Snapshot.from_state(s, step))

            tr = evolve(s0, scfg, hooks=[hook], start_step=step0)
            final_state = tr.final
        if tr.event is not None:
            writer.write(record_for(final_state, sigma, event=tr.event.describe()))
    finally:
        writer.close()

    report = {"status": "ok" if tr.event is None else "blowup", "t_final": final_state.t, "steps": tr.steps}
    if tr.event is not None:
        report.update({"event.reason": tr.event.reason, "event.t": tr.event.t, "event.value": tr.event.value})
    if grid.dimension == 1 and len(tr.states) > 1:
        conv = to_eulerian if cfg["solver"] == "lagrangian" else None
        for tag, drift in hamiltonian.conservation_audit(tr.states, conv).items():
            report[f"drift.{tag}"] = drift
    (outdir / REPORT_NAME).write_text(render_report(report))
    if tr.event is not None:
        print(_fail_line("blowup", tr.event.describe()), file=sys.stderr)
        return EXIT_BLOWUP
    print(render_report(report), end="")
    return EXIT_OK


def _prepare_outdir(cfg: RunConfig) -> Path:
    outdir = Path(cfg["output.dir"])
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_CONFIG, "output_dir", f"{outdir}: {exc.strerror}") from None
    (outdir / RESOLVED_NAME).write_text(cfg.render())
    return outdir


def cmd_run(args) -> int:
    cfg = _load_config(args.config, args.set)
    if cfg["solver"] == "compare":
        return _compare(cfg)
    outdir = _prepare_outdir(cfg)
    for old in outdir.glob("snapshot_*.txt"):
        old.unlink()
    return _simulate(cfg, outdir)


def cmd_resume(args) -> int:
    rundir = Path(args.run_dir)
    resolved = rundir / RESOLVED_NAME
    if not resolved.exists():
        raise CliError(EXIT_CONFIG, "resume", f"{rundir} has no {RESOLVED_NAME}")
    cfg = RunConfig.load(resolved)
    changes = {"output.dir": str(rundir)}
    if args.t_end is not None:
        changes["t_end"] = args.t_end
    cfg = cfg.with_overrides(**changes)
    if cfg["solver"] == "compare":
        raise CliError(EXIT_CONFIG, "resume", "compare runs cannot be resumed")
    grid = Grid(cfg["dimension"], cfg["grid.n"])
    path = Path(args.snapshot) if args.snapshot else latest_snapshot(rundir)
    snap = read_snapshot(path, expect_grid=grid)
    want = "lagrangian" if cfg["solver"] == "lagrangian" else "eulerian"
    if snap.kind != want:
        raise SnapshotError(f"{path}: {snap.kind} snapshot cannot resume a {want} run")
    (rundir / RESOLVED_NAME).write_text(cfg.render())
    diag = rundir / DIAGNOSTICS_NAME
    if diag.exists():
        truncate_before(diag, snap.t)
    for later in rundir.glob("snapshot_*.txt"):
        if int(later.stem.split("_")[1]) > snap.step:
            later.unlink()
    return _simulate(cfg, rundir, start=snap, append=True)


# -- compare -------------------------------------------------------------------------


def _compare(cfg: RunConfig) -> int:
    if cfg["dimension"] != 1:
        raise ConfigError("compare requires dimension = 1")
    outdir = _prepare_outdir(cfg)
    grid = Grid(1, cfg["grid.n"])
    s0 = make_state(cfg["preset"], grid, cfg["preset.amplitude_n"], cfg["preset.amplitude_v"])
    rep = cross_validate(s0, cfg.solver_config())
    with open(outdir / "compare.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "max_dn", "max_dv"])
        for row in zip(rep.times, rep.max_dn, rep.max_dv):
            w.writerow([format(float(x), ".17g") for x in row])
    tol = cfg["compare.tolerance"]
    report = {
        "final_discrepancy": rep.final,
        "tolerance": tol,
        "eulerian_event": rep.eulerian_event.describe() if rep.eulerian_event else "none",
        "lagrangian_event": rep.lagrangian_event.describe() if rep.lagrangian_event else "none",
    }
    if not rep.ok:
        report["status"] = "breakdown"
        code = EXIT_BLOWUP
    elif rep.final <= tol:
        report["status"] = "ok"
        code = EXIT_OK
    else:
        report["status"] = "tolerance_exceeded"
        code = EXIT_FAILED
    (outdir / REPORT_NAME).write_text(render_report(report))
    print(render_report(report), end="")
    if code == EXIT_BLOWUP:
        who = "eulerian" if rep.eulerian_event else "lagrangian"
        ev = rep.eulerian_event or rep.lagrangian_event
        print(_fail_line("breakdown", f"{who}:{ev.describe()}"), file=sys.stderr)
    elif code == EXIT_FAILED:
        print(_fail_line("tolerance_exceeded", f"discrepancy={rep.final:.6g}>tolerance={tol:.6g}"), file=sys.stderr)
    return code


def cmd_compare(args) -> int:
    return _compare(_load_config(args.config, args.set))


# -- check / dispersion / convergence ------------------------------------------------------


def _emit(report: dict, out: str | None) -> None:
    text = render_report(report)
    print(text, end="")
    if out:
        Path(out).write_text(text)


def cmd_check(args) -> int:
    results = experiments.run_suite(args.suite, seed=args.seed, n=args.n)
    report = {"suite": args.suite, "seed": args.seed, "n": args.n}
    failures = []
    for r in results:
        report[f"{r.name}.residual"] = r.residual
        report[f"{r.name}.tolerance"] = r.tolerance
        report[f"{r.name}.status"] = "pass" if r.passed else "fail"
        if r.note:
            report[f"{r.name}.note"] = r.note
        if not r.passed:
            failures.append(r.name)
    report["failures"] = ",".join(failures) if failures else "none"
    report["status"] = "fail" if failures else "pass"
    _emit(report, args.out)
    if failures:
        print(_fail_line("check_failed", f"{args.suite}:{','.join(failures)}"), file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_dispersion(args) -> int:
    given = _explicit_keys(args.config)
    n = given.get("grid.n", 64)
    dt = given.get("dt", 0.05)
    res = experiments.dispersion_run(args.k, args.amplitude, n=n, dt=dt, t_end=args.t_end)
    report = {
        "k": res.k,
        "amplitude": res.amplitude,
        "omega_measured": res.omega,
        "omega_predicted": res.predicted,
        "abs_error": res.error,
        "periods_fitted": res.periods,
        "fit_residual": res.fit_residual,
        "fit_ok": "yes" if res.fit_ok else "no",
    }
    _emit(report, args.out)
    if not res.fit_ok:
        print(_fail_line("fit_failed", f"k={res.k}"), file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_convergence(args) -> int:
    given = _explicit_keys(args.config)
    preset = given.get("preset", "analytic")
    model = given.get("model", "mep")
    amps = {k.split(".")[1]: given[k] for k in ("preset.amplitude_n", "preset.amplitude_v")
            if k in given and given[k] != "auto"}
    if args.mode == "temporal":
        res = experiments.temporal_convergence(preset, n=given.get("grid.n", 256), t_end=given.get("t_end", 1.0),
                                               dts=tuple(args.dts), model=model, **amps)
        label = "dt"
    else:
        res = experiments.spatial_convergence(preset, ns=tuple(args.ns), t_end=given.get("t_end", 0.25),
                                              dt=given.get("dt", 1e-3), dimension=given.get("dimension", 1),
                                              model=model, **amps)
        label = "n"
    report = {"mode": args.mode, "preset": preset}
    for i, (p, e) in enumerate(zip(res.parameters, res.errors)):
        report[f"{label}.{i}"] = p
        report[f"error.{i}"] = e
    key = "order" if args.mode == "temporal" else "decay_factor"
    for i, o in enumerate(res.orders):
        report[f"{key}.{i}"] = o
    if args.mode == "temporal":
        report["observed_order"] = res.order
    _emit(report, args.out)
    return EXIT_OK


# -- entry point -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mep-lab", description="Modified Euler-Poisson laboratory.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the configured solver")
    p.add_argument("config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="Eulerian vs Lagrangian cross-validation")
    p.add_argument("config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("check", help="run a module's property suite")
    p.add_argument("suite", choices=sorted(experiments.SUITES))
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("dispersion", help="measure the linear frequency of mode k")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--amplitude", type=float, default=1e-4)
    p.add_argument("--t-end", type=float, default=40 * math.pi)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("convergence", help="spatial or temporal self-convergence study")
    p.add_argument("--mode", choices=("spatial", "temporal"), required=True)
    p.add_argument("--config")
    p.add_argument("--dts", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    p.add_argument("--ns", type=int, nargs="+", default=[32, 64, 128])
    p.add_argument("--out")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("resume", help="continue a run from its latest (or a given) snapshot")
    p.add_argument("run_dir")
    p.add_argument("--snapshot")
    p.add_argument("--t-end", type=float)
    p.set_defaults(func=cmd_resume)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(_fail_line(exc.kind, exc.detail), file=sys.stderr)
        return exc.status
    except ConfigError as exc:
        print(_fail_line("config", exc), file=sys.stderr)
        return EXIT_CONFIG
    except SnapshotError as exc:
        print(_fail_line("snapshot", exc), file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(_fail_line("invalid_input", exc), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
