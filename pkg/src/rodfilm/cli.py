"""Command line front end: feasibility checks, minimization, thickness sweeps.

Subcommands:
  check     evaluate the admissibility constraints for a configured system
  minimize  run the alternating film/rod descent and export artifacts
  dimred    evaluate the scaled energy down a thickness sweep
  link      linking numbers and global radius for CSV curve files

Exit codes: 0 success, 1 config error, 2 infeasible, 3 solver failure.
"""

import argparse
import csv
import os
import sys

import numpy as np

from .config import ExperimentConfig
from .constraints import check_admissible
from .errors import ConfigError, RodFilmError
from .solver import alternate_minimize, dimred_sweep
from .surface import save_surface
from .topology import ClosedPolyline, global_radius, linking_number

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER = 3


def _set_threads(n):
    os.environ["OMP_NUM_THREADS"] = str(n)
    os.environ["NUMBA_NUM_THREADS"] = str(n)
    try:
        import numba

        numba.set_num_threads(n)
    except Exception:
        pass  # best effort; kernels also run single-threaded


def _prepare_outdir(cfg, override):
    """Create the output directory and prove it is writable up front."""
    outdir = override if override is not None else cfg.output["dir"]
    probe = os.path.join(outdir, ".write-probe")
    try:
        os.makedirs(outdir, exist_ok=True)
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as exc:
        raise ConfigError(f"output.dir: cannot write to {outdir!r}: {exc}") from exc
    return outdir


def _write_text(path, text):
    with open(path, "w") as f:
        f.write(text if text.endswith("\n") else text + "\n")
    print(f"wrote {path}")


def _run_check(system, cfg, sc):
    return check_admissible(
        system,
        mode=cfg.constraint_mode(system),
        pos_tol=sc.pos_tol,
        dir_tol=sc.dir_tol,
        seed=sc.seed,
        mc_samples=sc.mc_samples,
        mc_max_samples=sc.mc_max_samples,
        c5_slack=sc.c5_slack,
    )


def cmd_check(args):
    cfg = ExperimentConfig.from_file(args.config)
    outdir = _prepare_outdir(cfg, args.out)
    system = cfg.build_system()
    sc = cfg.solve_config(seed=args.seed)
    try:
        report = _run_check(system, cfg, sc)
    except RodFilmError as exc:
        print(f"infeasible: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    text = report.to_text()
    print(text)
    if "txt" in cfg.output["formats"]:
        _write_text(os.path.join(outdir, cfg.output["prefix"] + "_check.txt"), text)
    return EXIT_OK if report.admissible else EXIT_INFEASIBLE


def _energy_lines(row):
    return [
        f"  elastic            {row['e_el']:.12g}",
        f"  gravity            {row['e_g']:.12g}",
        f"  film (upper bound) {row['film']:.12g}",
        f"  total              {row['total']:.12g}",
    ]


def cmd_minimize(args):
    cfg = ExperimentConfig.from_file(args.config)
    outdir = _prepare_outdir(cfg, args.out)
    prefix = cfg.output["prefix"]
    formats = cfg.output["formats"]
    system = cfg.build_system()
    models = cfg.build_models()
    sc = cfg.solve_config(seed=args.seed)
    try:
        system, S, trace = alternate_minimize(system, models, None, sc)
    except ValueError as exc:
        # the only ValueError out of the solver entry is a rejected seed
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE

    if "csv" in formats:
        path = os.path.join(outdir, prefix + "_trace.csv")
        trace.to_csv(path)
        print(f"wrote {path}")
    if "obj" in formats:
        path = os.path.join(outdir, prefix + "_surface.obj")
        save_surface(S, path)
        print(f"wrote {path} (+ attachment sidecar)")

    final_report = _run_check(system, cfg, sc)
    last = trace.rows[-1]
    lines = [
        f"minimize: {len(trace.rows)} trace rows,"
        f" final iteration {last['iteration']}",
        "final energies:",
        *_energy_lines(last),
        "",
        f"accepted totals non-increasing: {trace.monotone()}",
        f"constraints ({cfg.constraint_mode(system)} mode):"
        f" {'admissible' if final_report.admissible else 'VIOLATED'}",
        final_report.to_text(),
    ]
    summary = "\n".join(lines)
    print(summary)
    if "txt" in formats:
        _write_text(os.path.join(outdir, prefix + "_summary.txt"), summary)
    return EXIT_OK


def cmd_dimred(args):
    cfg = ExperimentConfig.from_file(args.config)
    outdir = _prepare_outdir(cfg, args.out)
    prefix = cfg.output["prefix"]
    formats = cfg.output["formats"]
    system = cfg.build_system()
    models = cfg.build_models()
    sc = cfg.solve_config(seed=args.seed)
    if not sc.eps_sweep:
        raise ConfigError("solver.eps_sweep: required for a thickness sweep")
    if system.nrods != 1:
        raise ConfigError("problem: the thickness sweep takes exactly one rod")

    rep = dimred_sweep(system, models, None, sc)
    if "csv" in formats:
        path = os.path.join(outdir, prefix + "_dimred.csv")
        rep.to_csv(path)
        print(f"wrote {path}")

    lines = [f"thin-limit reference energy: {rep.limit.total:.12g}"]
    for r in rep.rows:
        if r.note is not None:
            lines.append(f"  eps={r.eps:<10g} SKIPPED: {r.note}")
        else:
            lines.append(
                f"  eps={r.eps:<10g} total={r.total:.9g} gap={r.gap:.9g}"
            )
    lines.append(
        "fitted gap rate: "
        + (f"{rep.rate:.3f}" if rep.rate is not None and np.isfinite(rep.rate)
           else "n/a (fewer than two clean rows)")
    )
    summary = "\n".join(lines)
    print(summary)
    if "txt" in formats:
        _write_text(os.path.join(outdir, prefix + "_dimred.txt"), summary)
    return EXIT_OK


def _load_curve(path):
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read curve file {path!r}: {exc}") from exc
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ConfigError(f"{path!r}: expected three columns x,y,z")
    if len(arr) > 1 and np.allclose(arr[0], arr[-1]):
        arr = arr[:-1]  # closing node is implicit
    try:
        return ClosedPolyline(arr)
    except (ValueError, RodFilmError) as exc:
        raise ConfigError(f"{path!r}: {exc}") from exc


def cmd_link(args):
    curves = [_load_curve(p) for p in args.curves]
    rows = []
    for i, (c, p) in enumerate(zip(curves, args.curves)):
        r = global_radius(c, accelerated=True)
        print(f"curve {i} ({p}): {c.n} nodes, global radius {r:.9g}")
        rows.append(["radius", i, "", f"{r:.17g}", ""])
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            lk = linking_number(curves[i], curves[j])
            print(
                f"link({i},{j}) = {lk.value}"
                f" (raw {lk.raw:.6f}, quality {lk.quality:.2e})"
            )
            rows.append(["link", i, j, str(lk.value), f"{lk.raw:.17g}"])
    if args.out is not None:
        try:
            os.makedirs(args.out, exist_ok=True)
            path = os.path.join(args.out, "link.csv")
            with open(path, "w", newline="") as f:
                wr = csv.writer(f)
                wr.writerow(["kind", "i", "j", "value", "raw"])
                wr.writerows(rows)
        except OSError as exc:
            raise ConfigError(f"cannot write to {args.out!r}: {exc}") from exc
        print(f"wrote {path}")
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rodfilm",
        description="closed elastic rods spanned by anisotropic films",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="worker thread cap (best effort)")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, text in (
        ("check", cmd_check, "evaluate the admissibility constraints"),
        ("minimize", cmd_minimize, "run the alternating descent"),
        ("dimred", cmd_dimred, "run the thickness sweep"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="experiment config file")
        sp.add_argument("--out", default=None, help="override output.dir")
        sp.add_argument("--seed", type=int, default=None, help="override solver.seed")
        sp.set_defaults(func=func)

    lk = sub.add_parser("link", help="linking numbers / global radius of CSV curves")
    lk.add_argument("curves", nargs="+", help="CSV files with x,y,z rows per node")
    lk.add_argument("--out", default=None, help="directory for link.csv")
    lk.set_defaults(func=cmd_link)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.threads is not None:
        _set_threads(args.threads)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RodFilmError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
