"""Command-line front end: ``fracsap <subcommand> [options]``.

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 configuration
error, 4 hypothesis failure, 5 periodicity verdict FAIL.

Output schemas (all CSV files have a header row):

    trajectories.csv        path_id, t, x0, ..., x{d-1}       (t runs from -tau to T)
    picard_diagnostics.csv  path_id, n, D_n
    noise dump              path_id, t, dw0, ..., dw{m-1}      (t = right end of the step)
    noise dump, jumps       path_id, time, atom_index
    op_table.csv            t, s00, s01, ..., s{d-1}{d-1}      (row-major entries of S(t))
    report.csv              t, ms_gap, ms_se, bl_gap, bl_se, trunc_bound, trunc_se, coupled_bl
    gaps.dat                the report columns, whitespace separated, for gnuplot
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend_name
from .config import load_config
from .errors import ConfigError, FracSapError
from .mittag_leffler import ml_eval
from .model import VARIANTS, contraction_constant, contraction_terms, kappa1, kappa2, validate_hypotheses
from .noise import big_jump_intensity, sample_path
from .periodicity import FAIL, domination_checks, periodicity_report
from .solution_operator import OperatorTable
from .solver import Ensemble, Prepared, run_ensemble

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_VERDICT = range(6)
OUTPUT_ROOT_ENV = "FRACSAP_OUTPUT_ROOT"


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def _out_dir(args, default_name) -> Path:
    out = Path(args.out) if args.out else output_root() / default_name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(v) -> str:
    return repr(float(v))


def write_csv(path, header, rows):
    """Rows of floats/ints written with shortest round-trip formatting."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) if isinstance(v, (int, np.integer)) else _fmt(v) for v in row))
            fh.write("\n")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _inventory(out, names):
    return {n: {"sha256": sha256(out / n), "bytes": (out / n).stat().st_size} for n in names}


def _dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_ml_eval(args):
    print(repr(ml_eval(args.alpha, args.beta, args.z)))
    return EXIT_OK


def cmd_op_table(args):
    cfg = load_config(args.config)
    model, solver = cfg.model, cfg.solver
    table = OperatorTable(model.sectorial, solver.step, solver.n_steps)
    d = model.dim
    path = Path(args.grid_out) if args.grid_out else _out_dir(args, "op-table") / "op_table.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["t"] + [f"s{i}{j}" for i in range(d) for j in range(d)]
    rows = table.rows()
    write_csv(path, header, ([t, *r] for t, r in zip(table.lags, rows)))
    print(f"wrote {path}")
    return EXIT_OK


def check_summary(model, sample_budget=400, seed=0):
    rep = validate_hypotheses(model, sample_budget=sample_budget, seed=seed)
    s = model.sectorial
    co = model.coefficients
    b = big_jump_intensity(model.noise)
    printed, exact = kappa2(s.alpha, s.mu) if 1 < s.alpha <= 2 and s.mu < 0 else (math.nan, math.nan)
    contraction = {}
    for v in VARIANTS:
        try:
            terms = contraction_terms(s.alpha, s.mu, s.C, s.M, co.k0, co.L, b, v)
            theta = contraction_constant(model, v)
        except FracSapError:
            terms, theta = (math.nan,) * 3, math.nan
        contraction[v] = {"theta": theta, "margin": 1.0 - theta, "terms": list(terms),
                          "ok": bool(theta < 1.0)}
    k1 = kappa1(s.alpha, s.mu) if 1 < s.alpha <= 2 and s.mu < 0 else math.nan
    return rep, {"kappa1": k1, "kappa2_paper_literal": printed, "kappa2_quadrature_exact": exact,
                 "b": b, "contraction": contraction}


def format_constants(consts) -> str:
    lines = [f"kappa1                    {consts['kappa1']:.12g}",
             f"kappa2 (paper_literal)    {consts['kappa2_paper_literal']:.12g}",
             f"kappa2 (quadrature_exact) {consts['kappa2_quadrature_exact']:.12g}",
             f"b (big-jump rate)         {consts['b']:.12g}",
             "variant            Theta          margin         status"]
    for v, c in consts["contraction"].items():
        lines.append(f"{v:<18} {c['theta']:<14.8g} {c['margin']:<14.8g} "
                     f"{'Theta < 1' if c['ok'] else 'Theta >= 1'}")
    return "\n".join(lines)


def cmd_check(args):
    cfg = load_config(args.config)
    rep, consts = check_summary(cfg.model, cfg.analysis.sample_budget, args.seed or 0)
    print(rep.format_table())
    print()
    print(format_constants(consts))
    if args.json:
        _dump_json(args.json, {"validation": rep.to_dict(), "constants": consts})
    ok = rep.ok and consts["contraction"]["paper_literal"]["ok"]
    return EXIT_OK if ok else EXIT_HYPOTHESIS


def _grid_summary(prep: Prepared):
    return {"step": prep.step, "tau": prep.model.tau, "horizon": prep.cfg.horizon,
            "n_history": prep.M, "n_steps": prep.N, "n_points": prep.M + prep.N + 1}


def simulate(cfg, out: Path, scheme, paths, seed, threads=1, dump_noise=None):
    """Run an ensemble and write manifest, trajectories and (for picard) diagnostics."""
    model, solver = cfg.model, cfg.solver
    t0 = time.perf_counter()
    prep = Prepared(model, solver)
    ens = run_ensemble(model, solver, paths, seed, threads=threads, scheme=scheme, prepared=prep)
    elapsed = time.perf_counter() - t0
    out.mkdir(parents=True, exist_ok=True)
    d = model.dim
    write_csv(out / "trajectories.csv", ["path_id", "t"] + [f"x{i}" for i in range(d)],
              ((p, t, *ens.values[p, j]) for p in range(ens.n_paths)
               for j, t in enumerate(ens.grid)))
    files = ["trajectories.csv"]
    if scheme == "picard":
        write_csv(out / "picard_diagnostics.csv", ["path_id", "n", "D_n"],
                  ((p, n + 1, v) for p, diag in enumerate(ens.diagnostics)
                   for n, v in enumerate(diag.sup_diffs)))
        files.append("picard_diagnostics.csv")
    if dump_noise:
        _dump_noise(Path(dump_noise), model, prep, ens)
    manifest = {
        "artifact": "fracsap", "version": __version__, "backend": backend_name(),
        "command": "simulate", "scheme": scheme, "master_seed": int(seed), "paths": int(paths),
        "path_seeds": [int(s) for s in ens.seeds],
        "grid": _grid_summary(prep), "config": cfg.resolved,
        "files": _inventory(out, files),
    }
    _dump_json(out / "manifest.json", manifest)
    _dump_json(out / "timing.json", {"wall_clock_s": elapsed, "threads": int(threads),
                                     "paths_per_s": paths / elapsed if elapsed > 0 else None})
    return ens, manifest


def _dump_noise(path, model, prep, ens):
    path.parent.mkdir(parents=True, exist_ok=True)
    jumps = path.with_name(path.stem + "_jumps" + (path.suffix or ".csv"))
    m = model.noise.dim
    inc_rows, jump_rows = [], []
    for p, seed in enumerate(ens.seeds):
        nz = sample_path(model.noise, prep.grid, seed)
        inc_rows.extend((p, t, *dw) for t, dw in zip(prep.grid[1:], nz.dw))
        jump_rows.extend((p, s, int(k)) for s, k in zip(nz.jump_times, nz.jump_atoms))
    write_csv(path, ["path_id", "t"] + [f"dw{i}" for i in range(m)], inc_rows)
    write_csv(jumps, ["path_id", "time", "atom_index"], jump_rows)


def cmd_simulate(args, scheme=None):
    cfg = load_config(args.config)
    scheme = scheme or args.scheme or cfg.solver.scheme
    paths = args.paths or cfg.analysis.paths
    seed = cfg.analysis.seed if args.seed is None else args.seed
    out = _out_dir(args, "simulate" if scheme == "time_step" else "picard")
    ens, manifest = simulate(cfg, out, scheme, paths, seed, args.threads, args.dump_noise)
    print(f"{ens.n_paths} paths, scheme {scheme}, {manifest['grid']['n_points']} grid points -> {out}")
    for name, info in manifest["files"].items():
        print(f"  {name}  sha256 {info['sha256']}")
    return EXIT_OK


def cmd_picard(args):
    return cmd_simulate(args, scheme="picard")


def load_runs(runs: Path):
    """Rebuild an Ensemble (and its config) from a simulate output directory."""
    man_path = runs / "manifest.json"
    if not man_path.exists():
        raise ConfigError(f"{runs}: no manifest.json (not a simulate output directory)")
    manifest = json.loads(man_path.read_text())
    cfg = load_config(man_path)
    data = np.loadtxt(runs / "trajectories.csv", delimiter=",", skiprows=1, ndmin=2)
    g = manifest["grid"]
    n_pts, paths = g["n_points"], manifest["paths"]
    if data.shape[0] != n_pts * paths:
        raise ConfigError(f"{runs}: trajectories.csv has {data.shape[0]} rows, "
                          f"expected {n_pts * paths}")
    values = data[:, 2:].reshape(paths, n_pts, -1)
    grid = data[:n_pts, 1].copy()
    ens = Ensemble(grid, values, g["n_history"], manifest["path_seeds"], manifest["master_seed"],
                   manifest["scheme"])
    return ens, cfg, manifest


def analyze(ens, omega, checkpoints, out: Path, n_boot=200, seed=0, fraction=0.25, max_per_cloud=500):
    rep = periodicity_report(ens, omega, checkpoints, n_boot=n_boot, seed=seed,
                             fraction=fraction, max_per_cloud=max_per_cloud)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "report.csv", rep.COLUMNS, rep.rows())
    with open(out / "gaps.dat", "w") as fh:
        fh.write("# " + " ".join(rep.COLUMNS) + "\n")
        for row in rep.rows():
            fh.write(" ".join(_fmt(v) for v in row) + "\n")
    body = rep.to_dict()
    body["domination"] = [{"bl_le_trunc": a, "trunc_le_sqrt_ms": b}
                          for a, b in domination_checks(rep)]
    _dump_json(out / "report.json", body)
    return rep, body


def _checkpoints(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad checkpoint list {text!r}") from exc


def cmd_analyze(args):
    ens, cfg, _ = load_runs(Path(args.runs))
    an = cfg.analysis
    omega = args.omega if args.omega is not None else an.omega
    cps = args.checkpoints or an.checkpoints
    out = _out_dir(args, "analyze")
    rep, _ = analyze(ens, omega, cps, out, args.n_boot if args.n_boot is not None else an.n_boot,
                     an.seed, an.fraction, an.max_per_cloud)
    _print_report(rep)
    return EXIT_VERDICT if FAIL in rep.verdicts.values() else EXIT_OK


def _print_report(rep):
    print(f"omega = {rep.omega}, paths = {rep.n_paths}")
    print("  ".join(f"{c:>12}" for c in rep.COLUMNS))
    for row in rep.rows():
        print("  ".join(f"{v:12.5g}" for v in row))
    for k, v in rep.verdicts.items():
        print(f"verdict ({k}): {v}")


def cmd_report(args):
    cfg = load_config(args.config)
    out = _out_dir(args, "report")
    an = cfg.analysis
    rep_v, consts = check_summary(cfg.model, an.sample_budget, 0)
    if args.runs:
        ens, _, _ = load_runs(Path(args.runs))
    else:
        paths = args.paths or an.paths
        seed = an.seed if args.seed is None else args.seed
        ens, _ = simulate(cfg, out / "runs", cfg.solver.scheme, paths, seed, args.threads)
    prep, body = analyze(ens, an.omega, an.checkpoints, out, an.n_boot, an.seed, an.fraction,
                         an.max_per_cloud)
    summary = {"validation": rep_v.to_dict(), "constants": consts, "periodicity": body}
    _dump_json(out / "summary.json", summary)
    text = "\n\n".join([rep_v.format_table(), format_constants(consts)])
    (out / "summary.txt").write_text(text + "\n")
    print(text)
    print()
    _print_report(prep)
    if FAIL in prep.verdicts.values():
        return EXIT_VERDICT
    if not rep_v.ok or not consts["contraction"]["paper_literal"]["ok"]:
        return EXIT_HYPOTHESIS
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="fracsap", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"fracsap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ml-eval", help="evaluate E_{alpha,beta}(z)")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--z", type=float, required=True)
    s.set_defaults(func=cmd_ml_eval)

    def common(s, config=True):
        if config:
            s.add_argument("--config", required=True, help="TOML config or a run manifest.json")
        s.add_argument("--out", help=f"output directory (default ${OUTPUT_ROOT_ENV}/<command>)")

    s = sub.add_parser("op-table", help="write S_alpha on the solver grid")
    common(s)
    s.add_argument("--grid-out", help="CSV path (default <out>/op_table.csv)")
    s.set_defaults(func=cmd_op_table)

    s = sub.add_parser("check", help="validate hypotheses and print contraction constants")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, default=None, help="sampling seed for the quotients")
    s.add_argument("--json", help="also write the report as JSON")
    s.set_defaults(func=cmd_check)

    for name, func in (("simulate", cmd_simulate), ("picard", cmd_picard)):
        s = sub.add_parser(name, help="simulate an ensemble of mild solutions"
                           if name == "simulate" else "simulate with successive approximations")
        common(s)
        if name == "simulate":
            s.add_argument("--scheme", choices=("time_step", "picard"))
        s.add_argument("--paths", type=int)
        s.add_argument("--seed", type=int, help="master seed")
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--dump-noise", help="CSV path for Wiener increments (jumps go to *_jumps.csv)")
        s.set_defaults(func=func)

    s = sub.add_parser("analyze", help="periodicity report for a simulate output directory")
    s.add_argument("--runs", required=True)
    s.add_argument("--omega", type=float)
    s.add_argument("--checkpoints", type=_checkpoints)
    s.add_argument("--n-boot", type=int)
    common(s, config=False)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("report", help="check + simulate + analyze in one summary")
    common(s)
    s.add_argument("--runs", help="reuse an existing simulate output directory")
    s.add_argument("--paths", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FracSapError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
