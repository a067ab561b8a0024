"""Command-line driver: analytic tables, parameter sweeps, Monte-Carlo and figure data.

Exit codes: 0 success, 1 runtime or numeric failure, 2 usage or validation error.
Numbers are written with 12 significant digits; undefined values as ``nan``.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .coincidence import IntrusionParams, compose_channels, contributions
from .mcsim import MCConfig, simulate_ensemble
from .scenario import Scenario, ScenarioError, load_scenario, shipped_scenario
from .security import security_metrics
from .stats import SkellamParams, skellam_pmf

__all__ = ["main", "probs_rows", "sweep_rows", "crossing_point", "FIGURES"]

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
AXES = ("p", "theta", "xi_eve")
FIGURES = ("3", "4", "5", "6", "7-data", "8")
TRIPLE_COLS = ("correct", "wrong", "double")
METRIC_COLS = ("k", "e_eve", "e_threshold", "offset", "e_threshold_offset", "snr_real", "snr_false")
PROBS_HEADER = tuple(f"{who}_{c}" for who in ("alice", "eve", "noise", "real", "false")
                     for c in TRIPLE_COLS) + METRIC_COLS
SUMMARY_KEYS = ("e_off_nonpositive", "real_pos_false_neg_given_e", "ordered_neg_given_e",
                "false_neg_given_real_pos", "k_false_gt_k_real")
MC_DEFAULT_SHOTS = 700_000


class UsageError(Exception):
    """Bad command-line input; exits with code 2."""


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return "nan"
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    return "nan" if math.isnan(value) else f"{value:.12g}"


def write_table(header: Sequence[str], rows: Iterable[Sequence], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def probs_rows(s: Scenario) -> list[float | None]:
    alice, eve, noise = contributions(s)
    real, false = compose_channels(alice, eve, noise, IntrusionParams.from_scenario(s))
    m = security_metrics(s, (alice, eve, noise))
    row: list = []
    for t in (alice, eve, noise, real, false):
        row.extend(t.as_tuple())
    row.extend(getattr(m, c) for c in METRIC_COLS)
    return row


def _apply_axis(s: Scenario, axis: str, value: float) -> Scenario:
    if axis == "p":
        return s.replace(p=value, p_real=0.0, p_false=value)
    return s.replace(**{axis: value})


def sweep_rows(s: Scenario, axis: str, lo: float, hi: float, steps: int):
    """Header, rows and summary for a sweep; the last column flags the minimum of Eve's error."""
    if axis not in AXES:
        raise UsageError(f"--axis must be one of {AXES}")
    if steps < 1:
        raise UsageError("--steps must be positive")
    grid = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo])
    rows = [[float(v)] + probs_rows(_apply_axis(s, axis, float(v))) for v in grid]
    e_col = 1 + PROBS_HEADER.index("e_eve")
    e_vals = [r[e_col] for r in rows]
    finite = [i for i, e in enumerate(e_vals) if e is not None]
    best = min(finite, key=lambda i: (e_vals[i], grid[i])) if finite else None
    for i, r in enumerate(rows):
        r.append(i == best)
    summary = {"argmin_e_eve": None if best is None else float(grid[best])}
    if axis == "p" and steps > 1:
        rc = 1 + PROBS_HEADER.index("real_correct")
        fc = 1 + PROBS_HEADER.index("false_correct")
        summary["crossing_p"] = crossing_point(grid, [r[rc] - r[fc] for r in rows])
    header = (axis,) + PROBS_HEADER + ("argmin_e_eve",)
    return header, rows, summary


def crossing_point(x: Sequence[float], diff: Sequence[float]) -> float | None:
    """First sign change of ``diff`` located by linear interpolation."""
    for i in range(len(x) - 1):
        a, b = diff[i], diff[i + 1]
        if a == 0:
            return float(x[i])
        if a * b < 0:
            return float(x[i] + (x[i + 1] - x[i]) * a / (a - b))
    if len(diff) and diff[-1] == 0:
        return float(x[-1])
    return None


def _parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"--range must look like LO:HI, got {text!r}") from None
    if hi < lo:
        raise UsageError("--range needs LO <= HI")
    return lo, hi


def _load(path: str) -> Scenario:
    p = Path(path)
    if not p.exists():
        try:
            p = shipped_scenario(path)
        except FileNotFoundError:
            raise UsageError(f"scenario file not found: {path}") from None
    s = load_scenario(p)
    s.validate()
    return s


def _emit(out: Path | None, name: str, header, rows) -> None:
    if out is None:
        write_table(header, rows, sys.stdout)
        return
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", newline="") as fh:
        write_table(header, rows, fh)


def _emit_series(out: Path, name: str, columns: dict[str, Sequence[float]]) -> None:
    """Plot-ready file: two whitespace-separated columns per curve, blank line between curves."""
    out.mkdir(parents=True, exist_ok=True)
    keys = list(columns)
    x_key, curves = keys[0], keys[1:]
    buf = io.StringIO()
    for c in curves:
        buf.write(f"# {x_key} {c}\n")
        for x, y in zip(columns[x_key], columns[c]):
            buf.write(f"{fmt(x)} {fmt(y)}\n")
        buf.write("\n")
    (out / name).write_text(buf.getvalue())


# subcommands

def cmd_probs(args) -> int:
    s = _load(args.scenario)
    _emit(args.out, "probs.csv", PROBS_HEADER, [probs_rows(s)])
    return EXIT_OK


def cmd_sweep(args) -> int:
    s = _load(args.scenario)
    lo, hi = _parse_range(args.range)
    header, rows, summary = sweep_rows(s, args.axis, lo, hi, args.steps)
    _emit(args.out, "sweep.csv", header, rows)
    keys = sorted(summary)
    if args.out is None:
        for k in keys:
            print(f"{k}={fmt(summary[k])}", file=sys.stderr)
    else:
        _emit(args.out, "sweep_summary.csv", keys, [[summary[k] for k in keys]])
    return EXIT_OK


RUN_HEADER = ("run", "idler_clicks", "retained", "discarded",
              "real_correct", "real_wrong", "real_double",
              "false_correct", "false_wrong", "false_double",
              "noise_correct", "noise_wrong", "noise_double",
              "real_wrong_nr", "real_correct_nr", "false_wrong_nr", "false_correct_nr",
              "e_offset", "eve_detected", "alice_channel")
SUMMARY_HEADER = ("runs", "shots", "seed") + SUMMARY_KEYS + ("covariance_real_wrong", "covariance_false_wrong")


def _mc(args, s: Scenario):
    if args.runs < 1 or args.shots < 1:
        raise UsageError("--runs and --shots must be positive")
    return simulate_ensemble(MCConfig(shots=args.shots, runs=args.runs, seed=args.seed), s)


def _mc_tables(summary):
    run_rows = []
    for r, v in zip(summary.runs, summary.verdicts):
        re, fe = r.estimate("real"), r.estimate("false")
        run_rows.append([r.run_index, r.idler_clicks, r.retained, r.discarded, *r.real, *r.false,
                         *r.noise, re.wrong_nr, re.correct_nr, fe.wrong_nr, fe.correct_nr,
                         r.e_offset, v.eve_detected, v.alice_channel])
    cfg, rep = summary.config, summary.conclusions
    cov = summary.covariance
    srow = [cfg.runs, cfg.shots, cfg.seed] + [getattr(rep, k) for k in SUMMARY_KEYS] + [
        cov["real_wrong"].C if "real_wrong" in cov else None,
        cov["false_wrong"].C if "false_wrong" in cov else None]
    return run_rows, srow


def _write_runs(out: Path | None, run_rows) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "mc_runs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_HEADER)
        for row in run_rows:
            w.writerow([fmt(v) for v in row])


def cmd_mc(args) -> int:
    s = _load(args.scenario)
    summary = _mc(args, s)
    run_rows, srow = _mc_tables(summary)
    _write_runs(args.out, run_rows)
    _emit(args.out, "mc_summary.csv", SUMMARY_HEADER, [srow])
    return EXIT_OK


def _p_sweep(name: str, steps: int):
    header, rows, _ = sweep_rows(_load(name), "p", 0.0, 1.0, steps)
    return header, rows


def _col(header, rows, name):
    i = header.index(name)
    return [r[i] for r in rows]


def cmd_figures(args) -> int:
    out: Path = args.out
    fig = args.figure
    if fig not in FIGURES:
        raise UsageError(f"unknown figure id {fig!r}; choose from {FIGURES}")
    if fig == "3":
        header, rows, _ = sweep_rows(_load("set1"), "theta", 0.0, math.pi / 4, args.steps)
        _emit(out, "fig3.csv", header, rows)
        _emit_series(out, "fig3_series.dat", {"theta": _col(header, rows, "theta"),
                                              "e_eve": _col(header, rows, "e_eve")})
    elif fig in ("4", "5"):
        cols = ("snr_real", "snr_false") if fig == "4" else ("e_threshold", "e_threshold_offset")
        series: dict[str, list] = {}
        for name, tag in (("set2", "qi"), ("set2_bb84", "bb84")):
            header, rows = _p_sweep(name, args.steps)
            _emit(out, f"fig{fig}_{tag}.csv", header, rows)
            series.setdefault("p", _col(header, rows, "p"))
            for c in cols:
                series[f"{c}_{tag}"] = _col(header, rows, c)
        _emit_series(out, f"fig{fig}_series.dat", series)
    elif fig == "6":
        s = _load("set3")
        alice, eve, noise = contributions(s)
        real, false = compose_channels(alice, eve, noise, IntrusionParams.from_scenario(s))
        n = args.shots
        series = {}
        for tag, ch in (("real", real), ("false", false)):
            for j, cat in ((1, "wrong"), (0, "correct")):
                params = SkellamParams(n * ch.as_tuple()[j], n * noise.as_tuple()[j])
                sd = math.sqrt(params.variance)
                x = np.arange(math.floor(params.mean - 5 * sd), math.ceil(params.mean + 5 * sd) + 1)
                series[f"{tag}_{cat}"] = (x / n, skellam_pmf(x, params))
        rows = [[k, float(xv), float(pv)] for k, (xs, ps) in series.items() for xv, pv in zip(xs, ps)]
        _emit(out, "fig6.csv", ("curve", "noise_reduced_expectation", "probability"), rows)
        # the Skellam construction is defined for wrong coincidences; the
        # correct-coincidence curves apply it unchanged
        buf = io.StringIO()
        buf.write("# correct curves reuse the wrong-coincidence Skellam construction\n\n")
        for k, (xs, ps) in series.items():
            buf.write(f"# noise_reduced_expectation {k}\n")
            buf.writelines(f"{fmt(a)} {fmt(b)}\n" for a, b in zip(xs, ps))
            buf.write("\n")
        out.mkdir(parents=True, exist_ok=True)
        (out / "fig6_series.dat").write_text(buf.getvalue())
    else:
        summary = _mc(args, _load("set3"))
        run_rows, srow = _mc_tables(summary)
        if fig == "7-data":
            _write_runs(out, run_rows)
            _emit(out, "mc_summary.csv", SUMMARY_HEADER, [srow])
        else:
            rows = []
            series = {}
            for key in ("real_wrong", "false_wrong", "real_correct", "false_correct"):
                dens, edges = summary.histogram(key, bins=args.bins)
                centres = 0.5 * (edges[:-1] + edges[1:])
                rows.extend([key, float(c), float(d)] for c, d in zip(centres, dens))
                series[key] = (centres, dens)
            _emit(out, "fig8.csv", ("sample", "bin_centre", "density"), rows)
            buf = io.StringIO()
            for k, (xs, ds) in series.items():
                buf.write(f"# bin_centre {k}\n")
                buf.writelines(f"{fmt(a)} {fmt(b)}\n" for a, b in zip(xs, ds))
                buf.write("\n")
            (out / "fig8_series.dat").write_text(buf.getvalue())
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with code 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qi-spoof", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scen(p, required=True):
        p.add_argument("--scenario", required=required,
                       help="scenario file path or shipped name (set1, set2, set2_bb84, set3)")
        p.add_argument("--out", type=Path, default=None, help="output directory (default: stdout)")

    p = sub.add_parser("probs", help="analytic triples and security metrics")
    scen(p)
    p.set_defaults(func=cmd_probs)

    p = sub.add_parser("sweep", help="metrics along one parameter axis")
    scen(p)
    p.add_argument("--axis", choices=AXES, required=True)
    p.add_argument("--range", required=True, help="LO:HI")
    p.add_argument("--steps", type=int, default=101)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mc", help="Monte-Carlo ensemble of range-finding runs")
    scen(p)
    p.add_argument("--runs", type=int, default=5000)
    p.add_argument("--shots", type=int, default=MC_DEFAULT_SHOTS)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("figures", help="data behind one figure")
    p.add_argument("--figure", required=True, help=f"one of {', '.join(FIGURES)}")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--runs", type=int, default=5000)
    p.add_argument("--shots", type=int, default=MC_DEFAULT_SHOTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
