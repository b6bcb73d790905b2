"""Command-line harness.

Exit codes: 0 on success, 2 on configuration/input errors, 3 when a required
Monte Carlo calibration entry is missing.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import CalibrationTable, calibrate, stat_spec
from .dataio import (
    parse_kv_file,
    read_dataset_csv,
    read_indices,
    read_matrix_csv,
    scenario_params,
    write_matrix_csv,
)
from .datagen import Scenario, sample_mixture
from .errors import MissingCalibrationError, SparsemixError
from .harness import (
    ESTIMATORS,
    _required_keys,
    _run_estimator,
    emit_csv,
    emit_svg,
    parse_experiment_config,
    preset_config,
    run_power_curve,
)
from .selection import selection_error
from .spectral import canonical_variance_threshold, sparse_eig_null_bound, top_eig_threshold

STAT_CHOICES = (
    "top-eig", "sparse-eig", "sparse-eig-plain", "diag-ratio", "canonical-max", "mdp",
    "kurtosis", "abs1", "skewness", "signed2", "coord-abs1", "coord-signed2", "coord-kurtosis",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsemix",
        description="Detection statistics, Monte Carlo calibration, support recovery, "
        "and power experiments for sparse two-component Gaussian mixtures. "
        "All indices in input/output files are 0-based.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="sample a mixture dataset from a scenario config")
    sim.add_argument("--config", required=True, help="flat key/value scenario file "
                     "(keys: nu, p, n, s, amplitude, sigma = identity|diagonal:<csv>|file:<csv>|deflated:<c>)")
    sim.add_argument("--seed", required=True, type=int)
    sim.add_argument("--out", required=True, help="output dataset CSV (one observation per row)")
    sim.add_argument("--labels", help="optional output CSV for the latent component labels")

    st = sub.add_parser("stat", help="compute one detection statistic on a dataset")
    st.add_argument("--stat", required=True, choices=STAT_CHOICES)
    st.add_argument("--data", required=True)
    st.add_argument("--sigma", help="known covariance CSV (p x p)")
    st.add_argument("--s", type=int, help="sparsity for the sparse statistics")
    st.add_argument("--json", action="store_true")
    st.add_argument("--header", action="store_true", help="skip one header line in the data CSV")

    sel = sub.add_parser("select", help="estimate the support of the mean difference")
    sel.add_argument("--estimator", required=True, choices=ESTIMATORS)
    sel.add_argument("--data", required=True)
    sel.add_argument("--sigma", help="known covariance CSV (spectral/canonical estimators)")
    sel.add_argument("--s", type=int, help="sparsity (direction-based estimators)")
    sel.add_argument("--alpha", type=float, default=0.05)
    sel.add_argument("--truth", help="true support file (one 0-based index per line)")
    sel.add_argument("--calib", help="calibration table CSV (coord-* estimators)")
    sel.add_argument("--strong-signal", action="store_true",
                     help="sym estimator only: maximize the raw absolute-moment sum "
                     "(appropriate when the separation is strong)")
    sel.add_argument("--header", action="store_true")

    cal = sub.add_parser("calibrate", help="estimate a Monte Carlo null critical value")
    cal.add_argument("--stat", required=True, choices=STAT_CHOICES)
    cal.add_argument("--n", required=True, type=int)
    cal.add_argument("--p", required=True, type=int)
    cal.add_argument("--s", type=int, default=0)
    cal.add_argument("--alpha", required=True, type=float)
    cal.add_argument("--reps", required=True, type=int)
    cal.add_argument("--seed", required=True, type=int)
    cal.add_argument("--out", required=True, help="calibration table CSV (appended to if present)")

    pw = sub.add_parser("power", help="run a power-curve experiment")
    pw.add_argument("--config", required=True, help="flat key/value experiment file "
                    "(keys: p, n, nu, s, amplitudes, stats, reps, alpha, seed[, sigma])")
    pw.add_argument("--calib", required=True, help="calibration table CSV")
    pw.add_argument("--out-csv", required=True)
    pw.add_argument("--out-svg", required=True)

    pre = sub.add_parser("preset", help="calibrate and run a named experiment preset")
    pre.add_argument("name", choices=("paper-fig1", "paper-fig2", "small"))
    pre.add_argument("--seed", required=True, type=int)
    pre.add_argument("--reps", type=int, help="override the preset's replication count")
    pre.add_argument("--calib-reps", type=int, default=2000)
    pre.add_argument("--out-dir", default=".")
    return parser


def cmd_simulate(args) -> int:
    theta, n = scenario_params(parse_kv_file(args.config))
    sc = Scenario(params=theta, n=n, labels_wanted=args.labels is not None)
    d, labels = sample_mixture(sc, seed=args.seed)
    write_matrix_csv(args.out, d.data)
    if args.labels is not None:
        write_matrix_csv(args.labels, np.asarray(labels, dtype=float)[:, None])
    print(f"wrote {n} observations of dimension {theta.p} to {args.out}")
    return 0


def _load_stat_inputs(args):
    d = read_dataset_csv(args.data, skip_header=args.header)
    sigma = read_matrix_csv(args.sigma) if args.sigma else None
    return d, sigma


def _analytic_threshold(stat_id: str, n: int, p: int, s: int):
    if stat_id == "top-eig":
        return top_eig_threshold(n, p)
    if stat_id == "canonical-max":
        return canonical_variance_threshold(n, p)
    if stat_id in ("sparse-eig", "sparse-eig-plain", "mdp") and s:
        return sparse_eig_null_bound(n, p, s)
    return None


def cmd_stat(args) -> int:
    d, sigma = _load_stat_inputs(args)
    spec = stat_spec(args.stat)
    if spec.needs_sigma and sigma is None:
        raise SparsemixError(f"statistic {args.stat!r} needs --sigma")
    if spec.needs_s and not args.s:
        raise SparsemixError(f"statistic {args.stat!r} needs --s")
    from .sparse_search import DEFAULT_CONFIG

    stat = spec.compute(d, sigma, args.s or 0, DEFAULT_CONFIG)
    support = (
        [int(j) for j in np.flatnonzero(stat.direction)] if stat.direction is not None else None
    )
    threshold = _analytic_threshold(args.stat, d.n, d.p, args.s or 0)
    if args.json:
        print(json.dumps({
            "stat_id": stat.stat_id,
            "value": stat.value,
            "rejection_side": stat.rejection_side,
            "direction_support": support,
            "analytic_threshold": threshold,
        }))
    else:
        print(f"stat: {stat.stat_id}")
        print(f"value: {stat.value!r}")
        print(f"rejection side: {stat.rejection_side}")
        if support is not None:
            print(f"direction support: {support}")
        if threshold is not None:
            print(f"analytic threshold: {threshold!r}")
    return 0


def cmd_select(args) -> int:
    d = read_dataset_csv(args.data, skip_header=args.header)
    sigma = read_matrix_csv(args.sigma) if args.sigma else None
    if args.estimator in ("spectral", "canonical") and sigma is None:
        raise SparsemixError(f"estimator {args.estimator!r} needs --sigma")
    if args.estimator in ("spectral", "sym", "asym") and not args.s:
        raise SparsemixError(f"estimator {args.estimator!r} needs --s")
    calib = CalibrationTable.from_csv(args.calib) if args.calib else None
    from .selection import select_sym_moment
    from .sparse_search import DEFAULT_CONFIG

    if args.estimator == "sym" and args.strong_signal:
        est = select_sym_moment(d, args.s, DEFAULT_CONFIG, strong_signal=True)
    else:
        est = _run_estimator(args.estimator, d, sigma, args.s or 0, args.alpha, calib, DEFAULT_CONFIG)
    out = {
        "estimator": args.estimator,
        "stat_id": est.stat_id,
        "indices": list(est.indices),
        "direction": None if est.direction is None else [float(v) for v in est.direction],
    }
    if args.truth:
        out["selection_error"] = selection_error(est, read_indices(args.truth))
    print(json.dumps(out))
    return 0


def cmd_calibrate(args) -> int:
    entry = calibrate(args.stat, args.n, args.p, args.s, args.alpha, args.reps, args.seed)
    path = Path(args.out)
    table = CalibrationTable.from_csv(path) if path.exists() else CalibrationTable()
    table.add(entry)
    table.to_csv(path)
    print(f"{entry.stat_id}: critical value {entry.critical!r} "
          f"(n={entry.n}, p={entry.p}, s={entry.s}, level={entry.level}, side={entry.side})")
    return 0


def cmd_power(args) -> int:
    cfg = parse_experiment_config(args.config)
    calib = CalibrationTable.from_csv(args.calib)
    table = run_power_curve(cfg, calib)
    emit_csv(table, args.out_csv)
    emit_svg(table, args.out_svg)
    print(f"wrote {args.out_csv} and {args.out_svg}")
    return 0


def cmd_preset(args) -> int:
    cfg = preset_config(args.name, master_seed=args.seed, reps=args.reps)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = CalibrationTable()
    for stat_id, n, p, s, level in _required_keys(cfg):
        entry = calibrate(stat_id, n, p, s, level, args.calib_reps, args.seed)
        table.add(entry)
        print(f"calibrated {stat_id} (s={s}): critical {entry.critical!r}")
    calib_path = out_dir / f"{args.name}-calib.csv"
    table.to_csv(calib_path)
    power = run_power_curve(cfg, table)
    csv_path = out_dir / f"{args.name}-power.csv"
    svg_path = out_dir / f"{args.name}-power.svg"
    emit_csv(power, csv_path)
    emit_svg(power, svg_path)
    print(f"wrote {calib_path}, {csv_path}, {svg_path}")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "stat": cmd_stat,
    "select": cmd_select,
    "calibrate": cmd_calibrate,
    "power": cmd_power,
    "preset": cmd_preset,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except MissingCalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SparsemixError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
