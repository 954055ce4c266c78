"""Command-line front end.

Commands: generate, calibrate, analytic, simulate, compare, safe-zone.
All tabular output is CSV with fixed headers (or JSON via --format),
prefixed by a provenance comment block (tool version, seed, config
hash) sufficient to reproduce the numeric payload byte for byte.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical
failure, 5 comparison failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import calibration
from .config import (SCHEMA_VERSION, TOOL_NAME, TOOL_VERSION, ConfigError,
                     ConfigFile, default_config, load_config)
from .distributions import johnson_sample
from .flow import solve_safe_zone
from .harness import (McEstimate, compare as compare_pmfs, run_crossing,
                      run_multilane, run_single_lane)
from .pipeline import (analytic_crossing, analytic_multilane,
                       analytic_single_lane)
from .pmf import TaskloadPmf
from .rng import RandomSource

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_COMPARE = 5

AXIS_COLUMNS = {"lateral": "lat_nm", "vertical": "vert_ft",
                "longitudinal": "long_nm"}


class DataError(Exception):
    pass


def _atomic_write(path: str, payload: str) -> None:
    """Write-then-rename so readers never see a torn file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _provenance(cfg: ConfigFile, seed: int, extra: dict | None = None) -> dict:
    prov = {
        "schema_version": SCHEMA_VERSION,
        "tool": f"{TOOL_NAME} {TOOL_VERSION}",
        "config_sha256": cfg.sha256(),
        "seed": seed,
        "stream_id": cfg.stream_id,
    }
    if extra:
        prov.update(extra)
    return prov


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _csv_payload(prov: dict, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    for key, val in prov.items():
        buf.write(f"# {key}={val}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _json_payload(prov: dict, body: dict) -> str:
    return json.dumps({"provenance": prov, **body}, indent=2,
                      sort_keys=True) + "\n"


def _write_table(path: str, fmt: str, prov: dict, header: list[str],
                 rows: list[list]) -> None:
    if fmt == "json":
        body = {"columns": header,
                "rows": [[float(v) if isinstance(v, (int, float)) else v
                          for v in row] for row in rows]}
        _atomic_write(path, _json_payload(prov, body))
    else:
        _atomic_write(path, _csv_payload(prov, header, rows))


def _pmf_rows(pmf: TaskloadPmf) -> list[list]:
    return [[int(n), float(p)] for n, p in enumerate(pmf.probs)] + \
        [["truncation", float(pmf.truncation_mass)]]


def _write_resolved_config(cfg: ConfigFile, out_dir: str) -> None:
    _atomic_write(os.path.join(out_dir, "config_resolved.json"),
                  json.dumps(cfg.to_canonical_dict(), indent=2,
                             sort_keys=True) + "\n")


# --- commands -------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = _load(args)
    seed = args.seed if args.seed is not None else cfg.seed
    axis = args.axis
    if axis not in cfg.distributions:
        raise ConfigError(f"unknown axis {axis!r}")
    col = AXIS_COLUMNS[axis]
    prov = _provenance(cfg, seed, {"command": "generate", "axis": axis,
                                   "n": args.n})
    if args.n == 0:
        rows: list[list] = []
    else:
        src = RandomSource(seed, cfg.stream_id)
        samples = johnson_sample(cfg.distributions[axis], src, args.n)
        rows = [[float(v)] for v in samples]
    _write_table(args.out, args.format, prov, [col], rows)
    return EXIT_OK


def _read_series_csv(path: str) -> dict[str, np.ndarray]:
    """Read axis columns from a headered CSV; diagnostics carry row/col."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{path}: empty file") from None
    known = set(AXIS_COLUMNS.values())
    columns = {name.strip(): [] for name in header}
    if not known & set(columns):
        raise DataError(f"{path}: no axis column among {sorted(known)} "
                        f"in header {header}")
    for i, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} fields, "
                            f"expected {len(header)}")
        for name, val in zip(columns, row):
            try:
                columns[name].append(float(val))
            except ValueError:
                raise DataError(f"{path}: row {i}, column {name!r}: "
                                f"not a number: {val!r}") from None
    by_axis = {}
    for axis, col in AXIS_COLUMNS.items():
        if col in columns and columns[col]:
            by_axis[axis] = np.asarray(columns[col])
    if not by_axis:
        raise DataError(f"{path}: axis columns present but empty")
    return by_axis


def _report_dict(rep: calibration.CalibrationReport) -> dict:
    params = rep.params
    return {
        "method": rep.method,
        "kappa_per_min": params.kappa if params else None,
        "mu": params.mu if params else None,
        "sigma": params.sigma if params else None,
        "a_hat": rep.a_hat,
        "b_hat": rep.b_hat,
        "sigma_eps_hat": rep.sigma_eps_hat,
        "loglik": rep.loglik if np.isfinite(rep.loglik) else None,
        "stationary_sd": (rep.stationary_sd
                          if np.isfinite(rep.stationary_sd) else None),
        "n_transitions": rep.n_transitions,
        "dt_min": rep.dt,
        "flags": rep.flags,
    }


def cmd_calibrate(args) -> int:
    cfg = _load(args)
    series = _read_series_csv(args.input)
    methods = {"ls": ["least_squares"], "mle": ["mle"],
               "both": ["least_squares", "mle"]}[args.method]
    body: dict = {"series": args.input, "reports": {}}
    for axis, values in series.items():
        ts = calibration.TimeSeries(values, dt=args.dt or 1.0)
        body["reports"][axis] = {}
        for method in methods:
            fit = (calibration.fit_least_squares if method == "least_squares"
                   else calibration.fit_mle)
            try:
                rep = fit(ts)
            except calibration.DegenerateDataError as exc:
                body["reports"][axis][method] = {"error": str(exc)}
                continue
            body["reports"][axis][method] = _report_dict(rep)
        ls_rep = body["reports"][axis].get("least_squares")
        ml_rep = body["reports"][axis].get("mle")
        if (ls_rep and ml_rep and ls_rep.get("kappa_per_min")
                and ml_rep.get("kappa_per_min")):
            body["reports"][axis]["methods_coincide"] = {
                "kappa_rel_gap": abs(ml_rep["kappa_per_min"]
                                     - ls_rep["kappa_per_min"])
                / abs(ls_rep["kappa_per_min"]),
                "mu_rel_gap": (abs(ml_rep["mu"] - ls_rep["mu"])
                               / abs(ls_rep["mu"]) if ls_rep["mu"] else None),
            }
        try:
            mom = calibration.sample_moments(ts)
            body["reports"][axis]["sample_moments"] = {
                "mu1": mom.mu1, "mu2": mom.mu2,
                "beta1": mom.beta1, "beta2": mom.beta2}
        except (calibration.DegenerateDataError, ValueError) as exc:
            body["reports"][axis]["sample_moments"] = {"error": str(exc)}
    prov = _provenance(cfg, cfg.seed, {"command": "calibrate"})
    _atomic_write(args.out, _json_payload(prov, body))
    return EXIT_OK


def cmd_analytic(args) -> int:
    cfg = _load(args)
    seed = args.seed if args.seed is not None else cfg.seed
    src = RandomSource(seed, cfg.stream_id)
    fmt = args.format
    out_dir = args.out
    prov = _provenance(cfg, seed, {"command": "analytic", "kind": cfg.kind})
    densities = {}
    if cfg.kind == "single_lane":
        tables = analytic_single_lane(cfg.flows[0], cfg.ou, cfg.horizon_min,
                                      cfg.obs_dt_min, cfg.oracle_paths, src,
                                      densities_out=densities)
    elif cfg.kind == "multilane":
        tables = analytic_multilane(cfg.flows, cfg.ou, cfg.horizon_min,
                                    cfg.obs_dt_min, cfg.oracle_paths, src)
    else:
        tables = analytic_crossing(cfg.geometry, cfg.flows, cfg.ou,
                                   cfg.horizon_min, cfg.obs_dt_min,
                                   cfg.oracle_paths, src)
    os.makedirs(out_dir, exist_ok=True)
    _write_resolved_config(cfg, out_dir)
    ext = "json" if fmt == "json" else "csv"
    for name, pmf in tables.items():
        path = os.path.join(out_dir, f"analytic_{name}.{ext}")
        _write_table(path, fmt, prov, ["n", "prob"], _pmf_rows(pmf))
    for axis, grid in densities.items():
        path = os.path.join(out_dir, f"density_{axis}.{ext}")
        rows = [[float(t), float(v)]
                for t, v in zip(grid.times, grid.values)]
        _write_table(path, fmt, prov, ["t_min", "value"], rows)
    return EXIT_OK


def _estimate_tables(est: McEstimate) -> dict[str, tuple[list[str], list[list]]]:
    out = {}
    for name, emp in est.components.items():
        lo, hi = emp.ci
        floor = emp.resolution_floor
        rows = [[int(n), float(p), float(l), float(h),
                 int(p < floor)]
                for n, (p, l, h) in enumerate(zip(emp.probs, lo, hi))]
        out[name] = (["n", "prob", "ci_lo", "ci_hi", "below_floor"], rows)
    return out


def cmd_simulate(args) -> int:
    cfg = _load(args)
    seed = args.seed if args.seed is not None else cfg.seed
    scenario = cfg.scenario(n_runs=args.runs, dt=args.dt, seed=seed)
    runner = {"single_lane": run_single_lane, "multilane": run_multilane,
              "crossing": run_crossing}[scenario.kind]
    est = runner(scenario)
    prov = _provenance(cfg, seed, {
        "command": "simulate", "kind": scenario.kind,
        "n_runs": scenario.n_runs, "dt_min": scenario.dt,
        "n_aircraft": est.n_aircraft})
    os.makedirs(args.out, exist_ok=True)
    _write_resolved_config(cfg, args.out)
    for name, (header, rows) in _estimate_tables(est).items():
        ext = "json" if args.format == "json" else "csv"
        path = os.path.join(args.out, f"mc_{name}.{ext}")
        _write_table(path, args.format, prov, header, rows)
    return EXIT_OK


def _read_pmf_table(path: str) -> tuple[np.ndarray, float, int | None]:
    """(probs, truncation, n_runs if recorded) from a written table."""
    probs = []
    trunc = 0.0
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if path.endswith(".json"):
        payload = json.loads("\n".join(lines))
        rows = payload["rows"]
    else:
        body = [ln for ln in lines if ln and not ln.startswith("#")]
        rows = list(csv.reader(body))[1:]
    for row in rows:
        if row[0] == "truncation":
            trunc = float(row[1])
        else:
            probs.append(float(row[1]))
    if not probs:
        raise DataError(f"{path}: no PMF rows")
    return np.asarray(probs), trunc, None


def cmd_compare(args) -> int:
    from .harness import EmpiricalPmf
    a_probs, a_trunc, _ = _read_pmf_table(args.analytic)
    m_probs, _, _ = _read_pmf_table(args.mc)
    analytic = TaskloadPmf(a_probs, a_trunc)
    n_runs = args.runs or 10000
    counts = np.rint(m_probs * n_runs).astype(np.int64)
    mc = EmpiricalPmf(counts, int(counts.sum()), 0)
    report = compare_pmfs(analytic, mc, tv_threshold=args.tv)
    body = {
        "tv_distance": report.tv,
        "threshold": report.threshold,
        "passed": report.passed,
        "max_abs_z": float(np.max(np.abs(report.z_scores))),
    }
    prov = {"schema_version": SCHEMA_VERSION,
            "tool": f"{TOOL_NAME} {TOOL_VERSION}",
            "command": "compare",
            "analytic": os.path.basename(args.analytic),
            "mc": os.path.basename(args.mc)}
    payload = _json_payload(prov, body)
    if args.out:
        _atomic_write(args.out, payload)
    else:
        sys.stdout.write(payload)
    return EXIT_OK if report.passed else EXIT_COMPARE


def cmd_safe_zone(args) -> int:
    cfg = _load(args)
    geom = cfg.geometry
    if args.alpha is not None:
        from dataclasses import replace
        geom = replace(geom, alpha_deg=args.alpha)
    solved = solve_safe_zone(geom)
    prov = _provenance(cfg, cfg.seed, {"command": "safe-zone"})
    header = ["alpha_deg", "e1_nm", "e2_nm", "d_min_nm", "x1_nm", "x2_nm",
              "t_safe_min"]
    rows = [[float(solved.alpha_deg), float(solved.e1_nm), float(solved.e2_nm),
             float(solved.d_min_nm), float(solved.x1_nm), float(solved.x2_nm),
             float(solved.t_safe_min)]]
    if args.out:
        _write_table(args.out, args.format, prov, header, rows)
    else:
        sys.stdout.write(_csv_payload(prov, header, rows))
    return EXIT_OK


# --- wiring ----------------------------------------------------------------

def _load(args) -> ConfigFile:
    if getattr(args, "config", None):
        return load_config(args.config)
    return default_config()


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON configuration file")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the config seed")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taskload",
        description="Controller-taskload analytics and Monte Carlo "
                    "simulation for RNP flow corridors")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("generate", help="write synthetic FTE samples")
    _add_common(p)
    p.add_argument("--axis", choices=("lateral", "vertical", "longitudinal"),
                   required=True)
    p.add_argument("-n", type=int, required=True, help="sample count")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = subs.add_parser("calibrate", help="fit dynamics to a deviation series")
    _add_common(p)
    p.add_argument("--in", dest="input", required=True, help="input CSV")
    p.add_argument("--method", choices=("ls", "mle", "both"), default="both")
    p.add_argument("--dt", type=float, default=None,
                   help="sampling step in minutes (default 1)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = subs.add_parser("analytic", help="analytic taskload PMF tables")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_analytic)

    p = subs.add_parser("simulate", help="Monte Carlo taskload estimate")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("compare", help="TV comparison of two PMF tables")
    p.add_argument("--analytic", required=True)
    p.add_argument("--mc", required=True)
    p.add_argument("--tv", type=float, default=0.02)
    p.add_argument("--runs", type=int, default=None,
                   help="MC run count behind the estimate")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = subs.add_parser("safe-zone", help="solve crossing safe-zone bounds")
    _add_common(p)
    p.add_argument("--alpha", type=float, default=None,
                   help="crossing angle override (degrees)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_safe_zone)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
