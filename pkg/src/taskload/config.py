"""Configuration schema, published defaults, and provenance hashing.

One structured JSON file drives every command. Unknown keys are
rejected with their full path so typos never silently fall back to a
default. Defaults carry the published per-axis generator and dynamics
parameters, the named tolerance standards, and the reference scenario
run counts; the one deliberate departure is that scenario dynamics
center the reversion mean on the nominal trajectory (the fitted means
are generator offsets, and corridor bounds are symmetric about the
path), while the fitted values remain available via ou.OU_FTE_FIT.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any

from .distributions import JOHNSON_FTE, JohnsonSuParams
from .flow import (TOLERANCE_STANDARDS, CrossingGeometry, FlowSpec,
                   ToleranceBounds)
from .harness import ScenarioConfig
from .ou import OU_FTE_CENTERED, OuParams

SCHEMA_VERSION = 1
TOOL_NAME = "corridor-taskload"
TOOL_VERSION = "0.1.0"

AXES = ("lateral", "vertical", "longitudinal")

#: Reference Monte Carlo run counts by scenario and intensity/angle.
MONOLANE_RUNS = {2.5: 91658, 5.0: 66680, 7.5: 58366, 10.0: 54147, 60.0: 41702}
MULTILANE_RUNS = {2.5: 229158, 5.0: 16670, 7.5: 14592, 10.0: 13537, 60.0: 10426}
CROSSING_RUNS = {30.0: 5412, 90.0: 10463, 120.0: 3826}
DEFAULT_RUNS = 10000


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _require_keys(obj: dict, allowed: set[str], path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} at {path or '<root>'}")


def _get_num(obj: dict, key: str, default, path: str):
    val = obj.get(key, default)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key} must be a number, got {val!r}")
    if not math.isfinite(val):
        raise ConfigError(f"{path}.{key} must be finite")
    return float(val)


@dataclass
class ConfigFile:
    """Resolved configuration with every default applied."""

    distributions: dict[str, JohnsonSuParams]
    ou: dict[str, OuParams]
    flows: list[FlowSpec]
    geometry: CrossingGeometry
    kind: str = "single_lane"
    horizon_min: float = 120.0
    dt_min: float = 0.1
    obs_dt_min: float = 1.0
    n_runs: int | None = None
    seed: int = 0
    stream_id: int = 0
    count_full_horizon: bool = False
    oracle_paths: int = 200000
    n_max: int = 32
    output_format: str = "csv"

    def resolved_runs(self) -> int:
        """Config value if given, else the reference table for the
        scenario, else a generic default."""
        if self.n_runs is not None:
            return self.n_runs
        if self.kind == "single_lane":
            return MONOLANE_RUNS.get(self.flows[0].intensity_per_hour,
                                     DEFAULT_RUNS)
        if self.kind == "multilane":
            return MULTILANE_RUNS.get(self.flows[0].intensity_per_hour,
                                      DEFAULT_RUNS)
        return CROSSING_RUNS.get(self.geometry.alpha_deg, DEFAULT_RUNS)

    def scenario(self, n_runs: int | None = None, dt: float | None = None,
                 seed: int | None = None) -> ScenarioConfig:
        return ScenarioConfig(
            kind=self.kind,
            flows=list(self.flows),
            ou=dict(self.ou),
            geometry=self.geometry if self.kind == "crossing" else None,
            horizon=self.horizon_min,
            dt=dt if dt is not None else self.dt_min,
            obs_dt=self.obs_dt_min,
            n_runs=n_runs if n_runs is not None else self.resolved_runs(),
            seed=seed if seed is not None else self.seed,
            stream_id=self.stream_id,
            count_full_horizon=self.count_full_horizon,
        )

    def to_canonical_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "distributions": {
                ax: {"gamma": p.gamma, "delta": p.delta,
                     "scale_lambda": p.scale_lambda, "xi": p.xi}
                for ax, p in self.distributions.items()},
            "ou": {ax: {"kappa": p.kappa, "mu": p.mu, "sigma": p.sigma}
                   for ax, p in self.ou.items()},
            "flows": [{
                "intensity_per_hour": f.intensity_per_hour,
                "t_cross_min": f.t_cross_min,
                "speed_kt": f.speed_kt,
                "tolerance": {"lateral_nm": f.tolerance.lateral_nm,
                              "vertical_ft": f.tolerance.vertical_ft,
                              "longitudinal_nm": f.tolerance.longitudinal_nm},
                "lateral_extent_nm": f.lateral_extent_nm,
            } for f in self.flows],
            "geometry": {"alpha_deg": self.geometry.alpha_deg,
                         "e1_nm": self.geometry.e1_nm,
                         "e2_nm": self.geometry.e2_nm,
                         "d_min_nm": self.geometry.d_min_nm,
                         "speed_kt": self.geometry.speed_kt},
            "mc": {"kind": self.kind, "horizon_min": self.horizon_min,
                   "dt_min": self.dt_min, "obs_dt_min": self.obs_dt_min,
                   "n_runs": self.n_runs, "seed": self.seed,
                   "stream_id": self.stream_id,
                   "count_full_horizon": self.count_full_horizon},
            "analytic": {"oracle_paths": self.oracle_paths,
                         "n_max": self.n_max},
            "output": {"format": self.output_format},
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_canonical_dict(), sort_keys=True,
                          separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _parse_axis_table(obj: dict, axis_keys: tuple[str, ...], fields: tuple[str, ...],
                      builder, defaults: dict, path: str) -> dict:
    _require_keys(obj, set(axis_keys), path)
    out = dict(defaults)
    for axis, sub in obj.items():
        if not isinstance(sub, dict):
            raise ConfigError(f"{path}.{axis} must be an object")
        _require_keys(sub, set(fields), f"{path}.{axis}")
        base = defaults[axis]
        kwargs = {f: _get_num(sub, f, getattr(base, f), f"{path}.{axis}")
                  for f in fields}
        try:
            out[axis] = builder(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"{path}.{axis}: {exc}") from exc
    return out


def _parse_tolerance(obj, path: str) -> ToleranceBounds:
    if isinstance(obj, str):
        if obj not in TOLERANCE_STANDARDS:
            raise ConfigError(f"{path}: unknown standard {obj!r}; choose from "
                              f"{sorted(TOLERANCE_STANDARDS)}")
        return TOLERANCE_STANDARDS[obj].bounds
    if not isinstance(obj, dict):
        raise ConfigError(f"{path} must be a standard name or bounds object")
    _require_keys(obj, {"lateral_nm", "vertical_ft", "longitudinal_nm"}, path)
    try:
        return ToleranceBounds(
            lateral_nm=_get_num(obj, "lateral_nm", 0.1, path),
            vertical_ft=_get_num(obj, "vertical_ft", 20.0, path),
            longitudinal_nm=_get_num(obj, "longitudinal_nm", 0.5, path))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_flow(obj: dict, path: str) -> FlowSpec:
    allowed = {"intensity_per_hour", "t_cross_min", "speed_kt", "standard",
               "tolerance", "lateral_extent_nm"}
    _require_keys(obj, allowed, path)
    if "standard" in obj and "tolerance" in obj:
        raise ConfigError(f"{path}: give either 'standard' or 'tolerance'")
    if "standard" in obj:
        tol = _parse_tolerance(obj["standard"], f"{path}.standard")
    elif "tolerance" in obj:
        tol = _parse_tolerance(obj["tolerance"], f"{path}.tolerance")
    else:
        tol = TOLERANCE_STANDARDS["stringent"].bounds
    try:
        return FlowSpec(
            intensity_per_hour=_get_num(obj, "intensity_per_hour", 2.5, path),
            t_cross_min=_get_num(obj, "t_cross_min", 20.0, path),
            speed_kt=_get_num(obj, "speed_kt", 480.0, path),
            tolerance=tol,
            lateral_extent_nm=_get_num(obj, "lateral_extent_nm", 1.0, path))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def default_config() -> ConfigFile:
    return ConfigFile(
        distributions=dict(JOHNSON_FTE),
        ou=dict(OU_FTE_CENTERED),
        flows=[FlowSpec(intensity_per_hour=2.5)],
        geometry=CrossingGeometry(alpha_deg=90.0),
    )


def parse_config(data: dict) -> ConfigFile:
    """Build a resolved ConfigFile from a parsed JSON object."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    allowed = {"schema_version", "distributions", "ou", "flows", "geometry",
               "mc", "analytic", "output"}
    _require_keys(data, allowed, "")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")

    cfg = default_config()
    if "distributions" in data:
        cfg.distributions = _parse_axis_table(
            data["distributions"], AXES,
            ("gamma", "delta", "scale_lambda", "xi"),
            JohnsonSuParams, dict(JOHNSON_FTE), "distributions")
    if "ou" in data:
        cfg.ou = _parse_axis_table(
            data["ou"], AXES, ("kappa", "mu", "sigma"),
            OuParams, dict(OU_FTE_CENTERED), "ou")
    if "flows" in data:
        flows = data["flows"]
        if not isinstance(flows, list) or not flows:
            raise ConfigError("flows must be a non-empty list")
        cfg.flows = [_parse_flow(f, f"flows[{i}]") for i, f in enumerate(flows)]
    if "geometry" in data:
        g = data["geometry"]
        _require_keys(g, {"alpha_deg", "e1_nm", "e2_nm", "d_min_nm",
                          "speed_kt"}, "geometry")
        try:
            cfg.geometry = CrossingGeometry(
                alpha_deg=_get_num(g, "alpha_deg", 90.0, "geometry"),
                e1_nm=_get_num(g, "e1_nm", 1.0, "geometry"),
                e2_nm=_get_num(g, "e2_nm", 1.0, "geometry"),
                d_min_nm=_get_num(g, "d_min_nm", 5.0, "geometry"),
                speed_kt=_get_num(g, "speed_kt", 480.0, "geometry"))
        except ValueError as exc:
            raise ConfigError(f"geometry: {exc}") from exc
    if "mc" in data:
        mc = data["mc"]
        _require_keys(mc, {"kind", "horizon_min", "dt_min", "obs_dt_min",
                           "n_runs", "seed", "stream_id",
                           "count_full_horizon"}, "mc")
        kind = mc.get("kind", cfg.kind)
        if kind not in ("single_lane", "multilane", "crossing"):
            raise ConfigError(f"mc.kind: unknown scenario {kind!r}")
        cfg.kind = kind
        cfg.horizon_min = _get_num(mc, "horizon_min", cfg.horizon_min, "mc")
        cfg.dt_min = _get_num(mc, "dt_min", cfg.dt_min, "mc")
        cfg.obs_dt_min = _get_num(mc, "obs_dt_min", cfg.obs_dt_min, "mc")
        if cfg.horizon_min <= 0 or cfg.dt_min <= 0 or cfg.obs_dt_min <= 0:
            raise ConfigError("mc horizon/dt/obs_dt must be > 0")
        n_runs = mc.get("n_runs", None)
        if n_runs is not None:
            if not isinstance(n_runs, int) or n_runs < 1:
                raise ConfigError("mc.n_runs must be a positive integer")
        cfg.n_runs = n_runs
        seed = mc.get("seed", 0)
        stream = mc.get("stream_id", 0)
        if not isinstance(seed, int) or not isinstance(stream, int):
            raise ConfigError("mc.seed and mc.stream_id must be integers")
        cfg.seed = seed
        cfg.stream_id = stream
        cfh = mc.get("count_full_horizon", False)
        if not isinstance(cfh, bool):
            raise ConfigError("mc.count_full_horizon must be a boolean")
        cfg.count_full_horizon = cfh
    if "analytic" in data:
        an = data["analytic"]
        _require_keys(an, {"oracle_paths", "n_max"}, "analytic")
        paths = an.get("oracle_paths", cfg.oracle_paths)
        nmax = an.get("n_max", cfg.n_max)
        if not isinstance(paths, int) or paths < 1:
            raise ConfigError("analytic.oracle_paths must be a positive integer")
        if not isinstance(nmax, int) or nmax < 1:
            raise ConfigError("analytic.n_max must be a positive integer")
        cfg.oracle_paths = paths
        cfg.n_max = nmax
    if "output" in data:
        out = data["output"]
        _require_keys(out, {"format"}, "output")
        fmt = out.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"output.format must be csv or json, got {fmt!r}")
        cfg.output_format = fmt
    return cfg


def load_config(path: str) -> ConfigFile:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data)
