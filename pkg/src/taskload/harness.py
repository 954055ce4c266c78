"""Monte Carlo estimation of corridor taskload PMFs.

A run is one horizon-long realization of a scenario. Arrivals are
seeded one residency before the window opens so the sector starts in
occupancy steady state. Each aircraft's three deviation axes evolve
independently through exact mean-reverting transitions; the controller
observes deviations at a fixed surveillance cadence (obs_dt, 1 minute
by default), and every observation beyond an axis bound counts one
intervention and returns that axis to the nominal trajectory. The
simulation substep dt refines the path between observations; transitions
are exact, so observed statistics are invariant to dt (the acceptance
suite checks this by halving it).

Runs draw from substreams keyed by (seed, stream) and run index, so
estimates from disjoint run ranges merge by count addition into exactly
the estimate of the combined run range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flow import CrossingGeometry, FlowSpec, solve_safe_zone
from .ou import OU_FTE_CENTERED, OuParams, transition_coeffs
from .pmf import TaskloadPmf, wilson_interval
from .rng import RandomSource

AXES = ("lateral", "vertical", "longitudinal")

SCENARIO_KINDS = ("single_lane", "multilane", "crossing")


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce one Monte Carlo experiment."""

    kind: str
    flows: list[FlowSpec]
    ou: dict[str, OuParams] = field(
        default_factory=lambda: dict(OU_FTE_CENTERED))
    geometry: CrossingGeometry | None = None
    horizon: float = 120.0
    dt: float = 0.1
    obs_dt: float = 1.0
    n_runs: int = 1000
    seed: int = 0
    stream_id: int = 0
    run_offset: int = 0
    count_full_horizon: bool = False
    axes: tuple[str, ...] = AXES

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if not self.flows:
            raise ValueError("at least one flow required")
        if self.kind == "single_lane" and len(self.flows) != 1:
            raise ValueError("single_lane takes exactly one flow")
        if self.kind == "crossing":
            if len(self.flows) != 2:
                raise ValueError("crossing takes exactly two flows")
            if self.geometry is None:
                raise ValueError("crossing requires geometry")
        if self.horizon <= 0.0 or self.dt <= 0.0 or self.obs_dt <= 0.0:
            raise ValueError("horizon, dt, obs_dt must be > 0")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        for axis in self.axes:
            if axis not in self.ou:
                raise ValueError(f"missing OU parameters for axis {axis!r}")

    @property
    def n_substeps(self) -> int:
        return max(1, int(round(self.obs_dt / self.dt)))


@dataclass
class EmpiricalPmf:
    """Per-run count frequencies with binomial CIs and a resolution floor."""

    counts: np.ndarray            # counts[k] = number of runs with total k
    n_runs: int
    n_observations: int           # aircraft-axis observations backing it
    horizon: float | None = None

    def __post_init__(self):
        self.counts = np.atleast_1d(np.asarray(self.counts, dtype=np.int64))
        if self.counts.sum() != self.n_runs:
            raise ValueError("counts must sum to n_runs")

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.n_runs

    @property
    def ci(self) -> tuple[np.ndarray, np.ndarray]:
        return wilson_interval(self.counts, self.n_runs)

    @property
    def resolution_floor(self) -> float:
        base = self.n_observations if self.n_observations > 0 else self.n_runs
        return 1.0 / base

    @property
    def below_floor(self) -> np.ndarray:
        return self.probs < self.resolution_floor

    def prob_geq(self, n: int) -> tuple[float, bool]:
        """(P[N >= n], below-floor flag). Never report sub-floor tail
        probabilities as point values."""
        p = float(self.counts[n:].sum() / self.n_runs)
        return p, p < self.resolution_floor

    def to_pmf(self) -> TaskloadPmf:
        return TaskloadPmf(self.probs, 0.0, self.horizon)

    def merge(self, other: "EmpiricalPmf") -> "EmpiricalPmf":
        size = max(self.counts.size, other.counts.size)
        counts = np.zeros(size, dtype=np.int64)
        counts[:self.counts.size] += self.counts
        counts[:other.counts.size] += other.counts
        return EmpiricalPmf(counts, self.n_runs + other.n_runs,
                            self.n_observations + other.n_observations,
                            self.horizon)


@dataclass
class McEstimate:
    """Scenario estimate: one EmpiricalPmf per reported component."""

    components: dict[str, EmpiricalPmf]
    n_runs: int
    n_aircraft: int
    seed: int
    stream_id: int
    kind: str

    def merge(self, other: "McEstimate") -> "McEstimate":
        if set(self.components) != set(other.components) or self.kind != other.kind:
            raise ValueError("component mismatch")
        merged = {k: v.merge(other.components[k])
                  for k, v in self.components.items()}
        return McEstimate(merged, self.n_runs + other.n_runs,
                          self.n_aircraft + other.n_aircraft,
                          self.seed, self.stream_id, self.kind)


def _bincount(per_run: np.ndarray) -> np.ndarray:
    return np.bincount(per_run, minlength=int(per_run.max(initial=0)) + 1)


def _simulate_lane_counts(rs: RandomSource, flow: FlowSpec,
                          ou: dict[str, OuParams], axes: tuple[str, ...],
                          horizon: float, obs_dt: float, n_sub: int,
                          count_full_horizon: bool) -> tuple[np.ndarray, int]:
    """Per-axis intervention counts for one lane in one run.

    Returns (counts per axis, number of aircraft). Draw order is fixed:
    arrival count, arrival times, then the full observation noise tensor.
    """
    lam = flow.intensity_per_min
    window = horizon + flow.t_cross_min
    k = int(rs.poisson(lam * window))
    if k == 0:
        return np.zeros(len(axes)), 0
    entries = -flow.t_cross_min + rs.uniform(k) * window

    if count_full_horizon:
        m_last = np.maximum(
            np.floor((horizon - entries) / obs_dt + 1e-9).astype(int), 0)
    else:
        m_last = np.full(k, int(math.floor(flow.t_cross_min / obs_dt + 1e-9)))
    m_max = int(m_last.max(initial=0))
    if m_max == 0:
        return np.zeros(len(axes)), k

    sub_dt = obs_dt / n_sub
    coeffs = [transition_coeffs(ou[a], sub_dt) for a in axes]
    a_vec = np.array([c[0] for c in coeffs])
    b_vec = np.array([c[1] for c in coeffs])
    s_vec = np.array([c[2] for c in coeffs])
    bounds = np.array([flow.tolerance.for_axis(a) for a in axes])

    z = rs.standard_normal((m_max * n_sub, k, len(axes)))
    x = np.zeros((k, len(axes)))
    counts = np.zeros(len(axes), dtype=np.int64)
    for m in range(1, m_max + 1):
        for j in range(n_sub):
            x = a_vec * x + b_vec + s_vec * z[(m - 1) * n_sub + j]
        t_obs = entries + m * obs_dt
        in_window = (t_obs >= -1e-9) & (t_obs <= horizon + 1e-9)
        observed = (m <= m_last)
        hits = np.abs(x) >= bounds
        countable = hits & (observed & in_window)[:, None]
        counts += countable.sum(axis=0)
        # the controller resets every observed excursion, including those
        # during the pre-window warm-up that the accounting skips
        x[hits & observed[:, None]] = 0.0
    return counts, k


def run_single_lane(cfg: ScenarioConfig) -> McEstimate:
    """Estimate the lane taskload PMF (per axis and all axes combined)."""
    if cfg.kind != "single_lane":
        raise ValueError("config kind must be single_lane")
    src = RandomSource(cfg.seed, cfg.stream_id)
    flow = cfg.flows[0]
    n_axes = len(cfg.axes)
    per_run = np.zeros((cfg.n_runs, n_axes), dtype=np.int64)
    n_aircraft = 0
    for r in range(cfg.n_runs):
        rs = src.substream(cfg.run_offset + r)
        counts, k = _simulate_lane_counts(
            rs, flow, cfg.ou, cfg.axes, cfg.horizon, cfg.obs_dt,
            cfg.n_substeps, cfg.count_full_horizon)
        per_run[r] = counts
        n_aircraft += k
    comps: dict[str, EmpiricalPmf] = {}
    for i, axis in enumerate(cfg.axes):
        comps[axis] = EmpiricalPmf(_bincount(per_run[:, i]), cfg.n_runs,
                                   n_aircraft, cfg.horizon)
    comps["total"] = EmpiricalPmf(_bincount(per_run.sum(axis=1)), cfg.n_runs,
                                  n_aircraft * n_axes, cfg.horizon)
    return McEstimate(comps, cfg.n_runs, n_aircraft, cfg.seed,
                      cfg.stream_id, cfg.kind)


def run_multilane(cfg: ScenarioConfig) -> McEstimate:
    """Estimate multilane taskload with cumulative lane-prefix PMFs.

    All lanes of a run share the run substream, so prefix PMFs are
    nested views of the same realizations: adding a lane changes a
    prefix only through that lane's own interventions.
    """
    if cfg.kind != "multilane":
        raise ValueError("config kind must be multilane")
    src = RandomSource(cfg.seed, cfg.stream_id)
    n_lanes = len(cfg.flows)
    n_axes = len(cfg.axes)
    per_run = np.zeros((cfg.n_runs, n_lanes, n_axes), dtype=np.int64)
    n_aircraft = 0
    for r in range(cfg.n_runs):
        rs = src.substream(cfg.run_offset + r)
        for li, flow in enumerate(cfg.flows):
            counts, k = _simulate_lane_counts(
                rs, flow, cfg.ou, cfg.axes, cfg.horizon, cfg.obs_dt,
                cfg.n_substeps, cfg.count_full_horizon)
            per_run[r, li] = counts
            n_aircraft += k
    comps: dict[str, EmpiricalPmf] = {}
    for prefix in range(1, n_lanes + 1):
        tot = per_run[:, :prefix, :].sum(axis=(1, 2))
        lat = per_run[:, :prefix, cfg.axes.index("lateral")].sum(axis=1) \
            if "lateral" in cfg.axes else tot
        comps[f"lanes{prefix}_total"] = EmpiricalPmf(
            _bincount(tot), cfg.n_runs, n_aircraft * n_axes, cfg.horizon)
        comps[f"lanes{prefix}_lateral"] = EmpiricalPmf(
            _bincount(lat), cfg.n_runs, n_aircraft, cfg.horizon)
    comps["total"] = comps[f"lanes{n_lanes}_total"]
    comps["lateral"] = comps[f"lanes{n_lanes}_lateral"]
    return McEstimate(comps, cfg.n_runs, n_aircraft, cfg.seed,
                      cfg.stream_id, cfg.kind)


def run_crossing(cfg: ScenarioConfig) -> McEstimate:
    """Estimate crossing taskload split into deviation control and
    conflict resolution.

    Deviation control counts bound excursions observed during each
    aircraft's safe-zone transit within the horizon. The conflict count
    is max(A - 1, 0) with A the zone occupancy at the run's reference
    snapshot (mid-horizon): the zone is an M/D/inf system, so the
    snapshot occupancy is Poisson with mean (lam1 + lam2) * t_safe,
    directly comparable to the analytic conflict PMF.
    """
    if cfg.kind != "crossing":
        raise ValueError("config kind must be crossing")
    geom = cfg.geometry
    if not geom.solved:
        geom = solve_safe_zone(geom)
    t_safe = geom.t_safe_min
    src = RandomSource(cfg.seed, cfg.stream_id)
    n_axes = len(cfg.axes)
    m_transit = int(math.floor(t_safe / cfg.obs_dt + 1e-9))
    sub_dt = cfg.obs_dt / cfg.n_substeps
    t_star = cfg.horizon / 2.0

    dev = np.zeros(cfg.n_runs, dtype=np.int64)
    conf = np.zeros(cfg.n_runs, dtype=np.int64)
    n_aircraft = 0
    for r in range(cfg.n_runs):
        rs = src.substream(cfg.run_offset + r)
        occupancy = 0
        for flow in cfg.flows:
            lam = flow.intensity_per_min
            window = cfg.horizon + t_safe
            k = int(rs.poisson(lam * window))
            n_aircraft += k
            if k == 0:
                continue
            entries = -t_safe + rs.uniform(k) * window
            occupancy += int(((entries <= t_star)
                              & (t_star < entries + t_safe)).sum())
            if m_transit == 0:
                continue
            coeffs = [transition_coeffs(cfg.ou[a], sub_dt) for a in cfg.axes]
            a_vec = np.array([c[0] for c in coeffs])
            b_vec = np.array([c[1] for c in coeffs])
            s_vec = np.array([c[2] for c in coeffs])
            bounds = np.array([flow.tolerance.for_axis(a) for a in cfg.axes])
            z = rs.standard_normal((m_transit * cfg.n_substeps, k, n_axes))
            x = np.zeros((k, n_axes))
            for m in range(1, m_transit + 1):
                for j in range(cfg.n_substeps):
                    x = a_vec * x + b_vec + s_vec * z[(m - 1) * cfg.n_substeps + j]
                t_obs = entries + m * cfg.obs_dt
                hits = np.abs(x) >= bounds
                countable = hits & ((t_obs >= -1e-9)
                                    & (t_obs <= cfg.horizon + 1e-9))[:, None]
                dev[r] += int(countable.sum())
                x[hits] = 0.0
        conf[r] = max(occupancy - 1, 0)

    comps = {
        "deviation_control": EmpiricalPmf(_bincount(dev), cfg.n_runs,
                                          n_aircraft * n_axes, cfg.horizon),
        "conflict_resolution": EmpiricalPmf(_bincount(conf), cfg.n_runs,
                                            0, cfg.horizon),
        "total": EmpiricalPmf(_bincount(dev + conf), cfg.n_runs,
                              n_aircraft * n_axes, cfg.horizon),
    }
    return McEstimate(comps, cfg.n_runs, n_aircraft, cfg.seed,
                      cfg.stream_id, cfg.kind)


@dataclass
class CompareReport:
    tv: float
    z_scores: np.ndarray
    threshold: float
    passed: bool


def compare(analytic: TaskloadPmf, mc: EmpiricalPmf,
            tv_threshold: float = 0.02) -> CompareReport:
    """TV distance and per-bin z-scores of an MC estimate against an
    analytic PMF; fails when TV exceeds the threshold."""
    if (analytic.horizon is not None and mc.horizon is not None
            and not math.isclose(analytic.horizon, mc.horizon,
                                 rel_tol=1e-9, abs_tol=1e-9)):
        raise ValueError(f"incompatible supports: horizons "
                         f"{analytic.horizon} vs {mc.horizon}")
    size = max(analytic.probs.size, mc.counts.size)
    pa = analytic.padded(size)
    pm = np.zeros(size)
    pm[:mc.counts.size] = mc.probs
    tv = 0.5 * (np.abs(pa - pm).sum() + analytic.truncation_mass)
    se = np.sqrt(np.maximum(pa * (1.0 - pa), 1e-30) / mc.n_runs)
    z = (pm - pa) / se
    return CompareReport(float(tv), z, tv_threshold, bool(tv < tv_threshold))


def compare_empirical(a: EmpiricalPmf, b: EmpiricalPmf,
                      z_max: float = 3.5) -> CompareReport:
    """Joint per-bin z comparison of two independent MC estimates."""
    size = max(a.counts.size, b.counts.size)
    pa = np.zeros(size)
    pa[:a.counts.size] = a.probs
    pb = np.zeros(size)
    pb[:b.counts.size] = b.probs
    se = np.sqrt(pa * (1 - pa) / a.n_runs + pb * (1 - pb) / b.n_runs)
    se = np.maximum(se, 1e-30)
    z = (pa - pb) / se
    tv = 0.5 * float(np.abs(pa - pb).sum())
    return CompareReport(tv, z, z_max, bool(np.max(np.abs(z)) <= z_max))
