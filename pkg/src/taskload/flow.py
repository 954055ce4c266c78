"""Macroscopic corridor layer: Poisson occupancy, lane and crossing taskload.

A lane's taskload over a window T is a Poisson mixture: with M aircraft
present (M ~ Poisson(lambda * T_cross) in steady state) and independent
per-aircraft counts, the lane PMF mixes the M-fold convolutions of the
per-aircraft PMF over the occupancy distribution. Parallel lanes with
identical tolerances collapse to a single lane at the summed intensity;
heterogeneous lanes convolve their individual lane PMFs.

Crossings add scheduling conflicts: a safe zone around the centerline
intersection admits one aircraft at a time, and with A aircraft inside,
A-1 must be delayed. The zone is sized so that any two aircraft sitting
on the zone boundaries of different flows (anywhere across their
corridor widths) are at least the separation minimum apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .pmf import TaskloadPmf, convolve_pmf

KT_TO_NM_PER_MIN = 1.0 / 60.0


@dataclass(frozen=True)
class ToleranceBounds:
    """Per-axis two-sided deviation bounds (NM, ft, NM)."""

    lateral_nm: float
    vertical_ft: float
    longitudinal_nm: float

    def __post_init__(self):
        for v in (self.lateral_nm, self.vertical_ft, self.longitudinal_nm):
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"tolerance bounds must be > 0, got {v}")

    def for_axis(self, axis: str) -> float:
        return {"lateral": self.lateral_nm, "vertical": self.vertical_ft,
                "longitudinal": self.longitudinal_nm}[axis]


@dataclass(frozen=True)
class ToleranceStandard:
    name: str
    bounds: ToleranceBounds


#: The four named control tolerance standards.
TOLERANCE_STANDARDS = {
    "stringent": ToleranceStandard("stringent", ToleranceBounds(0.1, 20.0, 0.5)),
    "severe": ToleranceStandard("severe", ToleranceBounds(0.12, 22.0, 0.6)),
    "intermediate": ToleranceStandard("intermediate", ToleranceBounds(0.15, 25.0, 0.8)),
    "lax": ToleranceStandard("lax", ToleranceBounds(0.2, 30.0, 1.0)),
}


@dataclass(frozen=True)
class FlowSpec:
    """One lane: Poisson intensity, residency, speed, bounds, width."""

    intensity_per_hour: float
    t_cross_min: float = 20.0
    speed_kt: float = 480.0
    tolerance: ToleranceBounds = TOLERANCE_STANDARDS["stringent"].bounds
    lateral_extent_nm: float = 1.0

    def __post_init__(self):
        if self.intensity_per_hour < 0.0:
            raise ValueError("intensity must be >= 0")
        if self.t_cross_min <= 0.0 or self.speed_kt <= 0.0:
            raise ValueError("t_cross and speed must be > 0")
        if self.lateral_extent_nm < 0.0:
            raise ValueError("lateral extent must be >= 0")

    @property
    def intensity_per_min(self) -> float:
        return self.intensity_per_hour / 60.0


@dataclass
class CrossingGeometry:
    """Two flows crossing at angle alpha, with a derived safe zone.

    e1/e2 are the full lateral extents (corridor widths) of the flows;
    x1/x2 the safe-zone half-lengths along each centerline once solved,
    and t_safe the equalized transit time at `speed_kt`.
    """

    alpha_deg: float
    e1_nm: float = 1.0
    e2_nm: float = 1.0
    d_min_nm: float = 5.0
    speed_kt: float = 480.0
    x1_nm: float | None = None
    x2_nm: float | None = None
    t_safe_min: float | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha_deg < 180.0:
            raise ValueError(f"alpha must be in (0, 180), got {self.alpha_deg}")
        if self.e1_nm < 0.0 or self.e2_nm < 0.0:
            raise ValueError("extents must be >= 0")
        if self.d_min_nm <= 0.0 or self.speed_kt <= 0.0:
            raise ValueError("d_min and speed must be > 0")

    @property
    def solved(self) -> bool:
        return self.t_safe_min is not None


def occupancy_pmf(intensity_per_min: float, window_min: float,
                  eps: float = 1e-8) -> TaskloadPmf:
    """Poisson(intensity * window) PMF truncated when the residual < eps."""
    lam = intensity_per_min * window_min
    if lam < 0.0:
        raise ValueError("negative occupancy mean")
    if lam == 0.0:
        return TaskloadPmf(np.array([1.0]))
    probs = [math.exp(-lam)]
    residual = 1.0 - probs[0]
    k = 0
    while residual >= eps:
        k += 1
        probs.append(probs[-1] * lam / k)
        residual -= probs[-1]
    return TaskloadPmf(np.array(probs), max(0.0, residual))


def poisson_occupancy(flow: FlowSpec, eps: float = 1e-8) -> TaskloadPmf:
    """PMF of the number of aircraft simultaneously present in the lane."""
    return occupancy_pmf(flow.intensity_per_min, flow.t_cross_min, eps)


def single_lane_pmf(flow: FlowSpec, per_aircraft: TaskloadPmf,
                    occ_eps: float = 1e-8) -> TaskloadPmf:
    """Lane taskload: Poisson occupancy mixture of k-fold convolutions."""
    occ = poisson_occupancy(flow, occ_eps)
    acc = np.array([occ.probs[0]])  # M = 0: no interventions
    conv = per_aircraft
    for k in range(1, occ.probs.size):
        term = conv.probs * occ.probs[k]
        if term.size > acc.size:
            acc = np.pad(acc, (0, term.size - acc.size))
        acc[:term.size] += term
        if k < occ.probs.size - 1:
            conv = convolve_pmf(conv, per_aircraft).trimmed(1e-16)
    trunc = max(0.0, 1.0 - acc.sum())
    return TaskloadPmf(acc, trunc, per_aircraft.horizon)


def _same_per_aircraft(pmfs: list[TaskloadPmf]) -> bool:
    first = pmfs[0]
    return all(q.probs.size == first.probs.size
               and np.array_equal(q.probs, first.probs)
               and q.truncation_mass == first.truncation_mass
               for q in pmfs[1:])


def multilane_pmf(flows: list[FlowSpec], per_aircraft: list[TaskloadPmf],
                  occ_eps: float = 1e-8) -> TaskloadPmf:
    """Taskload of parallel independent lanes.

    Identical tolerances (same per-aircraft PMF and extent) collapse to
    one lane at the summed intensity; otherwise the per-lane PMFs
    convolve, which is associative and order-independent.
    """
    if len(flows) < 2:
        raise ValueError("multilane requires at least 2 flows")
    if len(flows) != len(per_aircraft):
        raise ValueError("one per-aircraft PMF per flow required")
    same_shape = (_same_per_aircraft(per_aircraft)
                  and len({(f.t_cross_min, f.lateral_extent_nm) for f in flows}) == 1)
    if same_shape:
        total = sum(f.intensity_per_hour for f in flows)
        merged = replace(flows[0], intensity_per_hour=total)
        return single_lane_pmf(merged, per_aircraft[0], occ_eps)
    out = single_lane_pmf(flows[0], per_aircraft[0], occ_eps)
    for f, pa in zip(flows[1:], per_aircraft[1:]):
        out = convolve_pmf(out, single_lane_pmf(f, pa, occ_eps))
    return out


# --- safe-zone geometry -------------------------------------------------

def _zone_corners(x: float, half_width: float, direction: np.ndarray,
                  normal: np.ndarray) -> list[np.ndarray]:
    """The four corner points of a zone boundary pair on one flow."""
    return [end * x * direction + side * half_width * normal
            for end in (-1.0, 1.0) for side in (-1.0, 1.0)]


def min_corner_separation(g: CrossingGeometry, x1: float, x2: float) -> float:
    """Smallest distance between zone-boundary corners of the two flows."""
    a = math.radians(g.alpha_deg)
    u1, n1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    u2 = np.array([math.cos(a), math.sin(a)])
    n2 = np.array([-math.sin(a), math.cos(a)])
    c1 = _zone_corners(x1, g.e1_nm / 2.0, u1, n1)
    c2 = _zone_corners(x2, g.e2_nm / 2.0, u2, n2)
    return min(float(np.linalg.norm(p - q)) for p in c1 for q in c2)


def solve_safe_zone(g: CrossingGeometry) -> CrossingGeometry:
    """Size the safe zone: minimal half-lengths honoring the separation minimum.

    For every pairing of zone-boundary corners across the two flows the
    squared distance is quadratic in the common half-length x, so the
    minimal feasible x for each pairing is a quadratic root and the zone
    half-length is their maximum. Both flows carry the same speed, so
    equal transit times force x1 = x2 and t_safe = 2 x / speed.

    Raises when no positive half-length satisfies every pairing.
    """
    a = math.radians(g.alpha_deg)
    u1, n1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    u2 = np.array([math.cos(a), math.sin(a)])
    n2 = np.array([-math.sin(a), math.cos(a)])
    d2 = g.d_min_nm ** 2
    x_req = 0.0
    for end1 in (-1.0, 1.0):
        for side1 in (-1.0, 1.0):
            for end2 in (-1.0, 1.0):
                for side2 in (-1.0, 1.0):
                    # corner difference = x*(end1 u1 - end2 u2) + const
                    dvec = end1 * u1 - end2 * u2
                    kvec = (side1 * g.e1_nm / 2.0 * n1
                            - side2 * g.e2_nm / 2.0 * n2)
                    qa = float(dvec @ dvec)
                    qb = 2.0 * float(dvec @ kvec)
                    qc = float(kvec @ kvec) - d2
                    if qa < 1e-14:
                        # parallel boundary motion: distance fixed in x
                        if qc < 0.0 and qb <= 0.0:
                            raise ValueError(
                                "no positive safe-zone half-length exists")
                        if qb > 0.0 and qc < 0.0:
                            x_req = max(x_req, -qc / qb)
                        continue
                    disc = qb * qb - 4.0 * qa * qc
                    if disc <= 0.0:
                        continue  # pairing never violates the minimum
                    root = (-qb + math.sqrt(disc)) / (2.0 * qa)
                    x_req = max(x_req, root)
    if x_req <= 0.0:
        raise ValueError("no positive safe-zone half-length exists")
    sep = min_corner_separation(g, x_req, x_req)
    if sep < g.d_min_nm - 1e-9:
        raise ValueError(f"solver inconsistency: separation {sep}")
    speed_nm_min = g.speed_kt * KT_TO_NM_PER_MIN
    return replace(g, x1_nm=x_req, x2_nm=x_req,
                   t_safe_min=2.0 * x_req / speed_nm_min)


def safe_zone_printed_residuals(g: CrossingGeometry, x1: float,
                                x2: float) -> tuple[float, float]:
    """Residuals of the published boundary equations, kept for traceability.

    Both equations as printed (with the first equation's leading
    parenthesis squared, by symmetry with the second and the squared
    right-hand side):

      (x1 + x2 cos a - e2/2 cos a)^2 + (-e1/2 + x2 sin a + e2/2 sin a)^2 = D^2
      (x1 + x2 cos a - e2/2 sin a)^2 + (-e1/2 + x2 sin a + e2/2 cos a)^2 = D^2

    The equality system generally admits no positive root pair (checked
    against a brute-force corner oracle), so the geometric solver above
    is the production route.
    """
    a = math.radians(g.alpha_deg)
    c, s = math.cos(a), math.sin(a)
    h2 = g.e2_nm / 2.0
    h1 = g.e1_nm / 2.0
    d2 = g.d_min_nm ** 2
    r1 = (x1 + x2 * c - h2 * c) ** 2 + (-h1 + x2 * s + h2 * s) ** 2 - d2
    r2 = (x1 + x2 * c - h2 * s) ** 2 + (-h1 + x2 * s + h2 * c) ** 2 - d2
    return r1, r2


def solve_safe_zone_printed(g: CrossingGeometry,
                            span: float = 25.0) -> list[tuple[float, float]]:
    """All real roots of the published equality system inside [-span, span].

    Diagnostic only. Uses dense Newton polishing from a coarse grid of
    starts; duplicates collapse to 6-decimal resolution.
    """
    from scipy.optimize import fsolve

    def system(v):
        return safe_zone_printed_residuals(g, v[0], v[1])

    roots: set[tuple[float, float]] = set()
    starts = np.linspace(-span, span, 9)
    for s1 in starts:
        for s2 in starts:
            sol, _, ier, _ = fsolve(system, [s1, s2], full_output=True)
            if ier == 1 and max(abs(r) for r in system(sol)) < 1e-8:
                roots.add((round(float(sol[0]), 6), round(float(sol[1]), 6)))
    return sorted(roots)


# --- crossing taskload ---------------------------------------------------

def conflict_pmf(g: CrossingGeometry, lam1_per_h: float, lam2_per_h: float,
                 eps: float = 1e-10) -> TaskloadPmf:
    """PMF of the safe-zone occupancy A: Poisson((lam1+lam2) * t_safe)."""
    if not g.solved:
        raise ValueError("solve_safe_zone first: t_safe unknown")
    if lam1_per_h < 0.0 or lam2_per_h < 0.0:
        raise ValueError("intensities must be >= 0")
    lam_min = (lam1_per_h + lam2_per_h) / 60.0
    return occupancy_pmf(lam_min, g.t_safe_min, eps)


def conflict_interventions_pmf(occupancy: TaskloadPmf) -> TaskloadPmf:
    """PMF of max(A-1, 0): every aircraft beyond the first is delayed."""
    probs = occupancy.probs
    if probs.size == 1:
        return TaskloadPmf(np.array([1.0 - occupancy.truncation_mass]),
                           occupancy.truncation_mass)
    out = probs[1:].copy()
    out[0] += probs[0]
    return TaskloadPmf(out, occupancy.truncation_mass)


def crossing_pmf(g: CrossingGeometry, flows: list[FlowSpec],
                 per_aircraft: list[TaskloadPmf],
                 occ_eps: float = 1e-8) -> TaskloadPmf:
    """Total crossing taskload: conflicts plus deviation control.

    The two flows merge into one Poisson stream through the zone; the
    deviation-control PMF is the merged-lane mixture with residency
    equal to the zone transit time. The total combines it with the
    conflict count A-1:

        P[total = n] = sum_i P[A = i+1] P[N = n-i]   (n >= 1)
        P[total = 0] = P[A = 0] + P[A = 1] P[N = 0]

    exactly as displayed; the A = 0 branch carries no control taskload
    since an empty zone needs no in-zone interventions.
    """
    if len(flows) != 2 or len(per_aircraft) != 2:
        raise ValueError("a crossing joins exactly two flows")
    if not g.solved:
        raise ValueError("solve_safe_zone first: t_safe unknown")
    occ = conflict_pmf(g, flows[0].intensity_per_hour,
                       flows[1].intensity_per_hour, eps=occ_eps)
    merged = FlowSpec(
        intensity_per_hour=flows[0].intensity_per_hour + flows[1].intensity_per_hour,
        t_cross_min=g.t_safe_min, speed_kt=g.speed_kt,
        tolerance=flows[0].tolerance,
        lateral_extent_nm=flows[0].lateral_extent_nm)
    if not _same_per_aircraft(per_aircraft):
        raise ValueError("heterogeneous crossing flows need matching "
                         "per-aircraft PMFs over the zone transit")
    control = single_lane_pmf(merged, per_aircraft[0], occ_eps)
    n_out = control.probs.size + max(occ.probs.size - 2, 0) + 1
    out = np.zeros(n_out)
    out[0] = occ.probs[0]
    for i in range(occ.probs.size - 1):         # A = i + 1
        out[i:i + control.probs.size] += occ.probs[i + 1] * control.probs
    trunc = max(0.0, 1.0 - out.sum())
    return TaskloadPmf(out, trunc, control.horizon)
