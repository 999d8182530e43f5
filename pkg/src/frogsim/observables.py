"""Observables over runs: passage times, limit-shape estimates, coexistence
and winner statistics, and per-particle discovery diagnostics."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .engine import TYPE1, TYPE2, RunSummary, SimConfig, run
from .lattice import diamond_size, l1_norm
from .rng import Site, derive_seed


# ---------------------------------------------------------------------------
# passage times

@dataclass(frozen=True)
class PassageResult:
    """Discovery time of a target site, or the horizon it survived past."""

    time: Optional[int]
    horizon: int

    @property
    def resolved(self) -> bool:
        return self.time is not None

    def __str__(self):
        return str(self.time) if self.resolved else "unresolved"


@dataclass
class PassageTimeTable:
    """Resolved/unresolved passage times per (x, y, p) on one realization."""

    entries: dict[tuple[Site, Site, float], PassageResult] = field(default_factory=dict)
    mu_estimates: dict[int, "MuEstimate"] = field(default_factory=dict)


def passage_time(config: SimConfig, x: Site, y: Site, p: float,
                 horizon: Optional[int] = None, kernel=None) -> PassageResult:
    """Time to discover y in a one-type process started from x at laziness p.

    The run uses config's realization (seed, eta field, trajectories), so
    restarts from different sites share the same random environment.
    """
    x, y = tuple(x), tuple(y)
    horizon = config.horizon if horizon is None else horizon
    if x == y:
        return PassageResult(0, horizon)
    cfg = replace(config, start1=x, start2=None, p1=p, horizon=horizon,
                  track_discoverers=False)
    s = run(cfg, kernel=kernel, stop_site=y)
    t = s.discovery_time_of(y)
    return PassageResult(t, horizon)


def check_subadditivity(config: SimConfig, x: Site, w: Site, y: Site,
                        p: float, horizon: Optional[int] = None,
                        kernel=None) -> Optional[bool]:
    """T(x,y) <= T(x,w) + T(w,y) on one realization; None if any unresolved.

    All three restarts share the realization; x and w are conditioned
    non-empty consistently across them.
    """
    cond = tuple(dict.fromkeys(list(config.conditioned_sites)
                               + [tuple(x), tuple(w)]))
    cfg = replace(config, conditioned_sites=cond,
                  condition_start_nonempty=False)
    t_xy = passage_time(cfg, x, y, p, horizon, kernel)
    t_xw = passage_time(cfg, x, w, p, horizon, kernel)
    t_wy = passage_time(cfg, w, y, p, horizon, kernel)
    if not (t_xy.resolved and t_xw.resolved and t_wy.resolved):
        return None
    return t_xy.time <= t_xw.time + t_wy.time


@dataclass(frozen=True)
class SubadditivityAudit:
    checked: int
    applicable: int
    violations: int
    triples: tuple


def audit_subadditivity(config: SimConfig, p: float, n_triples: int,
                        norm_bound: int = 10, horizon: Optional[int] = None,
                        max_attempts: Optional[int] = None,
                        kernel=None) -> SubadditivityAudit:
    """Check random triples with coordinates of L1 norm <= norm_bound until
    n_triples applicable (all three times resolved) are audited."""
    picker = random.Random(derive_seed(config.seed, 0x5AD))
    d = config.d

    def rand_site() -> Site:
        while True:
            s = tuple(picker.randint(-norm_bound, norm_bound) for _ in range(d))
            if l1_norm(s) <= norm_bound:
                return s

    max_attempts = max_attempts or 4 * n_triples
    checked = applicable = violations = 0
    bad = []
    while applicable < n_triples and checked < max_attempts:
        x, w, y = rand_site(), rand_site(), rand_site()
        checked += 1
        ok = check_subadditivity(config, x, w, y, p, horizon, kernel)
        if ok is None:
            continue
        applicable += 1
        if not ok:
            violations += 1
            bad.append((x, w, y))
    return SubadditivityAudit(checked, applicable, violations, tuple(bad))


@dataclass(frozen=True)
class MuEstimate:
    n: int
    mean: float  # mean of T(0, n e1) / n over replicas
    se: float
    replicas: int
    unresolved: int


def estimate_mu(config: SimConfig, n_values: Sequence[int], replicas: int,
                p: Optional[float] = None, horizon_factor: int = 4,
                axis: int = 0, kernel=None) -> dict[int, MuEstimate]:
    """Mean of T(0, n*e_axis)/n over derived-seed replicas, per n."""
    p = config.p1 if p is None else p
    origin = (0,) * config.d
    out = {}
    for n in n_values:
        target = tuple(n if a == axis else 0 for a in range(config.d))
        horizon = max(int(horizon_factor * n / p), n + 8)
        vals = []
        unresolved = 0
        for r in range(replicas):
            cfg = replace(config, seed=derive_seed(config.seed, r))
            res = passage_time(cfg, origin, target, p, horizon, kernel)
            if res.resolved:
                vals.append(res.time / n)
            else:
                unresolved += 1
        mean = float(np.mean(vals)) if vals else math.inf
        se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) \
            if len(vals) > 1 else math.inf
        out[n] = MuEstimate(n, mean, se, replicas, unresolved)
    return out


# ---------------------------------------------------------------------------
# shape estimates

@dataclass
class ShapeEstimate:
    """Discovered set at time n, centered on the start site."""

    n: int
    d: int
    cells: set  # relative coordinates
    norms: np.ndarray  # L1 norm per cell
    inner_radius: int
    outer_radius: int

    @property
    def scale(self) -> float:
        return 1.0 / self.n if self.n else 1.0

    def coverage(self, rho: float) -> float:
        """Fraction of lattice points of the diamond D_{rho*n} discovered."""
        if not 0 < rho <= 1:
            raise ValueError("rho must be in (0, 1]")
        r = int(math.floor(rho * self.n))
        total = diamond_size(r, self.d)
        inside = int(np.count_nonzero(self.norms <= r))
        return inside / total if total else 1.0


def shape_estimate(summary: RunSummary, n: Optional[int] = None) -> ShapeEstimate:
    """Shape of the set discovered by time n (default: the final time)."""
    n = summary.t_final if n is None else n
    if n > summary.t_final:
        raise ValueError(f"n={n} exceeds the run's final time {summary.t_final}")
    mask = summary.ev_t <= n
    coords = summary.arena().decode_many(summary.ev_off[mask])
    start = np.asarray(summary.config.start1, dtype=np.int64)
    rel = coords - start
    norms = np.abs(rel).sum(axis=1)
    outer = int(norms.max()) if len(norms) else 0
    # inner radius: largest r with every point of D_r discovered
    counts = np.bincount(norms, minlength=outer + 2)
    cum = np.cumsum(counts)
    inner = 0
    for r in range(outer + 1):
        if cum[r] == diamond_size(r, summary.d):
            inner = r
        else:
            break
    cells = {tuple(row) for row in rel}
    return ShapeEstimate(n=n, d=summary.d, cells=cells, norms=norms,
                         inner_radius=inner, outer_radius=outer)


def diamond_coverage(shape: ShapeEstimate, rho: float) -> float:
    return shape.coverage(rho)


# ---------------------------------------------------------------------------
# two-type outcome statistics

@dataclass(frozen=True)
class OutcomeSummary:
    count1: int
    count2: int
    last_activation1: Optional[int]
    last_activation2: Optional[int]
    K: int

    @property
    def coexist(self) -> bool:
        return self.count1 >= self.K and self.count2 >= self.K

    def coexist_at(self, K: int) -> bool:
        return self.count1 >= K and self.count2 >= K

    @property
    def leader(self) -> str:
        if self.count1 > self.count2:
            return "type1"
        if self.count2 > self.count1:
            return "type2"
        return "tie"


def outcome_summary(summary: RunSummary, K: int = 50) -> OutcomeSummary:
    if not summary.config.two_type:
        raise ValueError("outcome_summary needs a two-type run")
    return OutcomeSummary(
        count1=summary.count1, count2=summary.count2,
        last_activation1=summary.last_activation(TYPE1),
        last_activation2=summary.last_activation(TYPE2), K=K)


# ---------------------------------------------------------------------------
# per-particle discovery diagnostics

@dataclass(frozen=True)
class ParticleDiscoveryStats:
    """Discovery credit per initially active particle.

    A discovery is credited to every particle arriving at the site on its
    discovery step; each particle starts credited with its own start site.
    """

    particles: tuple  # (birth_site, j, ptype)
    counts: np.ndarray
    last_times: np.ndarray

    def for_particle(self, i: int) -> tuple[int, int]:
        return int(self.counts[i]), int(self.last_times[i])


def particle_discovery_stats(summary: RunSummary) -> ParticleDiscoveryStats:
    if len(summary.credit_cnt) == 0 and summary.initial_particles:
        raise ValueError("run was executed without discovery tracking")
    return ParticleDiscoveryStats(
        particles=tuple(summary.initial_particles),
        counts=summary.credit_cnt.copy(),
        last_times=summary.credit_last.copy())
