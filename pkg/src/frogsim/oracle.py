"""Exact outcome distribution at tiny scale by exhaustive branching.

Ground truth for the engine: every per-particle lazy coin and jump direction
(and every tie coin) is branched over with exact rational probabilities, under
the same two-phase step semantics the engine uses.  Initial counts must be
degenerate so the branch tree is finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .distributions import Degenerate
from .engine import (BY_BOTH, TIE_ALWAYS1, TIE_ALWAYS2, TIE_BIASED,
                     TIE_MAJORITY, TYPE1, TYPE2, SimConfig)
from .lattice import direction_offsets

BRANCH_BUDGET = 10_000_000

# digest rows: (site, time, discovered_by, assigned_type), sorted
Digest = tuple[tuple[tuple[int, ...], int, int, int], ...]


class BudgetExceeded(RuntimeError):
    def __init__(self, branches: int):
        super().__init__(f"enumeration budget exceeded after {branches} branches")
        self.branches = branches


@dataclass(frozen=True)
class OutcomeDistribution:
    atoms: dict[Digest, Fraction]
    branches: int

    def probability(self, digest: Digest) -> Fraction:
        return self.atoms.get(digest, Fraction(0))

    def total(self) -> Fraction:
        return sum(self.atoms.values(), Fraction(0))


@dataclass(frozen=True)
class _Particle:
    pos: tuple[int, ...]
    ptype: int


def _as_prob(p: float, lo_open: bool = True) -> Fraction:
    f = Fraction(p).limit_denominator(10**9)
    if f != Fraction(p):
        raise ValueError(f"oracle mode needs rational probabilities, got {p!r}")
    if not (0 < f <= 1 if lo_open else 0 <= f <= 1):
        raise ValueError(f"probability {p!r} out of range")
    return f


def enumerate_exact(config: SimConfig, horizon: int | None = None,
                    budget: int = BRANCH_BUDGET) -> OutcomeDistribution:
    """Exact law of the outcome digest at the horizon."""
    if not isinstance(config.eta, Degenerate):
        raise ValueError("exact enumeration requires a degenerate initial "
                         f"distribution, got {config.eta.spec()}")
    horizon = config.horizon if horizon is None else horizon
    k = config.eta.k
    d = config.d
    p1 = _as_prob(config.p1)
    p2 = _as_prob(config.p2)
    tie_kind = config.tie.code
    tie_frac = _as_prob(config.tie.q, lo_open=False) \
        if tie_kind == TIE_BIASED else None
    offsets = direction_offsets(d)
    collective = config.laziness == "collective"
    dir_share = Fraction(1, 2 * d)

    starts = [(tuple(config.start1), TYPE1)]
    if config.start2 is not None:
        starts.append((tuple(config.start2), TYPE2))
    starts.sort()
    rows = []
    particles = []
    for site, ptype in starts:
        rows.append((site, 0, ptype, ptype))
        particles.extend(_Particle(site, ptype) for _ in range(k))

    atoms: dict[Digest, Fraction] = {}
    counter = {"branches": 0}

    def bump():
        counter["branches"] += 1
        if counter["branches"] > budget:
            raise BudgetExceeded(counter["branches"])

    def explore(t: int, particles: tuple[_Particle, ...],
                rows: tuple, prob: Fraction):
        if t == horizon:
            digest = tuple(sorted(rows))
            atoms[digest] = atoms.get(digest, Fraction(0)) + prob
            return
        bump()
        n = len(particles)
        if collective:
            have1 = any(q.ptype == TYPE1 for q in particles)
            have2 = any(q.ptype == TYPE2 for q in particles)
            for m1, pr1 in _coin(p1) if have1 else [(True, Fraction(1))]:
                for m2, pr2 in _coin(p2) if have2 else [(True, Fraction(1))]:
                    moving = [i for i in range(n)
                              if (m1 if particles[i].ptype == TYPE1 else m2)]
                    branch_dirs(t, particles, rows, moving,
                                prob * pr1 * pr2)
        else:
            def lazy(i: int, moving: list[int], pr: Fraction):
                if i == n:
                    branch_dirs(t, particles, rows, moving, pr)
                    return
                p = p1 if particles[i].ptype == TYPE1 else p2
                lazy(i + 1, moving + [i], pr * p)
                if p < 1:
                    lazy(i + 1, moving, pr * (1 - p))

            lazy(0, [], prob)

    def branch_dirs(t, particles, rows, moving, prob):
        def recurse(idx: int, dirs: list[int], pr: Fraction):
            if idx == len(moving):
                bump()
                apply_step(t, particles, rows, moving, dirs, pr)
                return
            for di in range(2 * d):
                recurse(idx + 1, dirs + [di], pr * dir_share)

        recurse(0, [], prob)

    def apply_step(t, particles, rows, moving, dirs, prob):
        t_next = t + 1
        parts = list(particles)
        discovered_sites = {row[0] for row in rows}
        landings: dict[tuple[int, ...], list[int]] = {}
        for i, di in zip(moving, dirs):
            q = parts[i]
            newpos = tuple(a + b for a, b in zip(q.pos, offsets[di]))
            parts[i] = _Particle(newpos, q.ptype)
            if newpos not in discovered_sites:
                landings.setdefault(newpos, []).append(i)

        def settle(sites: list, parts: list, rows: list, pr: Fraction):
            if not sites:
                explore(t_next, tuple(parts), tuple(rows), pr)
                return
            site = sites[0]
            pids = landings[site]
            c1 = sum(1 for i in pids if parts[i].ptype == TYPE1)
            c2 = len(pids) - c1
            if c1 and c2:
                for assigned, pa in _tie_outcomes(c1, c2, tie_kind, tie_frac):
                    rows2 = rows + [(site, t_next, BY_BOTH, assigned)]
                    parts2 = parts + [_Particle(site, assigned)] * k
                    settle(sites[1:], parts2, rows2, pr * pa)
            else:
                assigned = TYPE1 if c1 else TYPE2
                rows2 = rows + [(site, t_next, assigned, assigned)]
                parts2 = parts + [_Particle(site, assigned)] * k
                settle(sites[1:], parts2, rows2, pr)

        settle(sorted(landings), parts, list(rows), prob)

    explore(0, tuple(particles), tuple(sorted(rows)), Fraction(1))
    return OutcomeDistribution(atoms=atoms, branches=counter["branches"])


def _coin(p: Fraction) -> list[tuple[bool, Fraction]]:
    out = [(True, p)]
    if p < 1:
        out.append((False, 1 - p))
    return out


def _tie_outcomes(c1: int, c2: int, tie_kind: int,
                  tie_frac: Fraction | None) -> list[tuple[int, Fraction]]:
    if tie_kind == TIE_ALWAYS1:
        return [(TYPE1, Fraction(1))]
    if tie_kind == TIE_ALWAYS2:
        return [(TYPE2, Fraction(1))]
    if tie_kind == TIE_MAJORITY:
        if c1 > c2:
            return [(TYPE1, Fraction(1))]
        if c2 > c1:
            return [(TYPE2, Fraction(1))]
        return [(TYPE1, Fraction(1, 2)), (TYPE2, Fraction(1, 2))]
    if tie_kind == TIE_BIASED:
        out = []
        if tie_frac > 0:
            out.append((TYPE1, tie_frac))
        if tie_frac < 1:
            out.append((TYPE2, 1 - tie_frac))
        return out
    return [(TYPE1, Fraction(1, 2)), (TYPE2, Fraction(1, 2))]


def total_variation(empirical: Mapping[Digest, float],
                    exact: OutcomeDistribution) -> float:
    """0.5 * sum of |empirical - exact| over the union of supports."""
    keys = set(empirical) | set(exact.atoms)
    return 0.5 * sum(abs(float(empirical.get(k, 0.0))
                         - float(exact.atoms.get(k, Fraction(0))))
                     for k in keys)


def empirical_digests(config: SimConfig, seeds: Iterable[int],
                      kernel=None) -> dict[Digest, float]:
    """Engine digest frequencies over the given seeds."""
    from dataclasses import replace

    from .engine import run

    counts: dict[Digest, int] = {}
    n = 0
    for seed in seeds:
        s = run(replace(config, seed=seed, track_discoverers=False),
                kernel=kernel)
        dg = s.digest()
        counts[dg] = counts.get(dg, 0) + 1
        n += 1
    return {k: v / n for k, v in counts.items()}
