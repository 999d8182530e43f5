"""Synchronous dynamics of the one- and two-type frog model with lazy walks.

Each step has two phases.  Phase A: every active particle of type i draws its
current delay uniform (or, in collective mode, reads the single per-type step
coin) and advances one jump along its fixed trajectory iff the draw is <= p_i.
Phase B: every site that was undiscovered at the start of the step and holds
an active particle after the moves becomes discovered; the discovering type is
the unique arriving type, or the tie rule's pick when both types arrived this
step.  Sleeping particles at a discovered site activate with the assigned type
and may first move in the following step.

The same state can be advanced by any of the interchangeable kernels (C,
vectorized numpy, plain dict); traces are bit-identical across them because
every random draw is keyed, never sequential.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import rng
from .distributions import InitDistribution, sample_eta, sample_eta_conditioned
from .lattice import Arena, l1_norm
from .rng import RandomnessSource, Site, Stream, StreamKey, mix64, uniform

TYPE1 = 1
TYPE2 = 2
BY_BOTH = 3

TIE_FAIR = 0
TIE_BIASED = 1
TIE_MAJORITY = 2
TIE_ALWAYS1 = 3
TIE_ALWAYS2 = 4

_TIE_KINDS = {
    "faircoin": TIE_FAIR,
    "biased": TIE_BIASED,
    "majority": TIE_MAJORITY,
    "always1": TIE_ALWAYS1,
    "always2": TIE_ALWAYS2,
}

DEFAULT_MAX_ARENA_CELLS = 30_000_000


@dataclass(frozen=True)
class TieRule:
    """Rule deciding the type of a site reached by both types in one step."""

    kind: str = "faircoin"
    q: float = 0.5  # probability that type 1 wins, for kind="biased"

    def __post_init__(self):
        if self.kind not in _TIE_KINDS:
            raise ValueError(f"unknown tie rule {self.kind!r}; choices: "
                             + ", ".join(sorted(_TIE_KINDS)))
        if self.kind == "biased" and not 0.0 <= self.q <= 1.0:
            raise ValueError("biased tie coin needs q in [0, 1]")

    @property
    def code(self) -> int:
        return _TIE_KINDS[self.kind]

    def spec(self) -> str:
        return f"biased({self.q!r})" if self.kind == "biased" else self.kind


def resolve_tie_uniform(count1: int, count2: int, kind: int, q: float,
                        u: float) -> int:
    """Tie decision given the already-drawn coin; shared by every kernel."""
    if kind == TIE_ALWAYS1:
        return TYPE1
    if kind == TIE_ALWAYS2:
        return TYPE2
    if kind == TIE_MAJORITY:
        if count1 > count2:
            return TYPE1
        if count2 > count1:
            return TYPE2
        return TYPE1 if u < 0.5 else TYPE2
    if kind == TIE_BIASED:
        return TYPE1 if u < q else TYPE2
    return TYPE1 if u < 0.5 else TYPE2


def resolve_tie(count1: int, count2: int, rule: TieRule, key: StreamKey) -> int:
    """Type assigned at a site discovered by both types at once."""
    if count1 < 1 or count2 < 1:
        raise ValueError("resolve_tie needs at least one arrival of each type")
    return resolve_tie_uniform(count1, count2, rule.code, rule.q, uniform(key))


@dataclass(frozen=True)
class SimConfig:
    d: int = 2
    eta: InitDistribution = None  # type: ignore[assignment]
    p1: float = 1.0
    p2: float = 1.0
    start1: Site = None  # type: ignore[assignment]
    start2: Optional[Site] = None
    tie: TieRule = TieRule()
    seed: int = 0
    horizon: int = 100
    laziness: str = "independent"  # or "collective"
    condition_start_nonempty: bool = False
    conditioned_sites: tuple[Site, ...] = ()
    max_arena_cells: int = DEFAULT_MAX_ARENA_CELLS
    track_discoverers: bool = True

    def __post_init__(self):
        if self.eta is None:
            from .distributions import Degenerate
            object.__setattr__(self, "eta", Degenerate(1))
        if self.start1 is None:
            object.__setattr__(self, "start1", (0,) * self.d)
        object.__setattr__(self, "start1", tuple(self.start1))
        if self.start2 is not None:
            object.__setattr__(self, "start2", tuple(self.start2))
        object.__setattr__(self, "conditioned_sites",
                           tuple(tuple(s) for s in self.conditioned_sites))
        self.validate()

    def validate(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        for p, name in ((self.p1, "p1"), (self.p2, "p2")):
            if not 0.0 < p <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {p}")
        if len(self.start1) != self.d:
            raise ValueError("start1 has wrong dimension")
        if self.start2 is not None:
            if len(self.start2) != self.d:
                raise ValueError("start2 has wrong dimension")
            if tuple(self.start2) == tuple(self.start1):
                raise ValueError("start sites must differ")
        for s in self.conditioned_sites:
            if len(s) != self.d:
                raise ValueError("conditioned site has wrong dimension")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.laziness not in ("independent", "collective"):
            raise ValueError("laziness must be 'independent' or 'collective'")
        if (self.condition_start_nonempty or self.conditioned_sites) \
                and self.eta.always_empty():
            raise ValueError("cannot condition on non-empty sites when "
                             f"{self.eta.spec()} is always empty")

    @property
    def two_type(self) -> bool:
        return self.start2 is not None

    def arena_radius(self) -> int:
        r = l1_norm(self.start1)
        if self.start2 is not None:
            r = max(r, l1_norm(self.start2))
        return self.horizon + r


@dataclass
class SiteRecord:
    sleeping_count: int
    discovered: bool
    discovery_time: int
    discovered_by: int  # 0 none, 1, 2, 3 both
    assigned_type: int  # 0 none, 1, 2
    eta: int


class WorldState:
    """Mutable run state: arena, particle roster, discovery log."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.source = RandomnessSource(config.seed)
        self.d = config.d
        self.arena = Arena(config.d, config.arena_radius())
        self.dense = self.arena.cells <= config.max_arena_cells
        self.t = 0
        self.n_active = 0
        self.count1 = 0
        self.count2 = 0
        self.pending_from = -1  # first event index awaiting activation (external eta)

        cap = 64
        self.pos = np.empty(cap, dtype=np.int64)
        self.prefix = np.empty(cap, dtype=np.uint64)
        self.ptype = np.empty(cap, dtype=np.int8)
        self.njump = np.empty(cap, dtype=np.int32)
        self.kdelay = np.empty(cap, dtype=np.int32)
        self.act_t = np.empty(cap, dtype=np.int32)
        self.birth = np.empty(cap, dtype=np.int64)
        self.pj = np.empty(cap, dtype=np.int32)

        if self.dense:
            self.disc_time = np.full(self.arena.cells, -1, dtype=np.int32)
            self.disc_by = np.zeros(self.arena.cells, dtype=np.int8)
            self.assigned = np.zeros(self.arena.cells, dtype=np.int8)
            self.disc_map = None
        else:
            self.disc_time = None
            self.disc_by = None
            self.assigned = None
            self.disc_map = {}  # off -> (time, by, assigned)
        self.cnt1 = None  # scratch arenas, allocated only for the C kernel
        self.cnt2 = None
        self.land_off = np.empty(cap, dtype=np.int64)
        self.land_pid = np.empty(cap, dtype=np.int64)
        self.usite_buf = np.empty(cap, dtype=np.int64)

        ecap = 256
        self.ev_t = np.empty(ecap, dtype=np.int32)
        self.ev_off = np.empty(ecap, dtype=np.int64)
        self.ev_by = np.empty(ecap, dtype=np.int8)
        self.ev_assigned = np.empty(ecap, dtype=np.int8)
        self.ev_nact = np.empty(ecap, dtype=np.int32)
        self.ev_count = 0

        self.n_tracked = 0
        self.credit_cnt = np.empty(0, dtype=np.int32)
        self.credit_last = np.empty(0, dtype=np.int32)

        self.conditioned_offs: set[int] = set()

        # kernel parameters derived once
        self.seed_mix = mix64(config.seed & ((1 << 64) - 1))
        self.aux_prefix1 = self.source.prefix((0,) * self.d, TYPE1)
        self.aux_prefix2 = self.source.prefix((0,) * self.d, TYPE2)
        from .distributions import Degenerate
        # conditioning is vacuous for degenerate k >= 1, so the in-kernel
        # activation fast path applies to every degenerate field
        self.eta_degenerate_k = config.eta.k \
            if isinstance(config.eta, Degenerate) else None

    # -- capacity -----------------------------------------------------------

    def _grow(self, arrays: list[np.ndarray], newcap: int) -> list[np.ndarray]:
        out = []
        for a in arrays:
            b = np.empty(newcap, dtype=a.dtype)
            b[:len(a)] = a
            out.append(b)
        return out

    def ensure_particle_capacity(self, total: int):
        cap = len(self.pos)
        if total <= cap:
            return
        while cap < total:
            cap *= 2
        self.pos, self.prefix, self.ptype, self.njump, self.kdelay, \
            self.act_t, self.birth, self.pj = self._grow(
                [self.pos, self.prefix, self.ptype, self.njump, self.kdelay,
                 self.act_t, self.birth, self.pj], cap)
        self.land_off, self.land_pid, self.usite_buf = self._grow(
            [self.land_off, self.land_pid, self.usite_buf], cap)

    def ensure_event_capacity(self, total: int):
        cap = len(self.ev_t)
        if total <= cap:
            return
        while cap < total:
            cap *= 2
        self.ev_t, self.ev_off, self.ev_by, self.ev_assigned, self.ev_nact = \
            self._grow([self.ev_t, self.ev_off, self.ev_by, self.ev_assigned,
                        self.ev_nact], cap)

    # -- structured access --------------------------------------------------

    def site_discovery(self, off: int):
        """(time, by, assigned) or None if undiscovered."""
        if self.dense:
            t = int(self.disc_time[off])
            if t < 0:
                return None
            return t, int(self.disc_by[off]), int(self.assigned[off])
        return self.disc_map.get(off)

    def site_record(self, site: Sequence[int]) -> SiteRecord:
        off = self.arena.encode(site)
        rec = self.site_discovery(off)
        if rec is None:
            return SiteRecord(sleeping_count=0, discovered=False,
                              discovery_time=-1, discovered_by=0,
                              assigned_type=0, eta=-1)
        t, by, assigned = rec
        idx = np.nonzero(self.ev_off[:self.ev_count] == off)[0]
        eta = int(self.ev_nact[idx[0]]) if len(idx) else -1
        return SiteRecord(sleeping_count=0, discovered=True, discovery_time=t,
                          discovered_by=by, assigned_type=assigned, eta=eta)

    def discovered_offsets(self) -> np.ndarray:
        return self.ev_off[:self.ev_count].copy()

    # -- mutation helpers shared by kernels and the engine --------------------

    def append_particles_bulk(self, offs_rep: np.ndarray, js: np.ndarray,
                              ptypes_rep: np.ndarray, act_time: int):
        """Activate particles; offs_rep/js/ptypes_rep aligned per particle."""
        count = len(offs_rep)
        if count == 0:
            return
        self.ensure_particle_capacity(self.n_active + count)
        n0 = self.n_active
        sl = slice(n0, n0 + count)
        self.pos[sl] = offs_rep
        self.birth[sl] = offs_rep
        self.ptype[sl] = ptypes_rep
        self.njump[sl] = 0
        self.kdelay[sl] = 0
        self.act_t[sl] = act_time
        self.pj[sl] = js
        coords = self.arena.decode_many(np.asarray(offs_rep, dtype=np.int64))
        self.prefix[sl] = rng.v_site_prefixes(
            self.config.seed, coords, np.asarray(js, dtype=np.uint64))
        self.n_active += count
        n1 = int(np.count_nonzero(np.asarray(ptypes_rep) == TYPE1))
        self.count1 += n1
        self.count2 += count - n1

    def append_particles_for_site(self, off: int, count: int, ptype: int,
                                  act_time: int):
        """Activate `count` particles born at `off`, indices 1..count."""
        if count <= 0:
            return
        js = np.arange(1, count + 1, dtype=np.int64)
        self.append_particles_bulk(
            np.full(count, off, dtype=np.int64), js,
            np.full(count, ptype, dtype=np.int8), act_time)

    def append_event(self, t: int, off: int, by: int, assigned: int, nact: int):
        self.ensure_event_capacity(self.ev_count + 1)
        i = self.ev_count
        self.ev_t[i] = t
        self.ev_off[i] = off
        self.ev_by[i] = by
        self.ev_assigned[i] = assigned
        self.ev_nact[i] = nact
        self.ev_count = i + 1

    def mark_discovered(self, off: int, t: int, by: int, assigned: int):
        if self.dense:
            self.disc_time[off] = t
            self.disc_by[off] = by
            self.assigned[off] = assigned
        else:
            self.disc_map[off] = (t, by, assigned)


@dataclass
class RunSummary:
    """Immutable digest of one finished run."""

    config: SimConfig
    t_final: int
    d: int
    arena_radius: int
    ev_t: np.ndarray
    ev_off: np.ndarray
    ev_by: np.ndarray
    ev_assigned: np.ndarray
    ev_nact: np.ndarray
    count1: int
    count2: int
    credit_cnt: np.ndarray
    credit_last: np.ndarray
    initial_particles: list  # (site, j, ptype) per initially active particle
    particles: Optional[dict] = None

    def arena(self) -> Arena:
        return Arena(self.d, self.arena_radius)

    def discovered_sites(self) -> np.ndarray:
        """(n, d) coordinates of discovered sites, in event order."""
        return self.arena().decode_many(self.ev_off)

    def discovery_items(self):
        """Yield (site, time, by, assigned, n_activated) per discovery."""
        arena = self.arena()
        for i in range(len(self.ev_t)):
            yield (arena.decode(int(self.ev_off[i])), int(self.ev_t[i]),
                   int(self.ev_by[i]), int(self.ev_assigned[i]),
                   int(self.ev_nact[i]))

    def discovery_time_map(self) -> dict[Site, int]:
        arena = self.arena()
        return {arena.decode(int(o)): int(t)
                for o, t in zip(self.ev_off, self.ev_t)}

    def discovery_time_of(self, site: Sequence[int]) -> Optional[int]:
        try:
            off = self.arena().encode(site)
        except ValueError:
            return None
        idx = np.nonzero(self.ev_off == off)[0]
        return int(self.ev_t[idx[0]]) if len(idx) else None

    def sites_discovered_by(self, ptype: int, upto: Optional[int] = None) -> set:
        """Sites whose discoverers included type `ptype` (ties count for both)."""
        arena = self.arena()
        mask = (self.ev_by == ptype) | (self.ev_by == BY_BOTH)
        if upto is not None:
            mask &= self.ev_t <= upto
        return {arena.decode(int(o)) for o in self.ev_off[mask]}

    def last_activation(self, ptype: int) -> Optional[int]:
        mask = (self.ev_assigned == ptype) & (self.ev_nact > 0)
        if not mask.any():
            return None
        return int(self.ev_t[mask].max())

    def digest(self) -> tuple:
        """Canonical outcome fingerprint: sorted (site, time, by, assigned)."""
        arena = self.arena()
        rows = sorted(
            (arena.decode(int(o)), int(t), int(b), int(a))
            for o, t, b, a in zip(self.ev_off, self.ev_t, self.ev_by,
                                  self.ev_assigned))
        return tuple(rows)


def init_world(config: SimConfig) -> WorldState:
    """World at time 0: start-site particles active, everything else asleep."""
    ws = WorldState(config)
    source = ws.source
    conditioned = set(config.conditioned_sites)
    if config.condition_start_nonempty:
        conditioned.add(config.start1)
        if config.start2 is not None:
            conditioned.add(config.start2)
    ws.conditioned_offs = {ws.arena.encode(s) for s in conditioned}

    starts = [(config.start1, TYPE1)]
    if config.start2 is not None:
        starts.append((config.start2, TYPE2))
    starts.sort(key=lambda st: ws.arena.encode(st[0]))

    for site, ptype in starts:
        off = ws.arena.encode(site)
        if off in ws.conditioned_offs:
            eta = sample_eta_conditioned(config.eta, site, source)
        else:
            eta = sample_eta(config.eta, site, source)
        ws.mark_discovered(off, 0, ptype, ptype)
        ws.append_event(0, off, ptype, ptype, eta)
        ws.append_particles_for_site(off, eta, ptype, 0)

    if config.track_discoverers:
        ws.n_tracked = ws.n_active
        # convention: each start particle is credited with its own start site
        ws.credit_cnt = np.ones(ws.n_tracked, dtype=np.int32)
        ws.credit_last = np.zeros(ws.n_tracked, dtype=np.int32)
    return ws


def _activate_pending(ws: WorldState):
    """Sample counts for sites discovered by the last step (external eta)."""
    config = ws.config
    t = ws.t
    for i in range(ws.pending_from, ws.ev_count):
        off = int(ws.ev_off[i])
        site = ws.arena.decode(off)
        if off in ws.conditioned_offs:
            eta = sample_eta_conditioned(config.eta, site, ws.source)
        else:
            eta = sample_eta(config.eta, site, ws.source)
        ws.ev_nact[i] = eta
        ws.append_particles_for_site(off, eta, int(ws.ev_assigned[i]), t)
    ws.pending_from = -1


def step_world(ws: WorldState, kernel=None) -> WorldState:
    """Advance one step (both phases, including activations)."""
    from .kernels import get_kernel
    k = get_kernel(kernel, ws)
    _ensure_headroom(ws)
    done = k.advance(ws, max_steps=1, stop_off=-1)
    if done != 1:
        raise RuntimeError("kernel failed to advance")  # pragma: no cover
    if ws.pending_from >= 0:
        _activate_pending(ws)
    return ws


def _ensure_headroom(ws: WorldState):
    ws.ensure_event_capacity(ws.ev_count + max(ws.n_active, 16))
    k = ws.eta_degenerate_k
    if k is not None and k > 0:
        ws.ensure_particle_capacity(ws.n_active * (1 + k) + 16)
    if ws.cnt1 is None and ws.dense:
        pass  # allocated by the C kernel wrapper on first use


def run(config: SimConfig, kernel=None, keep_particles: bool = False,
        stop_site: Optional[Site] = None,
        step_hook: Optional[Callable[[WorldState], None]] = None) -> RunSummary:
    """Run the process for config.horizon steps (or until stop_site is found)."""
    ws = init_world(config)
    from .kernels import get_kernel
    k = get_kernel(kernel, ws)
    stop_off = -1
    if stop_site is not None:
        stop_off = ws.arena.encode(stop_site)
        if ws.site_discovery(stop_off) is not None:
            return summarize(ws, keep_particles)
    if step_hook is not None:
        step_hook(ws)
    while ws.t < config.horizon:
        _ensure_headroom(ws)
        budget = 1 if step_hook is not None else config.horizon - ws.t
        done = k.advance(ws, max_steps=budget, stop_off=stop_off)
        if ws.pending_from >= 0:
            _activate_pending(ws)
        if step_hook is not None:
            step_hook(ws)
        if stop_off >= 0 and ws.site_discovery(stop_off) is not None:
            break
        if done == 0 and ws.pending_from < 0 and ws.n_active == 0:
            # inert world: nothing will ever move again, but time still passes
            ws.t = config.horizon
            break
    return summarize(ws, keep_particles)


def summarize(ws: WorldState, keep_particles: bool = False) -> RunSummary:
    n = ws.ev_count
    initial = []
    for i in range(ws.n_tracked):
        initial.append((ws.arena.decode(int(ws.birth[i])), int(ws.pj[i]),
                        int(ws.ptype[i])))
    particles = None
    if keep_particles:
        m = ws.n_active
        particles = {
            "pos": ws.pos[:m].copy(), "birth": ws.birth[:m].copy(),
            "ptype": ws.ptype[:m].copy(), "njump": ws.njump[:m].copy(),
            "act_t": ws.act_t[:m].copy(), "pj": ws.pj[:m].copy(),
        }
    return RunSummary(
        config=ws.config, t_final=ws.t, d=ws.d, arena_radius=ws.arena.radius,
        ev_t=ws.ev_t[:n].copy(), ev_off=ws.ev_off[:n].copy(),
        ev_by=ws.ev_by[:n].copy(), ev_assigned=ws.ev_assigned[:n].copy(),
        ev_nact=ws.ev_nact[:n].copy(),
        count1=ws.count1, count2=ws.count2,
        credit_cnt=ws.credit_cnt[:ws.n_tracked].copy(),
        credit_last=ws.credit_last[:ws.n_tracked].copy(),
        initial_particles=initial, particles=particles)


def coupled_run(config: SimConfig, p_values: Sequence[float], vary: str = "p1",
                kernel=None, keep_particles: bool = False) -> list[RunSummary]:
    """Run once per p value on the same realization (same seed => same world).

    One-type runs vary p1 (the only laziness).  Two-type runs vary `vary`
    while the other parameter stays fixed.
    """
    if vary not in ("p1", "p2"):
        raise ValueError("vary must be 'p1' or 'p2'")
    out = []
    for p in p_values:
        if not 0.0 < p <= 1.0:
            raise ValueError(f"p must be in (0, 1], got {p}")
        cfg = replace(config, **{vary: p})
        out.append(run(cfg, kernel=kernel, keep_particles=keep_particles))
    return out
