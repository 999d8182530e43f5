"""Keyed deterministic randomness shared by every part of the simulator.

All randomness is a pure function of a structured key, never of generator
state.  A single 64-bit seed fixes one realization of the whole random
environment: the initial particle counts, every particle's walk trajectory,
its laziness delays, and the tie-break coins.  Runs that share a seed share
that environment exactly, which is what makes coupled comparisons across
laziness parameters meaningful realization by realization.

Key layout: ``(seed, site, particle_index, stream, counter1, counter2)``.
The site/index pair identifies a particle forever (activation never re-keys
it); the stream separates the uses of randomness attached to one particle or
site; the counters index draws within a stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Sequence

import numpy as np

Site = tuple[int, ...]

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


class Stream(IntEnum):
    ETA_FIELD = 0
    JUMP = 1
    DELAY = 2
    TIE_BREAK = 3
    AUX = 4


@dataclass(frozen=True)
class StreamKey:
    """Full address of one uniform draw."""

    seed: int
    stream: Stream
    site: Site
    particle_index: int = 0
    counter1: int = 0
    counter2: int = 0


class Direction(NamedTuple):
    axis: int
    sign: int


def mix64(z: int) -> int:
    """SplitMix64 finalizer; full avalanche on a 64-bit word."""
    z &= _M64
    z = ((z ^ (z >> 30)) * _MIX_A) & _M64
    z = ((z ^ (z >> 27)) * _MIX_B) & _M64
    return z ^ (z >> 31)


def absorb(h: int, v: int) -> int:
    """Fold one (signed) integer field into the running key hash."""
    return mix64(((h ^ (v & _M64)) * _GOLDEN) & _M64)


def site_prefix(seed: int, site: Sequence[int], particle_index: int) -> int:
    """Hash of the particle identity (seed, site, j); cached by the engine."""
    h = mix64(seed & _M64)
    for c in site:
        h = absorb(h, c)
    return absorb(h, particle_index)


def finalize(prefix: int, stream: int, counter1: int, counter2: int) -> int:
    h = absorb(prefix, stream)
    h = absorb(h, counter1)
    return absorb(h, counter2)


def uniform(key: StreamKey) -> float:
    """Deterministic uniform on [0, 1) for the given key (53-bit mantissa)."""
    h = finalize(site_prefix(key.seed, key.site, key.particle_index),
                 int(key.stream), key.counter1, key.counter2)
    return (h >> 11) * _INV_2_53


def direction_index(key: StreamKey, d: int) -> int:
    """floor(u * 2d) computed in exact integer arithmetic."""
    h = finalize(site_prefix(key.seed, key.site, key.particle_index),
                 int(key.stream), key.counter1, key.counter2)
    return ((h >> 11) * (2 * d)) >> 53


def direction(key: StreamKey, d: int) -> Direction:
    """Uniform pick among the 2d axis directions, axis ascending, -1 before +1."""
    idx = direction_index(key, d)
    return Direction(idx >> 1, 1 if idx & 1 else -1)


def derive_seed(seed: int, index: int) -> int:
    """Replica seed for replica `index`, derived on the Aux stream."""
    return finalize(mix64(seed & _M64), int(Stream.AUX), index, 0)


class RandomnessSource:
    """One realization of the random environment, addressed by seed.

    Thin convenience wrapper over the keyed hash; every method is a pure
    function of (seed, arguments).
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._mixed = mix64(self.seed & _M64)

    def prefix(self, site: Sequence[int], j: int) -> int:
        h = self._mixed
        for c in site:
            h = absorb(h, c)
        return absorb(h, j)

    def eta_uniform(self, site: Sequence[int], attempt: int = 0) -> float:
        h = finalize(self.prefix(site, 0), Stream.ETA_FIELD, 0, attempt)
        return (h >> 11) * _INV_2_53

    def delay_uniform(self, birth_site: Sequence[int], j: int, n: int, k: int) -> float:
        h = finalize(self.prefix(birth_site, j), Stream.DELAY, n, k)
        return (h >> 11) * _INV_2_53

    def jump_direction(self, birth_site: Sequence[int], j: int, n: int, d: int) -> Direction:
        """Direction of a particle's n-th jump (n >= 1)."""
        h = finalize(self.prefix(birth_site, j), Stream.JUMP, n, 0)
        idx = ((h >> 11) * (2 * d)) >> 53
        return Direction(idx >> 1, 1 if idx & 1 else -1)

    def tie_uniform(self, site: Sequence[int], time: int) -> float:
        h = finalize(self.prefix(site, 0), Stream.TIE_BREAK, time, 0)
        return (h >> 11) * _INV_2_53

    def collective_uniform(self, d: int, ptype: int, time: int) -> float:
        """The single per-(type, time) move coin of the collective mode."""
        h = finalize(self.prefix((0,) * d, ptype), Stream.AUX, time, 0)
        return (h >> 11) * _INV_2_53

    def walk_position(self, birth_site: Sequence[int], j: int, n: int) -> Site:
        """Site reached after the first n jumps of particle (birth_site, j)."""
        if n < 0:
            raise ValueError("jump count must be nonnegative")
        d = len(birth_site)
        pos = list(birth_site)
        pf = self.prefix(birth_site, j)
        for i in range(1, n + 1):
            h = finalize(pf, Stream.JUMP, i, 0)
            idx = ((h >> 11) * (2 * d)) >> 53
            pos[idx >> 1] += 1 if idx & 1 else -1
        return tuple(pos)


# ---------------------------------------------------------------------------
# Vectorized counterparts (numpy uint64, bit-identical to the scalar path).

_U = np.uint64
_V_GOLDEN = _U(_GOLDEN)
_V_MIX_A = _U(_MIX_A)
_V_MIX_B = _U(_MIX_B)


def v_mix64(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> _U(30))
    z = z * _V_MIX_A
    z = z ^ (z >> _U(27))
    z = z * _V_MIX_B
    return z ^ (z >> _U(31))


def v_absorb(h: np.ndarray, v) -> np.ndarray:
    va = np.asarray(v)
    if va.dtype != np.uint64:
        va = va.astype(np.int64, copy=False).view(np.uint64)
    return v_mix64((h ^ va) * _V_GOLDEN)


def v_finalize(prefix: np.ndarray, stream: int, counter1, counter2) -> np.ndarray:
    h = v_absorb(prefix, _U(int(stream)))
    h = v_absorb(h, counter1)
    return v_absorb(h, counter2)


def v_uniform_bits(h: np.ndarray) -> np.ndarray:
    return (h >> _U(11)).astype(np.float64) * _INV_2_53


def v_site_prefixes(seed: int, coords: np.ndarray, j) -> np.ndarray:
    """Prefixes for many particles; coords has shape (n, d), j scalar or (n,)."""
    n = coords.shape[0]
    h = np.full(n, mix64(seed & _M64), dtype=np.uint64)
    for axis in range(coords.shape[1]):
        h = v_absorb(h, coords[:, axis])
    return v_absorb(h, j if np.ndim(j) else _U(int(j)))


def v_walk_endpoints(seed: int, birth_site: Sequence[int], j0: int,
                     n_walks: int, n_steps: int) -> np.ndarray:
    """Endpoints after n_steps jumps for walkers j0..j0+n_walks-1 from one site.

    Used for direct walk statistics without running the engine.
    """
    d = len(birth_site)
    coords = np.tile(np.asarray(birth_site, dtype=np.int64), (n_walks, 1))
    prefixes = v_site_prefixes(seed, coords, np.arange(j0, j0 + n_walks, dtype=np.uint64))
    pos = coords.copy()
    two_d = _U(2 * d)
    for step in range(1, n_steps + 1):
        h = v_finalize(prefixes, Stream.JUMP, _U(step), _U(0))
        idx = ((h >> _U(11)) * two_d) >> _U(53)
        axis = (idx >> _U(1)).astype(np.int64)
        sign = np.where(idx & _U(1), 1, -1).astype(np.int64)
        for a in range(d):
            pos[:, a] += np.where(axis == a, sign, 0)
    return pos
