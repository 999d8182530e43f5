"""Z^d lattice geometry: L1 norms, canonical neighbor order, site encoding.

Sites are plain integer tuples.  The engine flattens them into offsets of a
dense array arena covering the L1 ball every run is confined to; the encoding
is a pure function of (dimension, radius) so traces are storage-independent.
"""

from __future__ import annotations

from itertools import product
from typing import Iterator, Sequence

import numpy as np

from .rng import Site


def l1_norm(site: Sequence[int]) -> int:
    return sum(abs(c) for c in site)


def direction_offsets(d: int) -> list[Site]:
    """The 2d unit steps in canonical order: axis ascending, -1 before +1."""
    offs = []
    for axis in range(d):
        for sign in (-1, 1):
            step = [0] * d
            step[axis] = sign
            offs.append(tuple(step))
    return offs


def neighbors(site: Sequence[int]) -> list[Site]:
    """The 2d sites at L1 distance 1, in canonical order."""
    d = len(site)
    out = []
    for axis in range(d):
        for sign in (-1, 1):
            s = list(site)
            s[axis] += sign
            out.append(tuple(s))
    return out


def diamond_sites(r: int, d: int) -> Iterator[Site]:
    """All lattice points with L1 norm <= r."""
    if r < 0:
        return
    if d == 1:
        for x in range(-r, r + 1):
            yield (x,)
        return
    for head in range(-r, r + 1):
        for tail in diamond_sites(r - abs(head), d - 1):
            yield (head,) + tail


def diamond_size(r: int, d: int) -> int:
    """Number of lattice points in the L1 ball of radius r."""
    if r < 0:
        return 0
    if d == 1:
        return 2 * r + 1
    return sum(diamond_size(r - abs(head), d - 1) for head in range(-r, r + 1))


class Arena:
    """Dense index space for the L1 ball of radius `radius` around the origin.

    Offsets are mixed-radix encodings of shifted coordinates, axis 0 slowest.
    The same encoding is used as a dict key in sparse mode, so both storage
    modes order sites identically.
    """

    def __init__(self, d: int, radius: int):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        if radius < 0:
            raise ValueError("radius must be >= 0")
        self.d = d
        self.radius = radius
        self.side = 2 * radius + 1
        self.cells = self.side ** d
        if self.cells > 2**62:
            raise ValueError("arena index space exceeds 64-bit offsets")
        strides = []
        for axis in range(d):
            strides.append(self.side ** (d - 1 - axis))
        self.strides = tuple(strides)

    def encode(self, site: Sequence[int]) -> int:
        off = 0
        for c, stride in zip(site, self.strides):
            if abs(c) > self.radius:
                raise ValueError(f"site {tuple(site)} outside arena radius {self.radius}")
            off += (c + self.radius) * stride
        return off

    def decode(self, off: int) -> Site:
        coords = []
        for stride in self.strides:
            coords.append(off // stride % self.side - self.radius)
        return tuple(coords)

    def decode_many(self, offs: np.ndarray) -> np.ndarray:
        """(n,) offsets -> (n, d) signed coordinates."""
        out = np.empty((len(offs), self.d), dtype=np.int64)
        for axis, stride in enumerate(self.strides):
            out[:, axis] = offs // stride % self.side - self.radius
        return out

    def encode_many(self, coords: np.ndarray) -> np.ndarray:
        offs = np.zeros(coords.shape[0], dtype=np.int64)
        for axis, stride in enumerate(self.strides):
            offs += (coords[:, axis] + self.radius) * stride
        return offs

    def l1_many(self, offs: np.ndarray) -> np.ndarray:
        return np.abs(self.decode_many(offs)).sum(axis=1)
