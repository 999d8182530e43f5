"""Product-measure initial particle counts, sampled lazily per site.

Each site's count is a pure function of (distribution, site, seed): one
uniform from the site's field stream pushed through the distribution's
quantile function.  Conditioning a site on being non-empty is rejection over
successive attempt counters of the same stream, which under the product
measure is exact and leaves every other site untouched.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_right
from typing import Sequence

from .rng import RandomnessSource, Site

_COUNT_CAP = 2**31 - 1


class InitDistribution:
    """Base: a nonnegative-integer law with an explicit quantile function."""

    name: str

    def quantile(self, u: float) -> int:
        raise NotImplementedError

    def always_empty(self) -> bool:
        """True when P(count >= 1) = 0, which makes conditioning impossible."""
        return False

    def spec(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.spec()!r})"

    def __eq__(self, other):
        return isinstance(other, InitDistribution) and self.spec() == other.spec()

    def __hash__(self):
        return hash(self.spec())


class Degenerate(InitDistribution):
    name = "degenerate"

    def __init__(self, k: int):
        if k < 0:
            raise ValueError("degenerate count must be >= 0")
        self.k = int(k)

    def quantile(self, u: float) -> int:
        return self.k

    def always_empty(self) -> bool:
        return self.k == 0

    def spec(self) -> str:
        return f"degenerate({self.k})"


class Bernoulli(InitDistribution):
    name = "bernoulli"

    def __init__(self, q: float):
        if not 0.0 <= q <= 1.0:
            raise ValueError("bernoulli parameter must be in [0, 1]")
        self.q = float(q)

    def quantile(self, u: float) -> int:
        return 1 if u < self.q else 0

    def always_empty(self) -> bool:
        return self.q == 0.0

    def spec(self) -> str:
        return f"bernoulli({self.q!r})"


class Poisson(InitDistribution):
    name = "poisson"

    def __init__(self, lam: float):
        if not lam > 0:
            raise ValueError("poisson rate must be > 0")
        self.lam = float(lam)
        # cumulative table up to negligible tail mass; the last step is capped
        cum = []
        pmf = math.exp(-self.lam)
        total = pmf
        k = 0
        while total < 1.0 - 1e-15:
            cum.append(total)
            k += 1
            pmf *= self.lam / k
            total += pmf
            if k > 10_000_000:  # pragma: no cover
                break
        cum.append(1.0)
        self._cum = cum

    def quantile(self, u: float) -> int:
        return bisect_right(self._cum, u)

    def spec(self) -> str:
        return f"poisson({self.lam!r})"


class Geometric(InitDistribution):
    """P(count = n) = q * (1-q)^n on n = 0, 1, 2, ..."""

    name = "geometric"

    def __init__(self, q: float):
        if not 0.0 < q <= 1.0:
            raise ValueError("geometric parameter must be in (0, 1]")
        self.q = float(q)

    def quantile(self, u: float) -> int:
        if self.q == 1.0:
            return 0
        n = int(math.log(1.0 - u) / math.log(1.0 - self.q))
        return min(max(n, 0), _COUNT_CAP)

    def always_empty(self) -> bool:
        return self.q == 1.0

    def spec(self) -> str:
        return f"geometric({self.q!r})"


class HeavyLogTail(InitDistribution):
    """P(count >= n) = min(1, (log n)^-delta) for 2 <= n <= cap.

    Support starts at 2; counts saturate at `cap`.  Inverse transform:
    count = min(cap, floor(exp(u^(-1/delta)))).
    """

    name = "heavylog"

    def __init__(self, delta: float, cap: int = _COUNT_CAP):
        if not delta > 0:
            raise ValueError("heavylog delta must be > 0")
        if cap < 2:
            raise ValueError("heavylog cap must be >= 2")
        self.delta = float(delta)
        self.cap = int(cap)
        self._t_cap = math.log(self.cap) + 1.0  # exponent beyond which count >= cap

    def quantile(self, u: float) -> int:
        if u <= 0.0:
            return self.cap
        t = u ** (-1.0 / self.delta)
        if t >= self._t_cap:
            return self.cap
        return min(self.cap, int(math.exp(t)))

    def spec(self) -> str:
        if self.cap == _COUNT_CAP:
            return f"heavylog(delta={self.delta!r})"
        return f"heavylog(delta={self.delta!r}, cap={self.cap})"


def sample_eta(dist: InitDistribution, site: Sequence[int],
               source: RandomnessSource, attempt: int = 0) -> int:
    """Initial particle count at `site`; pure in (dist, site, seed, attempt)."""
    if isinstance(dist, Degenerate):
        return dist.k
    return dist.quantile(source.eta_uniform(site, attempt))


def sample_eta_conditioned(dist: InitDistribution, site: Sequence[int],
                           source: RandomnessSource) -> int:
    """Count at `site` under the law of (count | count >= 1)."""
    if dist.always_empty():
        raise ValueError(f"cannot condition {dist.spec()} on a non-empty site: "
                         "P(count >= 1) = 0")
    attempt = 0
    while True:
        n = sample_eta(dist, site, source, attempt)
        if n >= 1:
            return n
        attempt += 1
        if attempt > 1_000_000:  # pragma: no cover
            raise RuntimeError("conditioning rejection did not terminate")


def condition_nonempty(dist: InitDistribution, sites: Sequence[Site],
                       source: RandomnessSource) -> dict[Site, int]:
    """Counts for the listed sites under per-site conditioning on >= 1."""
    return {tuple(s): sample_eta_conditioned(dist, s, source) for s in sites}


# ---------------------------------------------------------------------------
# Spec grammar for config files, e.g. eta = heavylog(delta=1.0, cap=500)

_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*\(\s*(.*?)\s*\)\s*$", re.IGNORECASE)

_KINDS = {
    "degenerate": (Degenerate, ("k",)),
    "bernoulli": (Bernoulli, ("q",)),
    "poisson": (Poisson, ("lam",)),
    "geometric": (Geometric, ("q",)),
    "heavylog": (HeavyLogTail, ("delta", "cap")),
}


def parse_eta(text: str) -> InitDistribution:
    """Parse a distribution spec string like ``poisson(2.0)``."""
    m = _SPEC_RE.match(text)
    if not m:
        raise ValueError(f"malformed distribution spec {text!r}; "
                         "expected name(arg, ...)")
    name = m.group(1).lower()
    if name not in _KINDS:
        raise ValueError(f"unknown distribution {name!r}; choices: "
                         + ", ".join(sorted(_KINDS)))
    cls, param_names = _KINDS[name]
    args, kwargs = [], {}
    body = m.group(2)
    if body:
        for part in body.split(","):
            part = part.strip()
            if "=" in part:
                key, _, val = part.partition("=")
                key = key.strip().lower()
                if key not in param_names:
                    raise ValueError(f"unknown parameter {key!r} for {name}")
                kwargs[key] = _parse_number(val.strip(), text)
            else:
                if kwargs:
                    raise ValueError(f"positional argument after keyword in {text!r}")
                args.append(_parse_number(part, text))
    try:
        dist = cls(*args, **kwargs)
    except TypeError as exc:
        raise ValueError(f"bad arguments for {name} in {text!r}: {exc}") from None
    return dist


def _parse_number(token: str, context: str):
    try:
        if re.fullmatch(r"[+-]?\d+", token):
            return int(token)
        return float(token)
    except ValueError:
        raise ValueError(f"bad numeric value {token!r} in {context!r}") from None
