"""frogsim: seeded Monte Carlo simulation of one- and two-type frog models
on the Z^d lattice with lazy random walks."""

from .distributions import (Bernoulli, Degenerate, Geometric, HeavyLogTail,
                            InitDistribution, Poisson, condition_nonempty,
                            parse_eta, sample_eta, sample_eta_conditioned)
from .engine import (SimConfig, TieRule, RunSummary, WorldState, coupled_run,
                     init_world, resolve_tie, run, step_world)
from .kernels import HAVE_C_KERNEL, available_kernels
from .lattice import Arena, diamond_sites, diamond_size, l1_norm, neighbors
from .rng import (Direction, RandomnessSource, Site, Stream, StreamKey,
                  derive_seed, direction, uniform)

__version__ = "0.1.0"

__all__ = [
    "Arena", "Bernoulli", "Degenerate", "Direction", "Geometric",
    "HAVE_C_KERNEL", "HeavyLogTail", "InitDistribution", "Poisson",
    "RandomnessSource", "RunSummary", "SimConfig", "Site", "Stream",
    "StreamKey", "TieRule", "WorldState", "available_kernels",
    "condition_nonempty", "coupled_run", "derive_seed", "diamond_sites",
    "diamond_size", "direction", "init_world", "l1_norm", "neighbors",
    "parse_eta", "resolve_tie", "run", "sample_eta",
    "sample_eta_conditioned", "step_world", "uniform",
]
