"""Finite-file-size decentralized coded caching: placement, delivery schemes and a Monte Carlo harness."""

from .bounds import yma_bound, yma_bound_bruteforce
from .gf2 import BitMatrix, ColorKnowledge, build_rlc, decodable, decodable_all, rank, xor_pad
from .graph_schemes import (
    ConflictGraph,
    ahglc_color,
    ahglc_delivery,
    build_conflict_graph,
    coloring_to_log,
    hglc_color,
    hglc_delivery,
)
from .harness import SCHEMES, ExperimentSpec, TrialResult, export, monte_carlo, run_trial, summarize
from .model import (
    CacheState,
    DemandDistribution,
    DemandVector,
    SystemConfig,
    partition_subfiles,
    random_placement,
    sample_demands,
    subfile_fraction,
)
from .transmission import Codeword, TransmissionLog
from .xor_schemes import (
    decman_delivery,
    getbits,
    hcd_delivery,
    leader_set,
    mhcd_delivery,
    uncoded_delivery,
    yma_delivery,
)

__version__ = "0.1.0"
