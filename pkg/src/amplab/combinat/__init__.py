"""Partition lattices, pairings and closed-form tensor-network limits."""
from .hgraph import BipartiteMultigraph, HGraphError, hgraph_limit, hgraph_numeric
from .limits import (
    CapExceeded,
    LimitResult,
    PairFrame,
    limval_invariant_sym,
    limval_wigner_rect,
    limval_wigner_sym,
)
from .moments import (
    EmpiricalMoments,
    IndependentMoments,
    MissingMomentError,
    MomentOracle,
    RandomIntegerMoments,
    SpectralMoments,
    TableMoments,
    standard_normal_moments,
)
from .partitions import (
    GroundSetError,
    Partition,
    bell_number,
    double_factorial,
    enumerate_pairings,
    enumerate_partitions,
    geodesic_chains,
    interval,
    moeb_pairings,
    moebius_partitions,
    pairings,
    partition_join,
    partition_metric,
)

__all__ = [
    "BipartiteMultigraph",
    "CapExceeded",
    "EmpiricalMoments",
    "GroundSetError",
    "HGraphError",
    "IndependentMoments",
    "LimitResult",
    "MissingMomentError",
    "MomentOracle",
    "PairFrame",
    "Partition",
    "RandomIntegerMoments",
    "SpectralMoments",
    "TableMoments",
    "bell_number",
    "double_factorial",
    "enumerate_pairings",
    "enumerate_partitions",
    "geodesic_chains",
    "hgraph_limit",
    "hgraph_numeric",
    "interval",
    "limval_invariant_sym",
    "limval_wigner_rect",
    "limval_wigner_sym",
    "moeb_pairings",
    "moebius_partitions",
    "pairings",
    "partition_join",
    "partition_metric",
    "standard_normal_moments",
]
