"""Optimal content replication and delivery on a toroidal grid.

Solves the continuous replication-density problem exactly, truncates the
densities to powers of 1/4, tiles the resulting replicas onto a square
torus, simulates nearest-replica shortest-path delivery, and checks the
closed-form scaling laws — with brute-force baselines for all of it.
"""

from .asymptotics import (
    CapacityBreakdown,
    RegimeReport,
    SweepResult,
    analytic_capacity,
    classify_regime,
    estimate_l_hat,
    estimate_r_hat,
    sweep,
)
from .delivery import (
    LinkLoadMap,
    avg_link,
    cluster_hop_sum,
    link_loads,
    per_file_link_bound,
    rhombus_lower_hop_sum,
    serve_map,
    total_hop_load,
    worst_link,
)
from .density import (
    CanonicalProfile,
    DensityProfile,
    a_coeff,
    canonical_truncate,
    cd_cost,
    kkt_residuals,
    lower_bound,
    solve_cd,
)
from .errors import InfeasibleError, InternalInvariantError, InvalidInputError
from .grid import GridSpec, Link, RouteSet, enumerate_links, hop_distance, shortest_routes
from .oracle import OracleResult, brute_force_an, brute_force_cd, enumerate_cluster
from .placement import (
    CachePlacement,
    canonical_place,
    diagonal_order,
    render_matrix,
    validate_capacity,
)
from .popularity import Popularity, harmonic, harmonic_bounds, load_popularity, zipf

__all__ = [
    "CapacityBreakdown",
    "RegimeReport",
    "SweepResult",
    "analytic_capacity",
    "classify_regime",
    "estimate_l_hat",
    "estimate_r_hat",
    "sweep",
    "LinkLoadMap",
    "avg_link",
    "cluster_hop_sum",
    "link_loads",
    "per_file_link_bound",
    "rhombus_lower_hop_sum",
    "serve_map",
    "total_hop_load",
    "worst_link",
    "CanonicalProfile",
    "DensityProfile",
    "a_coeff",
    "canonical_truncate",
    "cd_cost",
    "kkt_residuals",
    "lower_bound",
    "solve_cd",
    "InfeasibleError",
    "InternalInvariantError",
    "InvalidInputError",
    "GridSpec",
    "Link",
    "RouteSet",
    "enumerate_links",
    "hop_distance",
    "shortest_routes",
    "OracleResult",
    "brute_force_an",
    "brute_force_cd",
    "enumerate_cluster",
    "CachePlacement",
    "canonical_place",
    "diagonal_order",
    "render_matrix",
    "validate_capacity",
    "Popularity",
    "harmonic",
    "harmonic_bounds",
    "load_popularity",
    "zipf",
]

__version__ = "0.1.0"
