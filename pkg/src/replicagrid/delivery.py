"""Per-link traffic under nearest-replica shortest-path delivery.

Each node issues requests at unit rate; a request for file m is served by
the nearest replica (ties to the north, then west).  I-shaped routes carry
the full request stream, the two L-shaped routes half each.  Both traffic
directions accumulate on the same undirected link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .grid import (
    ROW,
    GridSpec,
    Node,
    RouteSet,
    enumerate_links,
    link_index,
    shortest_routes,
)
from .placement import CachePlacement
from .popularity import Popularity

REQUEST_RATE = 1.0  # per-node request rate; other rates follow by scaling


@dataclass(frozen=True)
class LinkLoadMap:
    """Loads for the 2N links, indexed in enumerate_links order."""

    grid: GridSpec
    loads: np.ndarray

    def __post_init__(self) -> None:
        loads = np.asarray(self.loads, dtype=float).copy()
        loads.setflags(write=False)
        object.__setattr__(self, "loads", loads)


def worst_link(load_map: LinkLoadMap) -> float:
    if load_map.loads.size == 0:
        raise InvalidInputError("grid has no links")
    return float(load_map.loads.max())


def avg_link(load_map: LinkLoadMap) -> float:
    if load_map.loads.size == 0:
        raise InvalidInputError("grid has no links")
    return float(load_map.loads.mean())


def _replica_coords(placement: CachePlacement, m: int) -> np.ndarray:
    reps = placement.replica_nodes(m)
    if not reps:
        raise InvalidInputError(f"file {m} is cached nowhere")
    return np.array(reps, dtype=np.int64)


def _nearest_replica_choice(grid: GridSpec, reps: np.ndarray) -> np.ndarray:
    """For every node (row-major) the index into reps of its serving replica.

    Selection key: hop distance, then north-before-south, then west-before-
    east, then replica coordinates — all folded into one integer so the
    argmin is exact.
    """
    side = grid.side
    n = grid.node_count
    xs = np.arange(n, dtype=np.int64) // side
    ys = np.arange(n, dtype=np.int64) % side

    def axis_parts(node_c, rep_c):
        fwd = (rep_c[None, :] - node_c[:, None]) % side
        dist = np.minimum(fwd, side - fwd)
        signed = np.where(2 * fwd >= side, fwd - side, fwd)
        signed[fwd == 0] = 0
        pref = np.where(signed < 0, 0, np.where(signed == 0, 1, 2))
        return dist, pref

    dist_x, pref_x = axis_parts(xs, reps[:, 0])
    dist_y, pref_y = axis_parts(ys, reps[:, 1])
    dist = dist_x + dist_y
    key = ((dist * 3 + pref_x) * 3 + pref_y) * (side * side)
    key += reps[None, :, 0] * side + reps[None, :, 1]
    return np.argmin(key, axis=1)


def serve_map(
    grid: GridSpec, placement: CachePlacement, m: int
) -> dict[Node, tuple[Node, RouteSet]]:
    """Map every node to its serving replica of m and the routes used."""
    reps = _replica_coords(placement, m)
    choice = _nearest_replica_choice(grid, reps)
    out: dict[Node, tuple[Node, RouteSet]] = {}
    for idx, node in enumerate(grid.nodes()):
        server = (int(reps[choice[idx], 0]), int(reps[choice[idx], 1]))
        out[node] = (server, shortest_routes(grid, node, server))
    return out


def _deposit_file_loads(
    grid: GridSpec, placement: CachePlacement, m: int, weight: float, loads: np.ndarray
) -> None:
    for _node, (_server, routes) in serve_map(grid, placement, m).items():
        for frac, path in routes.routes:
            w = weight * float(frac)
            for a, b in zip(path, path[1:]):
                loads[link_index(grid, a, b)] += w


def link_loads(grid: GridSpec, placement: CachePlacement, pop: Popularity) -> LinkLoadMap:
    """Accumulate per-link traffic over all files.

    Requires a nu >= 1 grid; the single-node grid has no links to load.
    """
    if grid.nu == 0:
        raise InvalidInputError("simulation requires nu >= 1 (the 1-node grid has no links)")
    if placement.file_count != pop.m_count:
        raise InvalidInputError("placement and popularity sizes differ")
    loads = np.zeros(2 * grid.node_count)
    for m in range(placement.file_count):
        _deposit_file_loads(grid, placement, m, REQUEST_RATE * float(pop.probs[m]), loads)
    return LinkLoadMap(grid=grid, loads=loads)


def total_hop_load(grid: GridSpec, placement: CachePlacement, pop: Popularity) -> float:
    """Sum over nodes and files of hop-distance-to-nearest-replica times p_m.

    This equals the sum of all link loads (total-load identity).
    """
    side = grid.side
    total = 0.0
    for m in range(placement.file_count):
        reps = _replica_coords(placement, m)
        n = grid.node_count
        xs = np.arange(n, dtype=np.int64) // side
        ys = np.arange(n, dtype=np.int64) % side
        fx = (reps[None, :, 0] - xs[:, None]) % side
        fy = (reps[None, :, 1] - ys[:, None]) % side
        dist = np.minimum(fx, side - fx) + np.minimum(fy, side - fy)
        total += float(pop.probs[m]) * float(dist.min(axis=1).sum())
    return REQUEST_RATE * total


def cluster_hop_sum(level: int) -> int:
    """Total hops from all nodes of a 2^level square cluster to its replica."""
    if level < 0:
        raise InvalidInputError(f"level must be >= 0, got {level}")
    if level == 0:
        return 0
    return 2 ** (3 * level - 1)


def rhombus_lower_hop_sum(cluster_size: float) -> float:
    """Hop-sum lower bound for a cluster of Q nodes around one replica.

    Uses the rhombus radius rho = (-1 + sqrt(2Q - 1)) / 2 and the exact
    ring-sum 2 rho (rho + 1) (2 rho + 1) / 3.
    """
    q = float(cluster_size)
    if q < 1:
        raise InvalidInputError(f"cluster size must be >= 1, got {cluster_size}")
    rho = 0.5 * (-1.0 + math.sqrt(2.0 * q - 1.0))
    return 2.0 * rho * (rho + 1.0) * (2.0 * rho + 1.0) / 3.0


def per_file_link_loads(
    grid: GridSpec, placement: CachePlacement, m: int, p_m: float = 1.0
) -> np.ndarray:
    """Link loads generated by file m alone, at popularity weight p_m."""
    loads = np.zeros(2 * grid.node_count)
    _deposit_file_loads(grid, placement, m, REQUEST_RATE * p_m, loads)
    return loads


def per_file_link_bound(
    grid: GridSpec, placement: CachePlacement, m: int, p_m: float = 1.0
) -> bool:
    """Check the per-file link-load bounds for a canonically placed file.

    Verifies that cross-cluster links carry nothing, links sharing a row or
    column with the serving replica carry at most
    2^(k-1) (2^(k-1) + 1/2) p_m, and all other links at most 2^(k-2) p_m,
    where 4^-k is the file's replication density.
    """
    reps = _replica_coords(placement, m)
    w_count = reps.shape[0]
    ratio = grid.node_count / w_count
    level = round(math.log(ratio, 4))
    if 4 ** level != ratio:
        raise InvalidInputError(f"file {m} does not have a power-of-4 replica count")

    loads = per_file_link_loads(grid, placement, m, p_m)
    if level == 0:
        return bool(np.all(loads <= 1e-12))

    choice = _nearest_replica_choice(grid, reps)
    servers = {node: int(choice[i]) for i, node in enumerate(grid.nodes())}

    aligned_cap = 2.0 ** (level - 1) * (2.0 ** (level - 1) + 0.5) * p_m
    off_cap = 2.0 ** (level - 2) * p_m
    tol = 1e-12
    side = grid.side
    for idx, link in enumerate(enumerate_links(grid)):
        load = loads[idx]
        if load <= tol:
            continue
        (x, y) = link.origin
        other = (x, (y + 1) % side) if link.axis == ROW else ((x + 1) % side, y)
        if servers[link.origin] != servers[other]:
            return False  # cross-cluster links must carry no traffic of m
        w = reps[servers[link.origin]]
        if link.axis == ROW:
            aligned = x == int(w[0])
        else:
            aligned = y == int(w[1])
        cap = aligned_cap if aligned else off_cap
        if load > cap + tol:
            return False
    return True


def to_csv(load_map: LinkLoadMap) -> str:
    """CSV rendering: link_index, origin_x, origin_y, axis, load + summary."""
    lines = ["link_index,origin_x,origin_y,axis,load"]
    links = enumerate_links(load_map.grid)
    for idx, link in enumerate(links):
        lines.append(
            f"{idx},{link.origin[0]},{link.origin[1]},{link.axis},"
            f"{load_map.loads[idx]:.12g}"
        )
    lines.append(f"summary,,,worst,{worst_link(load_map):.12g}")
    lines.append(f"summary,,,avg,{avg_link(load_map):.12g}")
    return "\n".join(lines) + "\n"
