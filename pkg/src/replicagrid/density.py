"""Exact continuous replication-density optimization and its power-of-4
truncation.

The optimization minimizes (sqrt(2)/6) * sum_m (d_m^(-1/2) - 1) p_m over
densities d_m in [1/N, 1] with sum d_m <= K.  Its unique optimum splits the
catalog into an up-truncated head (d = 1), an interior with d_m proportional
to p_m^(2/3), and a down-truncated tail (d = 1/N).  The split indices
(l, r) are located by an exact integer search; once fixed, the interior is
normalized in closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, InternalInvariantError, InvalidInputError
from .popularity import Popularity

COST_FACTOR = math.sqrt(2.0) / 6.0


@dataclass(frozen=True)
class DensityProfile:
    """The optimal density vector plus its partition certificate.

    Files with 1-based index < l_index have density 1, files >= r_index have
    density 1/N, the interior is proportional to p^(2/3).  mu is the
    multiplier of the sum-capacity constraint.
    """

    densities: np.ndarray
    l_index: int
    r_index: int
    mu: float
    n_nodes: int
    capacity: float

    def __post_init__(self) -> None:
        d = np.asarray(self.densities, dtype=float).copy()
        d.setflags(write=False)
        object.__setattr__(self, "densities", d)

    @property
    def m_count(self) -> int:
        return int(self.densities.size)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_nodes": self.n_nodes,
                "capacity": self.capacity,
                "l": self.l_index,
                "r": self.r_index,
                "mu": self.mu,
                "densities": [float(v) for v in self.densities],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "DensityProfile":
        doc = json.loads(text)
        return cls(
            densities=np.array(doc["densities"], dtype=float),
            l_index=int(doc["l"]),
            r_index=int(doc["r"]),
            mu=float(doc["mu"]),
            n_nodes=int(doc["n_nodes"]),
            capacity=float(doc["capacity"]),
        )


@dataclass(frozen=True)
class CanonicalProfile:
    """Densities rounded down to powers of 1/4.

    levels[m] is the level of file m (0-based): density 4^(-level).
    level_sets[k] lists the 0-based files at level k, for k = 0..nu.
    """

    levels: np.ndarray
    densities: np.ndarray
    level_sets: tuple[tuple[int, ...], ...]
    nu: int
    capacity: float

    @property
    def m_count(self) -> int:
        return int(self.levels.size)

    @classmethod
    def from_levels(cls, levels, nu: int, capacity: float) -> "CanonicalProfile":
        lv = np.asarray(levels, dtype=int)
        if np.any(lv < 0) or np.any(lv > nu):
            raise InvalidInputError(f"levels must lie in 0..{nu}")
        dens = 4.0 ** (-lv.astype(float))
        sets = tuple(
            tuple(int(i) for i in np.flatnonzero(lv == k)) for k in range(nu + 1)
        )
        return cls(levels=lv, densities=dens, level_sets=sets, nu=nu, capacity=capacity)


def solve_cd(n_nodes: int, capacity: float, pop: Popularity) -> DensityProfile:
    """Solve the continuous density problem exactly.

    Raises InfeasibleError when K*N < M (the catalog cannot be stored once).
    """
    n = int(n_nodes)
    k_cap = float(capacity)
    if n < 1:
        raise InvalidInputError(f"n_nodes must be >= 1, got {n_nodes}")
    if k_cap <= 0:
        raise InvalidInputError(f"capacity must be positive, got {capacity}")
    p = pop.probs
    m_count = pop.m_count
    if k_cap * n < m_count * (1.0 - 1e-15):
        raise InfeasibleError(f"infeasible: KN < M ({k_cap}*{n} < {m_count})")

    if k_cap >= m_count:
        # Slack capacity: everything cached everywhere, constraint inactive.
        return DensityProfile(
            densities=np.ones(m_count),
            l_index=m_count + 1,
            r_index=m_count + 1,
            mu=0.0,
            n_nodes=n,
            capacity=k_cap,
        )

    q = p ** (2.0 / 3.0)
    # prefix[i] = sum of q over 1-based files 1..i
    prefix = np.concatenate(([0.0], np.cumsum(q)))

    def interior_mass(l: int, r: int) -> float:
        return float(prefix[r - 1] - prefix[l - 1])

    def interior_cap(l: int, r: int) -> float:
        return k_cap - (l - 1) - (m_count - r + 1) / n

    def cond_interior_above_floor(l: int, r: int) -> bool:
        # d_{r-1} > 1/N when files l..r-1 form the interior; vacuous at r == l.
        if r == l:
            return True
        return interior_cap(l, r) * n * q[r - 2] > interior_mass(l, r)

    def cond_head_below_one(l: int, r: int) -> bool:
        # d_l < 1; vacuous when the interior is empty.
        if r == l:
            return True
        return interior_cap(l, r) * q[l - 1] < interior_mass(l, r)

    def cond_prev_head_pinned(l: int, r: int) -> bool:
        # Un-truncating file l-1 would push its density to >= 1.
        if l == 1:
            return True
        return interior_cap(l - 1, r) * q[l - 2] >= interior_mass(l - 1, r)

    l_max = min(int(math.floor(k_cap + 1e-12)) + 1, m_count)
    found = None
    for l in range(1, l_max + 1):
        # Largest r in [l, M+1] keeping the interior above the 1/N floor;
        # the predicate is monotone (true, ..., true, false, ..., false).
        lo, hi = l, m_count + 1
        if cond_interior_above_floor(l, m_count + 1):
            r = m_count + 1
        else:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if cond_interior_above_floor(l, mid):
                    lo = mid
                else:
                    hi = mid
            r = lo
        if interior_cap(l, r) < -1e-12:
            continue
        if cond_head_below_one(l, r) and cond_prev_head_pinned(l, r):
            found = (l, r)
            break
    if found is None:
        raise InternalInvariantError(
            "no (l, r) pair satisfied the optimality conditions"
        )
    l, r = found

    d = np.empty(m_count)
    d[: l - 1] = 1.0
    d[r - 1 :] = 1.0 / n
    if l < r:
        scale = interior_cap(l, r) / interior_mass(l, r)
        d[l - 1 : r - 1] = scale * q[l - 1 : r - 1]
        mu = 0.5 * p[l - 1] * d[l - 1] ** (-1.5)
    else:
        # Empty interior: any multiplier between the boundary marginals works.
        lo_mu = 0.5 * p[r - 1] * n ** 1.5 if r <= m_count else 0.0
        hi_mu = 0.5 * p[l - 2] if l > 1 else math.inf
        mu = lo_mu if math.isinf(hi_mu) else 0.5 * (lo_mu + hi_mu)

    total = float(d.sum())
    if total > k_cap + 1e-9 or (k_cap < m_count and abs(total - k_cap) > 1e-9):
        raise InternalInvariantError(
            f"density sum {total!r} violates capacity {k_cap!r}"
        )
    return DensityProfile(
        densities=d, l_index=l, r_index=r, mu=mu, n_nodes=n, capacity=k_cap
    )


def cd_cost(profile: DensityProfile, pop: Popularity) -> float:
    """Objective value (sqrt(2)/6) * sum (d^(-1/2) - 1) p at the profile."""
    return lower_bound(profile.densities, pop)


def lower_bound(densities, pop: Popularity) -> float:
    """Average-link capacity lower bound for arbitrary measured densities.

    Same formula as cd_cost but applicable to any density vector, e.g. one
    measured from an actual placement.
    """
    d = np.asarray(getattr(densities, "densities", densities), dtype=float)
    if d.size != pop.m_count:
        raise InvalidInputError("densities and popularity sizes differ")
    if np.any(d <= 0.0):
        raise InvalidInputError("densities must be positive")
    return COST_FACTOR * float(np.sum((d ** -0.5 - 1.0) * pop.probs))


def canonical_truncate(profile: DensityProfile) -> CanonicalProfile:
    """Round each density down to the largest power of 1/4 not exceeding it."""
    n = profile.n_nodes
    nu = round(math.log(n, 4))
    if 4 ** nu != n:
        raise InvalidInputError(f"n_nodes={n} is not a power of 4")
    d = profile.densities
    with np.errstate(divide="ignore"):
        raw = np.ceil(-np.log(d) / math.log(4.0) - 1e-12)
    levels = np.clip(raw, 0, nu).astype(int)
    # Guard against logarithm rounding: never truncate upward.
    for _ in range(2):
        over = (4.0 ** (-levels) > d) & (levels < nu)
        if not over.any():
            break
        levels[over] += 1
    canon = CanonicalProfile.from_levels(levels, nu=nu, capacity=profile.capacity)
    if float(canon.densities.sum()) > profile.capacity + 1e-9:
        raise InternalInvariantError("canonical truncation exceeded capacity")
    return canon


def kkt_residuals(profile: DensityProfile, pop: Popularity) -> tuple[float, float, float]:
    """Stationarity and dual-feasibility residuals of a profile.

    Returns (max relative interior residual, min slack of the up-truncated
    marginals over mu, min slack of mu over the down-truncated marginals).
    Slacks are >= 0 (up to rounding) at an optimum.
    """
    d = profile.densities
    p = pop.probs
    mu = profile.mu
    l, r = profile.l_index, profile.r_index
    marginal = 0.5 * p * d ** -1.5
    interior = marginal[l - 1 : r - 1]
    interior_res = (
        float(np.max(np.abs(interior - mu)) / max(mu, 1e-300)) if interior.size else 0.0
    )
    up_slack = float(np.min(marginal[: l - 1] - mu)) if l > 1 else 0.0
    down_slack = float(np.min(mu - marginal[r - 1 :])) if r <= p.size else 0.0
    return interior_res, up_slack, down_slack


def a_coeff(i: int, j: int, capacity: float, n_nodes: int, pop: Popularity) -> float:
    """Popularity-mass coefficient of the worst-link additive bound.

    Equals (sum of p_k^(2/3) for k = i+1..M-j) / (K - i - j/N), and 1 when
    the denominator is exactly zero.
    """
    m_count = pop.m_count
    if not (0 <= i <= m_count and 0 <= j <= m_count):
        raise InvalidInputError("i, j must lie in 0..M")
    denom = capacity - i - j / n_nodes
    if denom < -1e-12:
        raise InvalidInputError(f"negative denominator K - i - j/N = {denom}")
    if abs(denom) <= 1e-12:
        return 1.0
    q = pop.probs[i : m_count - j] ** (2.0 / 3.0)
    return float(q.sum()) / denom
