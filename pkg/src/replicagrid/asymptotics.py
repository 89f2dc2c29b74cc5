"""Closed-form estimators for the density-split indices, the analytic
capacity decomposition, scaling-regime classification, and a sweep harness
that fits empirical growth exponents against the predicted laws.

Everything here works on Zipf popularity with exponent tau.  The catalog
splits at two phase transitions, tau = 1 and tau = 3/2, and further by how
full the network is: whether the set of files stored only once (density
1/N, the "down-truncated" set) is empty, almost empty, or a constant
fraction of the catalog, and whether the spare capacity K*N - M stays
bounded or grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta as _riemann_zeta

from .density import DensityProfile, solve_cd
from .errors import InfeasibleError, InternalInvariantError, InvalidInputError
from .popularity import Popularity, harmonic, zipf

# Finite-scale proxy for "spare capacity K*N - M stays O(1)".
SMALL_SLACK = 100.0
# Finite-scale proxy separating "down-truncated set empty" from "almost
# empty": M below half the Theorem-16 threshold counts as empty.
_EMPTY_RATIO = 0.5
_TAU_TOL = 1e-12

STATE_EMPTY = "empty"
STATE_ALMOST_EMPTY = "almost_empty"
STATE_NONEMPTY = "nonempty"


@dataclass(frozen=True)
class CapacityBreakdown:
    """The capacity value and its three-part decomposition.

    c_total = c_mid + c_down - tail exactly: the interior files contribute
    p/sqrt(d) (c_mid), the down-truncated files sqrt(N)*p (c_down), and
    every file from the first non-fully-replicated one onward contributes
    the -p correction (tail).  k_mid is the cache budget left for the
    interior after the head takes one unit per file and the tail 1/N each.
    """

    c_total: float
    c_mid: float
    c_down: float
    k_mid: float
    tail: float


@dataclass(frozen=True)
class RegimeReport:
    """Predicted scaling regime of one (tau, K, M, N) instance."""

    tau: float
    capacity: float
    m_count: int
    n_nodes: int
    regime_label: str
    predicted_l_hat: int
    predicted_r_hat: float
    predicted_law: str
    truncation_state: str


def capacity_breakdown(profile: DensityProfile, pop: Popularity) -> CapacityBreakdown:
    """Decompose sum (d^(-1/2) - 1) p at an already-solved profile."""
    d = profile.densities
    p = pop.probs
    l, r = profile.l_index, profile.r_index
    n = profile.n_nodes
    m = pop.m_count
    c_total = float(np.sum((d ** -0.5 - 1.0) * p))
    c_mid = float(np.sum(p[l - 1 : r - 1] / np.sqrt(d[l - 1 : r - 1])))
    c_down = math.sqrt(n) * float(np.sum(p[r - 1 :]))
    tail = float(np.sum(p[l - 1 :]))
    k_mid = ((profile.capacity - l + 1) * n - (m - r + 1)) / n
    return CapacityBreakdown(
        c_total=c_total, c_mid=c_mid, c_down=c_down, k_mid=k_mid, tail=tail
    )


def analytic_capacity(n_nodes: int, capacity: float, pop: Popularity) -> CapacityBreakdown:
    """Exact capacity value (without the sqrt(2)/6 factor) and its split."""
    return capacity_breakdown(solve_cd(n_nodes, capacity, pop), pop)


def _zeta(s: float) -> float:
    if s <= 1.0:
        return math.inf
    return float(_riemann_zeta(s))


def _l_hat_scan(tau: float, k_eff: float) -> int:
    """Integer two-sided fixpoint for the fully-replicated head size.

    For tau > 3/2 only: the head size l-1 satisfies
      (K - l + 1) l^(-s)       <  zeta(s) - H_s(l - 1)
      (K - l + 2) (l-1)^(-s)  >=  zeta(s) - H_s(l - 2)
    with s = 2 tau / 3.  Returns the solution > 1, or 1 if none exists.
    """
    s = 2.0 * tau / 3.0
    z = _zeta(s)
    top = int(math.floor(k_eff + 1e-12)) + 1
    for cand in range(2, top + 1):
        upper = (k_eff - cand + 1) * cand ** (-s) < z - harmonic(s, cand - 1)
        lower = (k_eff - cand + 2) * (cand - 1) ** (-s) >= z - harmonic(s, cand - 2)
        if upper and lower:
            return cand
    return 1


def _almost_empty_threshold(tau: float, capacity: float, n_nodes: int) -> float:
    """Largest catalog size M for which the down-truncated set stays o(M)."""
    kn = capacity * n_nodes
    if tau < 1.5 - _TAU_TOL:
        return (1.0 - 2.0 * tau / 3.0) * kn
    if abs(tau - 1.5) <= _TAU_TOL:
        # Threshold is the x solving x ln x = K*N (monotone for x >= 2).
        if 2.0 * math.log(2.0) >= kn:
            return 2.0
        lo, hi = 2.0, kn
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid * math.log(mid) <= kn:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-9 * hi:
                break
        return lo
    l_hat = _l_hat_scan(tau, capacity)
    h = ((capacity - l_hat + 1) * (2.0 * tau / 3.0 - 1.0) / l_hat ** (1.0 - 2.0 * tau / 3.0)) ** (
        3.0 / (2.0 * tau)
    )
    return h * n_nodes ** (3.0 / (2.0 * tau))


def _check_instance(tau: float, capacity: float, m_count: int, n_nodes: int) -> None:
    if tau < 0:
        raise InvalidInputError(f"tau must be >= 0, got {tau}")
    if capacity < 1:
        raise InvalidInputError(f"capacity must be >= 1, got {capacity}")
    if m_count < 1:
        raise InvalidInputError(f"m_count must be >= 1, got {m_count}")
    if n_nodes < 1:
        raise InvalidInputError(f"n_nodes must be >= 1, got {n_nodes}")
    if capacity * n_nodes < m_count:
        raise InfeasibleError(
            f"infeasible: KN < M ({capacity}*{n_nodes} < {m_count})"
        )


def estimate_l_hat(tau: float, capacity: float, m_count: int, n_nodes: int) -> int:
    """Predicted 1-based index of the first not-fully-replicated file."""
    _check_instance(tau, capacity, m_count, n_nodes)
    if tau <= 1.5 + _TAU_TOL:
        return 1
    threshold = _almost_empty_threshold(tau, capacity, n_nodes)
    if m_count <= threshold:
        return _l_hat_scan(tau, capacity)
    # Non-empty down-truncated set: beyond M = (K - beta) N the head
    # collapses to one file; below it the tail occupies M/N capacity units,
    # so the head condition is evaluated at K - M/N.
    beta = 3.0 / (2.0 * tau - 3.0)
    if m_count > (capacity - beta) * n_nodes:
        return 1
    return _l_hat_scan(tau, capacity - m_count / n_nodes)


def _r_hat_small_slack(tau: float, slack: float) -> float:
    """Integer scan for the tail split when K*N - M stays bounded.

    Finds the smallest r with slack + r <= r^s H_s(r), s = 2 tau / 3; the
    companion strict inequality at r - 1 then holds automatically.
    """
    s = 2.0 * tau / 3.0
    r = 1
    while True:
        if slack + r <= r ** s * harmonic(s, r):
            return float(r)
        r += 1
        if r > slack + 2 and r > 10_000_000:
            raise InternalInvariantError("tail-split scan failed to terminate")


def estimate_r_hat(tau: float, capacity: float, m_count: int, n_nodes: int) -> float:
    """Predicted 1-based index of the first down-truncated file."""
    _check_instance(tau, capacity, m_count, n_nodes)
    kn = capacity * n_nodes
    slack = kn - m_count
    if tau < 0.05:
        # The closed forms blow up as 3/(2 tau); use the exact solver.
        return float(solve_cd(n_nodes, capacity, zipf(m_count, tau)).r_index)
    if m_count <= _almost_empty_threshold(tau, capacity, n_nodes):
        return float(m_count + 1)
    if slack <= SMALL_SLACK:
        return _r_hat_small_slack(tau, slack)
    if tau < 1.5 - _TAU_TOL:
        return (3.0 - 2.0 * tau) / (2.0 * tau) * slack
    if abs(tau - 1.5) <= _TAU_TOL:
        # r ln r = K*N - M, monotone in r on [2, K*N].
        lo, hi = 2.0, kn
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid * math.log(mid) <= slack:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-9 * hi:
                break
        return lo
    beta = 3.0 / (2.0 * tau - 3.0)
    expo = 3.0 / (2.0 * tau)
    if m_count <= (capacity - beta) * n_nodes:
        alpha = (2.0 * tau - 3.0) / (2.0 * tau)
        return alpha * (capacity * n_nodes ** expo - m_count / n_nodes ** (1.0 - expo))
    return (2.0 * tau / 3.0 * slack) ** expo


def _predicted_law(
    tau: float, state: str, slack_small: bool, near_full: bool
) -> tuple[str, str, float, float]:
    """Regime label, symbolic law, M-exponent and log-M exponent.

    The law strings follow Table-of-regimes shorthand; the two exponents let
    the sweep harness fit ln C = a ln M + b ln ln M + const.
    """
    if state in (STATE_EMPTY, STATE_ALMOST_EMPTY):
        label = "almost-empty down-truncated set" if state == STATE_ALMOST_EMPTY else "empty down-truncated set"
        if tau < 1.0 - _TAU_TOL:
            return label, "C = Theta(M^0.5)", 0.5, 0.0
        if abs(tau - 1.0) <= _TAU_TOL:
            return label, "C = Theta(M^0.5 / log M)", 0.5, -1.0
        if tau < 1.5 - _TAU_TOL:
            return label, f"C = Theta(M^{1.5 - tau:g})", 1.5 - tau, 0.0
        if abs(tau - 1.5) <= _TAU_TOL:
            return label, "C = Theta(log^1.5 M)", 0.0, 1.5
        return label, "C = Theta(1)", 0.0, 0.0
    if slack_small:
        return "M ~ KN, KN - M = O(1)", "C = Theta(M^0.5)", 0.5, 0.0
    if not near_full:
        label = "non-empty down-truncated set, KN - M = omega(1)"
        if tau < 1.0 - _TAU_TOL:
            return label, "C = Theta(M^0.5)", 0.5, 0.0
        if abs(tau - 1.0) <= _TAU_TOL:
            return label, "C = Theta(M^0.5 / log M)", 0.5, -1.0
        if tau < 1.5 - _TAU_TOL:
            return label, f"C = Theta(M^{1.5 - tau:g})", 1.5 - tau, 0.0
        if abs(tau - 1.5) <= _TAU_TOL:
            return label, "C = Theta(log^1.5 r)", 0.0, 1.5
        return label, "C = Theta(1)", 0.0, 0.0
    label = "M ~ KN, KN - M = omega(1)"
    if tau <= 1.0 + _TAU_TOL:
        return label, "C = Theta(M^0.5)", 0.5, 0.0
    if tau < 1.5 - _TAU_TOL:
        return label, f"C = Theta(M^0.5 / (KN - M)^{tau - 1.0:g})", 0.5, 0.0
    if abs(tau - 1.5) <= _TAU_TOL:
        return label, "C = Theta(sqrt(M / (KN - M)) log^1.5 r)", 0.5, 1.5
    return label, f"C = Theta(M^0.5 / (KN - M)^{3.0 * (tau - 1.0) / (2.0 * tau):g})", 0.5, 0.0


def classify_regime(tau: float, capacity: float, m_count: int, n_nodes: int) -> RegimeReport:
    """Match an instance to its scaling-regime column.

    The down-truncated-set state is decided against the closed-form
    threshold (below half of it counts as empty at finite scale); spare
    capacity up to SMALL_SLACK counts as O(1).  For tau > 3/2 the non-empty
    regime further splits at M = (K - beta) N with beta = 3 / (2 tau - 3):
    above it the fully-replicated head shrinks to a single file.
    """
    _check_instance(tau, capacity, m_count, n_nodes)
    threshold = _almost_empty_threshold(tau, capacity, n_nodes)
    if m_count < _EMPTY_RATIO * threshold:
        state = STATE_EMPTY
    elif m_count <= threshold:
        state = STATE_ALMOST_EMPTY
    else:
        state = STATE_NONEMPTY
    slack = capacity * n_nodes - m_count
    slack_small = slack <= SMALL_SLACK
    if tau > 1.5 + _TAU_TOL:
        beta = 3.0 / (2.0 * tau - 3.0)
        near_full = m_count > (capacity - beta) * n_nodes
    else:
        near_full = m_count >= 0.9 * capacity * n_nodes
    label, law, _, _ = _predicted_law(tau, state, slack_small, near_full)
    return RegimeReport(
        tau=tau,
        capacity=capacity,
        m_count=m_count,
        n_nodes=n_nodes,
        regime_label=label,
        predicted_l_hat=estimate_l_hat(tau, capacity, m_count, n_nodes),
        predicted_r_hat=estimate_r_hat(tau, capacity, m_count, n_nodes),
        predicted_law=law,
        truncation_state=state,
    )


@dataclass(frozen=True)
class SweepPoint:
    nu: int
    n_nodes: int
    m_count: int
    capacity: float
    tau: float
    c_value: float
    l_index: int
    r_index: int
    regime_label: str


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    predicted_exponent: float
    predicted_log_exponent: float
    predicted_law: str
    fitted_exponent: float
    fitted_exponent_corrected: float


def _fit_slope(ms: np.ndarray, cs: np.ndarray, log_power: float) -> tuple[float, float]:
    x = np.log(ms)
    raw = float(np.polyfit(x, np.log(cs), 1)[0])
    corrected = float(np.polyfit(x, np.log(cs) - log_power * np.log(np.log(ms)), 1)[0])
    return raw, corrected


def sweep(tau: float, capacity: float, m_of_n, nus) -> SweepResult:
    """Evaluate the exact capacity across grid sizes and fit its growth.

    ``m_of_n`` maps the node count N to the catalog size M.  The growth
    exponent of C in M is fitted by least squares on the largest decade of
    M (all points if fewer than three fall in it); a second fit removes the
    predicted log-M factor first.
    """
    nus = list(nus)
    if len(nus) < 3:
        raise InvalidInputError(f"sweep needs at least 3 points, got {len(nus)}")
    points = []
    for nu in nus:
        n = 4 ** int(nu)
        m = int(m_of_n(n))
        if m < 1:
            raise InvalidInputError(f"catalog size must be >= 1, got {m} at N={n}")
        pop = zipf(m, tau)
        profile = solve_cd(n, capacity, pop)
        bd = capacity_breakdown(profile, pop)
        if bd.c_total > 3.0 * math.sqrt(n):
            raise InternalInvariantError(
                f"capacity {bd.c_total} exceeds the O(sqrt(N)) guard at N={n}"
            )
        report = classify_regime(tau, capacity, m, n)
        points.append(
            SweepPoint(
                nu=int(nu),
                n_nodes=n,
                m_count=m,
                capacity=capacity,
                tau=tau,
                c_value=bd.c_total,
                l_index=profile.l_index,
                r_index=profile.r_index,
                regime_label=report.regime_label,
            )
        )
    largest = classify_regime(tau, capacity, points[-1].m_count, points[-1].n_nodes)
    state = largest.truncation_state
    slack = capacity * points[-1].n_nodes - points[-1].m_count
    if tau > 1.5 + _TAU_TOL:
        beta = 3.0 / (2.0 * tau - 3.0)
        near_full = points[-1].m_count > (capacity - beta) * points[-1].n_nodes
    else:
        near_full = points[-1].m_count >= 0.9 * capacity * points[-1].n_nodes
    law_label, law, expo, log_expo = _predicted_law(
        tau, state, slack <= SMALL_SLACK, near_full
    )
    del law_label

    ms = np.array([pt.m_count for pt in points], dtype=float)
    cs = np.array([pt.c_value for pt in points], dtype=float)
    top = ms >= ms.max() / 10.0
    if top.sum() < 3:
        top = np.zeros_like(top)
        top[-3:] = True
    raw, corrected = _fit_slope(ms[top], cs[top], log_expo)
    return SweepResult(
        points=tuple(points),
        predicted_exponent=expo,
        predicted_log_exponent=log_expo,
        predicted_law=law,
        fitted_exponent=raw,
        fitted_exponent_corrected=corrected,
    )


def sweep_to_csv(result: SweepResult) -> str:
    lines = ["nu,N,M,K,tau,C,l,r,regime,predicted_exponent,fitted_exponent"]
    for pt in result.points:
        lines.append(
            f"{pt.nu},{pt.n_nodes},{pt.m_count},{pt.capacity:.12g},{pt.tau:.12g},"
            f"{pt.c_value:.12g},{pt.l_index},{pt.r_index},{pt.regime_label},"
            f"{result.predicted_exponent:.12g},{result.fitted_exponent:.12g}"
        )
    return "\n".join(lines) + "\n"
