"""Popularity models and generalized harmonic number utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

_SUM_TOL = 1e-12
_FSUM_CUTOFF = 200_000  # above this, numpy pairwise summation is accurate enough


@dataclass(frozen=True)
class Popularity:
    """A nonincreasing, strictly positive probability vector over M files.

    ``tau`` is recorded when the vector was generated from a Zipf law and is
    None for custom vectors.
    """

    probs: np.ndarray
    tau: float | None = field(default=None)

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise InvalidInputError("popularity must be a nonempty 1-d vector")
        if np.any(p <= 0.0):
            raise InvalidInputError("all popularities must be strictly positive")
        if np.any(np.diff(p) > 0.0):
            raise InvalidInputError("popularities must be nonincreasing")
        total = float(p.sum())
        if abs(total - 1.0) > _SUM_TOL:
            raise InvalidInputError(f"popularities must sum to 1, got {total!r}")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def m_count(self) -> int:
        return int(self.probs.size)


def zipf(m_count: int, tau: float) -> Popularity:
    """Zipf popularity: p_m proportional to m^(-tau), m = 1..M."""
    if m_count < 1:
        raise InvalidInputError(f"m_count must be >= 1, got {m_count}")
    if tau < 0:
        raise InvalidInputError(f"tau must be >= 0, got {tau}")
    ranks = np.arange(1, m_count + 1, dtype=float)
    weights = ranks ** (-float(tau))
    probs = weights / weights.sum()
    return Popularity(probs=probs, tau=float(tau))


def harmonic(tau: float, n: int) -> float:
    """Generalized harmonic number: sum of j^(-tau) for j = 1..n.

    Computed by direct summation; compensated (fsum) for moderate n,
    pairwise numpy summation for large n.
    """
    if n < 0:
        raise InvalidInputError(f"n must be >= 0, got {n}")
    if n == 0:
        return 0.0
    if n <= _FSUM_CUTOFF:
        return math.fsum(j ** (-tau) for j in range(1, n + 1))
    js = np.arange(1, n + 1, dtype=float)
    return float(np.sum(js ** (-tau)))


def harmonic_bounds(tau: float, m: int, n: int) -> tuple[float, float]:
    """Integral bounds (lo, hi) for harmonic(tau, n) - harmonic(tau, m).

    lo is the integral of (x+1)^(-tau) over [m, n]; hi adds 1 to the
    integral of x^(-tau) over [m+1, n].
    """
    if m < 0 or m > n:
        raise InvalidInputError(f"need 0 <= m <= n, got m={m}, n={n}")
    if n == m:
        return (0.0, 0.0)
    if abs(tau - 1.0) < 1e-15:
        lo = math.log((n + 1) / (m + 1))
        hi = 1.0 + math.log(n / (m + 1))
    else:
        e = 1.0 - tau
        lo = ((n + 1) ** e - (m + 1) ** e) / e
        hi = (n ** e - (m + 1) ** e) / e + 1.0
    return (lo, max(hi, 0.0))


def load_popularity(path: str) -> Popularity:
    """Read one probability per line; blank lines and '#' comments skipped."""
    values = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: not a number: {line!r}") from exc
    if not values:
        raise InvalidInputError(f"{path}: no probabilities found")
    return Popularity(probs=np.array(values, dtype=float))
