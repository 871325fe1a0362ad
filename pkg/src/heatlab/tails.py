"""Convergence classification of improper integrals on [z, infinity).

The integrals that decide existence, uniqueness and blow-up all have
power-law tails (possibly with logarithmic or exponential corrections), so
we integrate a truncated range adaptively and classify the remainder by a
local power-law fit of the integrand near the truncation point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

# Divergence is declared when the fitted tail exponent of the integrand is
# >= -1 - TAIL_MARGIN (logarithmic or slower decay cannot be certified).
TAIL_MARGIN = 0.05


@dataclass(frozen=True)
class TailClassification:
    """Result of classifying int_lower^infty integrand(s) ds."""

    value: float            # finite value, or math.inf when divergent
    converged: bool
    tail_exponent: float    # fitted d log(integrand) / d log(s) near the cut
    truncated_value: float  # integral over [lower, cutoff]
    cutoff: float

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "converged": self.converged,
            "tail_exponent": self.tail_exponent,
            "truncated_value": self.truncated_value,
            "cutoff": self.cutoff,
        }


def fit_tail_exponent(
    integrand: Callable[[np.ndarray], np.ndarray],
    cutoff: float,
    decades: float = 2.0,
    samples: int = 41,
    log_integrand: Callable[[np.ndarray], np.ndarray] | None = None,
) -> float:
    """Least-squares slope of log integrand vs log s on [cutoff/10^decades, cutoff].

    A log-space integrand may be supplied for quantities whose direct
    evaluation overflows (it should return log f(s), with -inf for f = 0).
    Points where the integrand underflows to zero are ignored; if fewer than
    two usable points remain the integrand has effectively vanished and
    -inf is returned (super-fast decay).  An integrand that overflows even
    in log space is reported as +inf (certain divergence).
    """
    s = np.geomspace(cutoff / 10.0**decades, cutoff, samples)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if log_integrand is not None:
            logs = np.asarray(log_integrand(s), dtype=float)
        else:
            vals = np.asarray(integrand(s), dtype=float)
            logs = np.where(vals > 0.0, np.log(np.maximum(vals, 1e-300)),
                            -math.inf)
            logs[~np.isfinite(vals)] = math.nan
    if np.any(logs == math.inf):
        return math.inf
    good = np.isfinite(logs)
    if good.sum() < 2:
        return -math.inf
    slope = np.polyfit(np.log(s[good]), logs[good], 1)[0]
    return float(slope)


def classify_improper_integral(
    integrand: Callable[[np.ndarray], np.ndarray] | None,
    lower: float,
    cutoff: float | None = None,
    rel_tol: float = 1e-10,
    log_integrand: Callable[[np.ndarray], np.ndarray] | None = None,
) -> TailClassification:
    """Classify int_lower^infty integrand(s) ds with a power-law tail model.

    The tail exponent is fitted first (in log space when log_integrand is
    supplied, so that overflowing divergent integrands are still detected);
    divergence short-circuits without quadrature.  Otherwise the truncated
    part is integrated in log coordinates (the integrands of interest vary
    over many decades) and the tail beyond the cutoff is summed analytically
    from the fitted exponent.
    """
    if integrand is None and log_integrand is None:
        raise ValueError("need an integrand in direct or log form")
    if lower <= 0.0:
        raise ValueError("lower limit must be positive")
    if cutoff is None:
        cutoff = max(lower, 1.0) * 1e8
    if cutoff <= lower:
        raise ValueError("cutoff must exceed the lower limit")

    exponent = fit_tail_exponent(integrand, cutoff, log_integrand=log_integrand)
    if not exponent < -1.0 - TAIL_MARGIN:
        return TailClassification(math.inf, False, exponent, math.nan, cutoff)

    def point(x: float) -> float:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if log_integrand is not None:
                lv = float(np.asarray(log_integrand(np.asarray([x])))[0])
                return math.exp(lv) if lv < 700.0 else math.inf
            return float(np.asarray(integrand(np.asarray([x])))[0])

    def in_log(s: float) -> float:
        x = math.exp(s)
        v = point(x)
        if not math.isfinite(v):
            return 0.0
        return v * x

    truncated, _ = integrate.quad(
        in_log, math.log(lower), math.log(cutoff), epsrel=rel_tol, epsabs=0.0, limit=400
    )
    if exponent == -math.inf:
        tail = 0.0
    else:
        # int_Z^inf c s^alpha ds = -f(Z) Z / (alpha + 1), exact for powers
        tail = -point(cutoff) * cutoff / (exponent + 1.0)
    return TailClassification(truncated + tail, True, exponent, truncated, cutoff)
