"""Critical exponents and the integral conditions deciding the dichotomy.

For data comparable to K^{1/r} |x|^{-rho/r} chi_{B_a} in L^r the local
behaviour of u_t - Lap u = h(t) g(u) is governed by the second critical
value rho* = 2r / (q - 1), where q is the growth exponent of g:

* rho < rho* (plus a convergent supersolution integral): local existence,
* rho > rho* (plus a heavy-enough time weight near 0): non-existence.

All conditions are *checked numerically* via improper-integral
classification in log space; nothing is assumed from the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from heatlab.nonlinearity import (
    NonlinearitySpec,
    WeightSpec,
    envelope_G,
    growth_exponents,
    lipschitz_L,
)
from heatlab.radial import ProblemSpec, RadialGrid
from heatlab.tails import TailClassification, classify_improper_integral

__all__ = [
    "critical_values",
    "check_laister",
    "check_h4",
    "check_blowup_weight",
    "check_def2",
    "classify",
    "Verdict",
]


# cache of measured smoothing constants keyed by (N, round(gamma, 12))
_C0_CACHE: dict = {}


def _measured_c0(N: int, gamma: float, node_count: int = 512) -> float:
    """Measured constant in ||S(t)|x|^{-g} chi_{B_1}||_inf <= C0 t^{-g/2}."""
    from heatlab.semigroup import FreeSpaceEngine, estimate_lemma2_constant

    key = (N, round(gamma, 12))
    if key not in _C0_CACHE:
        grid = RadialGrid(N, 8.0, node_count, 3.0)
        engine = FreeSpaceEngine(grid)
        est = estimate_lemma2_constant(N, gamma, math.inf, math.inf, engine)
        _C0_CACHE[key] = est.C0_hat
    return _C0_CACHE[key]


# ---------------------------------------------------------------------------
# log-space evaluation helpers (the integrands span hundreds of decades)
# ---------------------------------------------------------------------------


def _log_G(g: NonlinearitySpec):
    """Array-valued log of the growth envelope G(s) = sup g(t)/t, |t| <= s."""
    if g.family == "tabulated":
        vec = np.vectorize(lambda s: envelope_G(g, float(s)))

        def lg_tab(s):
            return np.log(np.maximum(vec(np.asarray(s, dtype=float)), 1e-300))

        return lg_tab

    def lg(s):
        # the quotient g(t)/t is nondecreasing for the analytic families
        ls = np.log(np.asarray(s, dtype=float))
        return g.log_eval(ls) - ls

    return lg


def _log_L_at_log(g: NonlinearitySpec, log_arg: np.ndarray) -> np.ndarray:
    """log L(e^{log_arg}) without overflow (L = local Lipschitz modulus)."""
    log_arg = np.asarray(log_arg, dtype=float)
    if g.family == "power":
        return math.log(g.q) + (g.q - 1.0) * log_arg
    if g.family == "exponential":
        with np.errstate(over="ignore"):
            return math.log(g.alpha) + g.alpha * np.exp(log_arg)
    if g.family == "log_power":
        lp = np.logaddexp(0.0, log_arg)  # log(1 + t), stable for huge t
        return (g.q - 1.0) * lp + (g.s - 1.0) * np.log(lp) \
            + np.log(g.q * lp + g.s)
    if g.family == "linear":
        return np.full_like(log_arg, math.log(g.slope))
    vec = np.vectorize(lambda s: lipschitz_L(g, float(s)))
    with np.errstate(over="ignore"):
        return np.log(np.maximum(vec(np.exp(log_arg)), 1e-300))


def _log_weight_at_log(h: WeightSpec, log_t: np.ndarray) -> np.ndarray:
    """log h(e^{log_t}) without under/overflow."""
    log_t = np.asarray(log_t, dtype=float)
    if h.family == "one":
        return np.zeros_like(log_t)
    if h.family == "power":
        return h.beta * log_t
    with np.errstate(over="ignore", under="ignore"):
        return np.log(np.maximum(h(np.exp(log_t)), 1e-300))


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def critical_values(N: int, r: float, q: float, beta: float = 0.0) -> dict:
    """p* = 1 + 2r/N, rho* = 2r/(q-1), and the weighted rho* for h = t^beta."""
    if N < 1 or r < 1.0:
        raise ValueError("need N >= 1 and r >= 1")
    if not q > 1.0:
        raise ValueError("growth exponent q must exceed 1")
    if not beta > -1.0:
        raise ValueError("weight exponent beta must exceed -1")
    rho_star = 0.0 if q == math.inf else 2.0 * r / (q - 1.0)
    return {
        "p_star": 1.0 + 2.0 * r / N,
        "rho_star": rho_star,
        "rho_star_weighted": rho_star * (beta + 1.0),
    }


def check_laister(f: NonlinearitySpec, r: float, N: int) -> dict:
    """Existence-for-all-L^r-data criterion.

    r > 1: limsup t^{-p*} f(t) finite, decided from the growth exponents.
    r = 1: convergence of int_1^inf s^{-p*} F(s) ds with the window
    envelope F(s) = sup f(t)/t on [1, s].
    """
    if not f.nondecreasing:
        raise ValueError("criterion requires a nondecreasing f")
    p_star = 1.0 + 2.0 * r / N
    exps = growth_exponents(f, p_star)
    if r > 1.0:
        p_sup = exps.p_sup
        ok = p_sup is not None and p_sup <= p_star
        return {"pass": bool(ok), "detail": {"p_sup": p_sup, "p_star": p_star,
                                             "method": exps.method}}
    lg = _log_G(f)  # F and G share the analytic envelope on [1, inf)

    def log_integrand(s: np.ndarray) -> np.ndarray:
        return -p_star * np.log(np.asarray(s, dtype=float)) + lg(s)

    tail = classify_improper_integral(None, 1.0, log_integrand=log_integrand)
    return {"pass": tail.converged, "detail": tail}


def check_h4(g: NonlinearitySpec, h: WeightSpec, r: float, rho: float,
             A: float = 2.0, C0: float = 1.0, K: float = 1.0) -> dict:
    """Supersolution integral for the comparison argument.

    Convergence of
    int_1^inf sigma^{-(1 + 2r/rho)} h((A C0 K^{1/r})^{2r/rho} sigma^{-2r/rho})
    G(sigma) d sigma is the sufficient condition for a local mild solution
    below data of class K^{1/r} |x|^{-rho/r}.
    """
    if rho <= 0.0 or r < 1.0:
        raise ValueError("need rho > 0 and r >= 1")
    if A <= 1.0 or C0 <= 0.0 or K <= 0.0:
        raise ValueError("need A > 1 and positive C0, K")
    lg = _log_G(g)
    power = 1.0 + 2.0 * r / rho
    scale = (A * C0 * K ** (1.0 / r)) ** (2.0 * r / rho)

    def log_integrand(sigma: np.ndarray) -> np.ndarray:
        ls = np.log(np.asarray(sigma, dtype=float))
        log_t = math.log(scale) - (2.0 * r / rho) * ls
        return -power * ls + _log_weight_at_log(h, log_t) + lg(sigma)

    tail = classify_improper_integral(None, 1.0, log_integrand=log_integrand)
    return {"pass": tail.converged, "integral_value": tail.value,
            "integral": tail, "A": A, "C0": C0, "scale": scale}


def check_blowup_weight(h: WeightSpec, r: float, rho: float, p_sup: float,
                        epsilon: float) -> dict:
    """Time-weight mass condition forcing non-existence.

    limsup_{t -> 0+} t^{-theta} int_0^t h(s) ds = infinity with
    theta = rho (p_sup - 1 - epsilon) / (2 r).
    """
    if not (p_sup is not None and math.isfinite(p_sup) and p_sup > 1.0):
        raise ValueError("need a finite growth exponent p_sup > 1")
    if not 0.0 < epsilon < p_sup - 1.0:
        raise ValueError("need 0 < epsilon < p_sup - 1")
    theta = rho * (p_sup - 1.0 - epsilon) / (2.0 * r)
    if h.family in ("one", "power"):
        beta = 0.0 if h.family == "one" else h.beta
        # int_0^t s^beta ds = t^{beta+1}/(beta+1): the limsup is infinite
        # exactly when beta + 1 < theta
        return {"holds": beta + 1.0 < theta,
                "exponent_detail": {"theta": theta, "beta_plus_1": beta + 1.0,
                                    "epsilon": epsilon, "method": "analytic"}}
    # sampled weight: probe the compensated mass on a geometric grid near 0
    ts = 10.0 ** -np.arange(1, 9, dtype=float)
    vals = np.array([t ** -theta * h.integral(t) for t in ts])
    good = np.isfinite(vals) & (vals > 0.0)
    holds = bool(good.sum() >= 3
                 and np.all(np.diff(vals[good]) > 0.0)
                 and vals[good][-1] > 1e6)
    return {"holds": holds,
            "exponent_detail": {"theta": theta, "epsilon": epsilon,
                                "method": "numeric",
                                "samples": vals.tolist()}}


def check_def2(g: NonlinearitySpec, h: WeightSpec, r: float, rho: float,
               C1: float) -> dict:
    """Lipschitz-mass condition under which Gronwall yields uniqueness.

    Convergence of
    int_1^inf sigma^{-(1 + 2r/rho)} h((sigma / C1)^{-2r/rho}) L(sigma) d sigma,
    which is the time integral int L(C1 s^{-rho/(2r)}) h(s) ds in disguise.
    """
    if C1 <= 0.0:
        raise ValueError("need C1 > 0")
    if not g.locally_lipschitz or not g.zero_at_zero:
        raise ValueError("condition requires locally Lipschitz g with g(0)=0")
    power = 1.0 + 2.0 * r / rho

    def log_integrand(sigma: np.ndarray) -> np.ndarray:
        ls = np.log(np.asarray(sigma, dtype=float))
        log_t = -(2.0 * r / rho) * (ls - math.log(C1))
        return -power * ls + _log_weight_at_log(h, log_t) \
            + _log_L_at_log(g, ls)

    tail = classify_improper_integral(None, 1.0, log_integrand=log_integrand)
    return {"pass": tail.converged, "integral_value": tail.value,
            "integral": tail, "C1": C1}


# ---------------------------------------------------------------------------
# verdict
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    existence: str                  # "predicted" | "excluded" | "inconclusive"
    uniqueness: str                 # "predicted" | "inconclusive"
    applied_theorem: Optional[str]
    critical_values: dict
    rho: float
    data_side: str
    certificates: tuple = ()
    epsilon: Optional[float] = None
    flags: tuple = ()

    def as_dict(self) -> dict:
        def scrub(obj):
            if isinstance(obj, TailClassification):
                return obj.as_dict()
            if isinstance(obj, dict):
                return {k: scrub(v) for k, v in obj.items()}
            if isinstance(obj, (list, tuple)):
                return [scrub(v) for v in obj]
            if isinstance(obj, (np.floating, np.integer)):
                obj = float(obj)
            if isinstance(obj, float):
                if math.isinf(obj):
                    return "inf" if obj > 0 else "-inf"
                if math.isnan(obj):
                    return "nan"
            return obj

        return scrub({
            "existence": self.existence,
            "uniqueness": self.uniqueness,
            "applied_theorem": self.applied_theorem,
            "critical_values": self.critical_values,
            "rho": self.rho,
            "data_side": self.data_side,
            "certificates": list(self.certificates),
            "epsilon": self.epsilon,
            "flags": list(self.flags),
        })


def _certificate(criterion: str, value, threshold, ok: bool) -> dict:
    return {"criterion": criterion, "value": value, "threshold": threshold,
            "pass": bool(ok)}


def classify(spec: ProblemSpec, A: float = 2.0, C0: Optional[float] = None,
             epsilon_grid: Optional[Sequence[float]] = None) -> Verdict:
    """Decide the regime of the problem from the checkable conditions.

    The decision is gated by which comparison the data side licenses:
    upper-class data can only certify existence, lower-class data only
    non-existence.  Labels name the mechanism used:

    * comparison-subcritical  — constant weight, convex g, rho below the
      critical value (supersolution closes directly);
    * comparison-weighted     — general weight via the supersolution integral;
    * osgood-supercritical    — constant weight, rho above the critical value
      (the Osgood probe mechanism applies);
    * blowup-weighted         — general weight via the weighted mass condition;
    * gronwall                — uniqueness in the decay class.
    """
    N, r, rho, K = spec.dimension, spec.r, spec.rho, spec.K
    g, h = spec.nonlinearity, spec.weight
    p_star = 1.0 + 2.0 * r / N
    exps = growth_exponents(g, p_star)
    p_inf, p_sup = exps.p_inf, exps.p_sup

    def rho_of(p: Optional[float]) -> Optional[float]:
        if p is None:
            return None
        if p == math.inf:
            return 0.0
        if p <= 1.0:
            return math.inf
        return 2.0 * r / (p - 1.0)

    rho_star = rho_of(p_sup)
    crit = {"p_star": p_star, "rho_star": rho_star, "p_inf": p_inf,
            "p_sup": p_sup}
    if h.family == "power":
        crit["rho_star_weighted"] = (None if rho_star is None
                                     else rho_star * (h.beta + 1.0))
    elif h.family == "one":
        crit["rho_star_weighted"] = rho_star

    certificates: list = []
    flags: list = []
    if exps.method != "exact":
        flags.append("growth exponents were fitted numerically (heuristic)")

    existence = "inconclusive"
    uniqueness = "inconclusive"
    theorem = None
    epsilon = None
    boundary = (rho_star is not None and math.isfinite(rho_star)
                and rho_star > 0.0 and rho == rho_star)
    if boundary:
        certificates.append(_certificate("rho != rho_star", rho, rho_star,
                                         False))
        flags.append("rho sits exactly on the critical value; no mechanism "
                     "applies")

    if spec.data_side == "upper_class" and not boundary:
        rho_exist = rho_of(p_inf)
        direct = (h.family == "one" and g.convex_on_positives
                  and g.nondecreasing and g.zero_at_zero
                  and rho_exist is not None and rho < rho_exist)
        if direct:
            existence, theorem = "predicted", "comparison-subcritical"
            certificates.append(_certificate("rho < 2r/(p_inf - 1)", rho,
                                             rho_exist, True))
        else:
            if rho_exist is not None and h.family == "one":
                certificates.append(_certificate("rho < 2r/(p_inf - 1)", rho,
                                                 rho_exist, False))
            if C0 is None:
                C0 = _measured_c0(N, rho / r)
            h4 = check_h4(g, h, r, rho, A=A, C0=C0, K=K)
            certificates.append(_certificate("supersolution integral finite",
                                             h4["integral_value"], math.inf,
                                             h4["pass"]))
            if h4["pass"]:
                existence, theorem = "predicted", "comparison-weighted"

    if spec.data_side == "lower_class" and not boundary:
        if h.family == "one" and rho_star is not None and rho > rho_star:
            existence, theorem = "excluded", "osgood-supercritical"
            certificates.append(_certificate("rho > rho_star", rho, rho_star,
                                             True))
        elif h.family == "one" and rho_star is not None:
            certificates.append(_certificate("rho > rho_star", rho, rho_star,
                                             False))
        elif p_sup is not None and math.isfinite(p_sup) and p_sup > 1.0:
            if epsilon_grid is None:
                epsilon_grid = [(p_sup - 1.0) * 2.0**-k for k in range(1, 11)]
            blow = None
            for eps in epsilon_grid:
                blow = check_blowup_weight(h, r, rho, p_sup, eps)
                if blow["holds"]:
                    existence, theorem = "excluded", "blowup-weighted"
                    epsilon = eps
                    break
            certificates.append(_certificate(
                "weighted mass condition holds for some epsilon",
                None if blow is None else blow["exponent_detail"],
                None, existence == "excluded"))
        else:
            flags.append("non-existence mechanism needs a finite growth "
                         "exponent under a non-constant weight")

    if existence == "predicted":
        if C0 is None:
            C0 = _measured_c0(N, rho / r)
        C1 = A * C0 * K ** (1.0 / r)
        d2 = check_def2(g, h, r, rho, C1)
        certificates.append(_certificate("Lipschitz mass finite",
                                         d2["integral_value"], math.inf,
                                         d2["pass"]))
        if d2["pass"]:
            uniqueness = "predicted"

    return Verdict(existence, uniqueness, theorem, crit, rho, spec.data_side,
                   tuple(certificates), epsilon, tuple(flags))
