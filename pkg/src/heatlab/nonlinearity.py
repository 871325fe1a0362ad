"""Nonlinearity and time-weight families.

Provides the growth envelope G, the window envelope F, the Lipschitz
modulus L, asymptotic growth exponents, and the Osgood tail integral
int_z^infty ds / f(s) that powers the blow-up probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from heatlab.tails import classify_improper_integral

__all__ = [
    "NonlinearitySpec",
    "WeightSpec",
    "GrowthExponents",
    "OsgoodTail",
    "envelope_G",
    "envelope_F",
    "lipschitz_L",
    "growth_exponents",
    "osgood_tail",
    "parse_nonlinearity",
    "parse_weight",
]


@dataclass(frozen=True)
class NonlinearitySpec:
    """A nonlinearity g with regularity flags and exact growth metadata.

    Families:
      power(q):        g(t) = t^q for t > 0 (zero or odd extension below 0)
      exponential(a):  g(t) = e^{a t} - 1 for t > 0, 0 below
      log_power(q, s): g(t) = (1+t)^q [ln(1+t)]^s for t > 0, 0 below
      linear(c):       g(t) = c t
      tabulated:       piecewise-linear interpolation of sampled values
    """

    family: str
    q: float = 0.0
    alpha: float = 0.0
    s: float = 0.0
    slope: float = 1.0
    extension: str = "zero"  # "zero" or "odd", for the power family
    table_t: Optional[tuple] = None
    table_g: Optional[tuple] = None
    convex_on_positives: bool = True
    nondecreasing: bool = True
    zero_at_zero: bool = True
    locally_lipschitz: bool = True
    # (p_inf, p_sup): exact asymptotic exponents when known.
    # None means "does not exist"; math.inf is allowed for p_sup.
    exact_p_inf: Optional[float] = None
    exact_p_sup: Optional[float] = None
    has_exact_exponents: bool = False

    # ---- constructors -------------------------------------------------

    @staticmethod
    def power(q: float, extension: str = "zero") -> "NonlinearitySpec":
        if q <= 1.0:
            raise ValueError("power family requires q > 1")
        if extension not in ("zero", "odd"):
            raise ValueError("extension must be 'zero' or 'odd'")
        return NonlinearitySpec(
            family="power", q=q, extension=extension,
            exact_p_inf=q, exact_p_sup=q, has_exact_exponents=True,
        )

    @staticmethod
    def exponential(alpha: float) -> "NonlinearitySpec":
        if alpha <= 0.0:
            raise ValueError("exponential family requires alpha > 0")
        return NonlinearitySpec(
            family="exponential", alpha=alpha,
            exact_p_inf=None, exact_p_sup=math.inf, has_exact_exponents=True,
        )

    @staticmethod
    def log_power(q: float, s: float) -> "NonlinearitySpec":
        if q <= 1.0 or s < 1.0:
            raise ValueError("log_power family requires q > 1 and s >= 1")
        return NonlinearitySpec(
            family="log_power", q=q, s=s,
            exact_p_inf=q, exact_p_sup=q, has_exact_exponents=True,
        )

    @staticmethod
    def linear(slope: float = 1.0) -> "NonlinearitySpec":
        if slope <= 0.0:
            raise ValueError("linear family requires a positive slope")
        return NonlinearitySpec(family="linear", slope=slope)

    @staticmethod
    def tabulated(
        t: np.ndarray,
        g: np.ndarray,
        convex_on_positives: bool = False,
        nondecreasing: bool = True,
    ) -> "NonlinearitySpec":
        t = np.asarray(t, dtype=float)
        g = np.asarray(g, dtype=float)
        if t.ndim != 1 or t.shape != g.shape or t.size < 2:
            raise ValueError("tabulated family needs matching 1-d samples")
        if not np.all(np.diff(t) > 0):
            raise ValueError("tabulated abscissae must be strictly increasing")
        return NonlinearitySpec(
            family="tabulated",
            table_t=tuple(t), table_g=tuple(g),
            convex_on_positives=convex_on_positives,
            nondecreasing=nondecreasing,
        )

    # ---- evaluation ---------------------------------------------------

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        pos = t > 0.0
        out = np.zeros_like(t)
        if self.family == "power":
            if self.extension == "odd":
                with np.errstate(over="ignore"):
                    out = np.sign(t) * np.abs(t) ** self.q
            else:
                with np.errstate(over="ignore"):
                    out[pos] = t[pos] ** self.q
        elif self.family == "exponential":
            with np.errstate(over="ignore"):
                out[pos] = np.expm1(self.alpha * t[pos])
        elif self.family == "log_power":
            with np.errstate(over="ignore"):
                lp = np.log1p(t[pos])
                out[pos] = (1.0 + t[pos]) ** self.q * lp ** self.s
        elif self.family == "linear":
            out = self.slope * t
        elif self.family == "tabulated":
            out = np.interp(t, self.table_t, self.table_g)
        else:  # pragma: no cover - constructors prevent this
            raise ValueError(f"unknown family {self.family!r}")
        if out.ndim == 0:
            return float(out)
        return out

    def log_eval(self, log_t: np.ndarray) -> np.ndarray:
        """log g(t) at t = exp(log_t), t > 0, evaluated without overflow."""
        log_t = np.asarray(log_t, dtype=float)
        if self.family == "power":
            return self.q * log_t
        if self.family == "exponential":
            # log(e^{a t} - 1) ~ a t for large t
            t = np.exp(log_t)
            small = t < 30.0
            out = np.empty_like(log_t)
            out[small] = np.log(np.expm1(self.alpha * t[small]))
            out[~small] = self.alpha * t[~small]
            return out
        if self.family == "log_power":
            t = np.exp(log_t)
            return self.q * np.log1p(t) + self.s * np.log(np.log1p(t))
        if self.family == "linear":
            return math.log(self.slope) + log_t
        vals = self(np.exp(log_t))
        with np.errstate(divide="ignore"):
            return np.log(vals)

    def derivative_sup(self, s: float) -> float:
        """sup of g' over [-s, s] (analytic families only)."""
        if self.family == "power":
            return self.q * s ** (self.q - 1.0)
        if self.family == "exponential":
            return self.alpha * math.exp(self.alpha * s)
        if self.family == "log_power":
            lp = math.log1p(s)
            if lp == 0.0:
                return 0.0
            return (1.0 + s) ** (self.q - 1.0) * lp ** (self.s - 1.0) * (
                self.q * lp + self.s
            )
        if self.family == "linear":
            return self.slope
        raise ValueError("no analytic derivative for this family")

    def label(self) -> str:
        if self.family == "power":
            return f"power:q={self.q:g}"
        if self.family == "exponential":
            return f"exp:alpha={self.alpha:g}"
        if self.family == "log_power":
            return f"logpow:q={self.q:g},s={self.s:g}"
        if self.family == "linear":
            return f"linear:c={self.slope:g}"
        return "tabulated"


@dataclass(frozen=True)
class WeightSpec:
    """The time weight h(t): constant one, power t^beta, or tabulated."""

    family: str
    beta: float = 0.0
    table_t: Optional[tuple] = None
    table_h: Optional[tuple] = None

    @staticmethod
    def one() -> "WeightSpec":
        return WeightSpec(family="one")

    @staticmethod
    def power(beta: float) -> "WeightSpec":
        if beta <= -1.0:
            raise ValueError("power weight requires beta > -1")
        return WeightSpec(family="power", beta=beta)

    @staticmethod
    def tabulated(t: np.ndarray, h: np.ndarray) -> "WeightSpec":
        t = np.asarray(t, dtype=float)
        h = np.asarray(h, dtype=float)
        if t.shape != h.shape or t.ndim != 1 or t.size < 2:
            raise ValueError("tabulated weight needs matching 1-d samples")
        if np.any(h < 0.0):
            raise ValueError("weight must be nonnegative")
        return WeightSpec(family="tabulated", table_t=tuple(t), table_h=tuple(h))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "one":
            out = np.ones_like(t)
        elif self.family == "power":
            with np.errstate(divide="ignore"):
                out = np.where(t > 0.0, t, np.nan) ** self.beta
            out = np.where(t > 0.0, out, np.inf if self.beta < 0 else 0.0)
            if self.beta == 0.0:
                out = np.ones_like(t)
        else:
            out = np.interp(t, self.table_t, self.table_h)
        if out.ndim == 0:
            return float(out)
        return out

    def integral(self, t: float) -> float:
        """int_0^t h(s) ds."""
        if t < 0.0:
            raise ValueError("t must be nonnegative")
        if self.family == "one":
            return float(t)
        if self.family == "power":
            return float(t ** (self.beta + 1.0) / (self.beta + 1.0))
        ts = np.asarray(self.table_t)
        hs = np.asarray(self.table_h)
        grid = np.linspace(0.0, t, 2049)
        return float(np.trapezoid(np.interp(grid, ts, hs), grid))

    def label(self) -> str:
        if self.family == "one":
            return "one"
        if self.family == "power":
            return f"weight:beta={self.beta:g}"
        return "tabulated"


# ---- envelopes ---------------------------------------------------------


def _sample_window(lo: float, hi: float, n: int = 4001) -> np.ndarray:
    return np.geomspace(max(lo, 1e-300), hi, n)


def envelope_G(g: NonlinearitySpec, s: float) -> float:
    """G(s) = sup over 0 < |t| <= s of g(t)/t, with G(0) = 0."""
    if s < 0.0:
        raise ValueError("s must be nonnegative")
    if not g.zero_at_zero or not g.locally_lipschitz:
        raise ValueError("envelope G requires g(0) = 0 and local Lipschitz")
    if s == 0.0:
        return 0.0
    if g.family == "power":
        return float(s ** (g.q - 1.0))
    if g.family == "exponential":
        return float(np.expm1(g.alpha * s) / s)
    if g.family == "log_power":
        return float((1.0 + s) ** g.q * math.log1p(s) ** g.s / s)
    if g.family == "linear":
        return g.slope
    ts = _sample_window(s * 1e-12, s)
    ts = np.concatenate([-ts, ts])
    with np.errstate(invalid="ignore"):
        quot = np.asarray(g(ts)) / ts
    quot = quot[np.isfinite(quot)]
    return float(max(quot.max(initial=0.0), 0.0))


def envelope_F(f: NonlinearitySpec, sigma: float, lower: float = 1.0) -> float:
    """F(sigma) = sup of f(t)/t over [lower, sigma] (lower may be > 0 and < 1)."""
    if lower <= 0.0:
        raise ValueError("window lower limit must be positive")
    if sigma < lower:
        raise ValueError("empty window: sigma < lower")
    if f.family in ("power", "exponential", "log_power", "linear"):
        # quotient f(t)/t is nondecreasing for these families
        return float(np.asarray(f(sigma)) / sigma)
    ts = _sample_window(lower, sigma)
    quot = np.asarray(f(ts)) / ts
    return float(quot.max())


def lipschitz_L(g: NonlinearitySpec, s: float) -> float:
    """L(s) = sup of difference quotients of g over [-s, s], L(0) = 0."""
    if s < 0.0:
        raise ValueError("s must be nonnegative")
    if not g.locally_lipschitz:
        raise ValueError("L requires a locally Lipschitz nonlinearity")
    if s == 0.0:
        return 0.0
    if g.family != "tabulated":
        return float(g.derivative_sup(s))
    ts = np.linspace(-s, s, 257)
    vals = np.asarray(g(ts))
    du = ts[None, :] - ts[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = (vals[None, :] - vals[:, None]) / du
    quot = quot[np.isfinite(quot)]
    return float(max(quot.max(initial=0.0), 0.0))


@dataclass(frozen=True)
class GrowthExponents:
    p_inf: Optional[float]
    p_sup: Optional[float]
    method: str                # "exact" or "fit"
    slope_band: tuple = ()     # (low, high) for the fitted slope

    def as_dict(self) -> dict:
        return {
            "p_inf": self.p_inf,
            "p_sup": self.p_sup,
            "method": self.method,
            "slope_band": list(self.slope_band),
        }


def growth_exponents(f: NonlinearitySpec, p_star: float) -> GrowthExponents:
    """Asymptotic growth exponents of f relative to the threshold p_star.

    Exact family metadata is returned when available.  Otherwise the
    log-log slope of f over t = 2^k, k = 20..60, is fitted; a numeric fit
    can only be a heuristic for a limsup/liminf, and is labeled as such.
    """
    if not f.nondecreasing:
        raise ValueError("growth exponents are defined for nondecreasing f")
    if f.has_exact_exponents:
        return GrowthExponents(f.exact_p_inf, f.exact_p_sup, "exact")

    ks = np.arange(20, 61, dtype=float)
    log_t = ks * math.log(2.0)
    if f.family == "tabulated":
        tmax = max(f.table_t)
        log_t = log_t[np.exp(log_t) <= tmax]
        if log_t.size < 8:
            log_t = np.log(np.geomspace(max(f.table_t[0], 1.0), tmax, 16))
    log_f = np.asarray(f.log_eval(log_t), dtype=float)
    good = np.isfinite(log_f)
    log_t, log_f = log_t[good], log_f[good]
    if log_t.size < 4:
        raise ValueError("not enough finite samples to fit a growth exponent")

    slopes = np.diff(log_f) / np.diff(log_t)
    head = float(np.median(slopes[: max(3, slopes.size // 4)]))
    tail = float(np.median(slopes[-max(3, slopes.size // 4):]))
    band = (float(slopes.min()), float(slopes.max()))
    if tail > 1.5 * head + 1.0 or tail > 50.0:
        # slope keeps growing: super-polynomial
        return GrowthExponents(None, math.inf, "fit", band)
    slope = float(np.polyfit(log_t, log_f, 1)[0])
    return GrowthExponents(slope, slope, "fit", (band[0], band[1]))


@dataclass(frozen=True)
class OsgoodTail:
    value: float
    converged: bool
    tail_exponent: float

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "converged": self.converged,
            "tail_exponent": self.tail_exponent,
        }


def osgood_tail(f: NonlinearitySpec, z: float) -> OsgoodTail:
    """int_z^infty ds / f(s), classified by adaptive quadrature + tail fit."""
    if z <= 0.0:
        raise ValueError("z must be positive")
    fz = float(np.asarray(f(z)))
    if fz <= 0.0:
        raise ValueError("f must be positive on [z, infinity)")

    def integrand(s: np.ndarray) -> np.ndarray:
        vals = np.asarray(f(s), dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            out = np.where(vals > 0.0, 1.0 / vals, np.inf)
        out[~np.isfinite(vals)] = 0.0  # f overflowed: contribution vanishes
        return out

    res = classify_improper_integral(integrand, z)
    return OsgoodTail(res.value, res.converged, res.tail_exponent)


# ---- config-string parsing ---------------------------------------------


def _parse_kv(body: str) -> dict:
    out = {}
    if body:
        for item in body.split(","):
            key, _, val = item.partition("=")
            if not val:
                raise ValueError(f"malformed parameter {item!r}")
            out[key.strip()] = float(val)
    return out


def parse_nonlinearity(text: str) -> NonlinearitySpec:
    """Parse strings like 'power:q=3', 'exp:alpha=1', 'logpow:q=5,s=2'."""
    name, _, body = text.strip().partition(":")
    kv = _parse_kv(body)
    name = name.lower()
    if name == "power":
        ext = "odd" if kv.pop("odd", 0.0) else "zero"
        return NonlinearitySpec.power(kv.pop("q"), extension=ext)
    if name in ("exp", "exponential"):
        return NonlinearitySpec.exponential(kv.pop("alpha"))
    if name in ("logpow", "log_power"):
        return NonlinearitySpec.log_power(kv.pop("q"), kv.pop("s"))
    if name == "linear":
        return NonlinearitySpec.linear(kv.pop("c", 1.0))
    raise ValueError(f"unknown nonlinearity family {name!r}")


def parse_weight(text: str) -> WeightSpec:
    """Parse 'one', 'weight:beta=0.5' or 'power:beta=0.5'."""
    name, _, body = text.strip().partition(":")
    name = name.lower()
    if name in ("one", "const", "1"):
        return WeightSpec.one()
    if name in ("weight", "power", "beta"):
        kv = _parse_kv(body)
        return WeightSpec.power(kv.pop("beta"))
    raise ValueError(f"unknown weight family {name!r}")
