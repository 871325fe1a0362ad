"""Batch verification suite for the semigroup estimates and invariants.

Assembles the individual checks (smoothing bound, decay-constant slopes,
lower-bound constants, kernel ordering, structural invariants) into
JSON-able records {check, params, lhs, rhs, ratio, pass}.  A named fault
can be injected to exercise failure reporting end to end.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from heatlab.radial import RadialFunction, RadialGrid, radial_norm
from heatlab.semigroup import (
    DirichletBallEngine,
    FreeSpaceEngine,
    estimate_lemma2_constant,
    verify_jensen,
    verify_kernel_ordering,
    verify_lemma1_lower,
    verify_smoothing,
)

__all__ = ["run_verify_suite", "SUITE_SECTIONS"]

SUITE_SECTIONS = ("smoothing", "decay_constant", "lower_bounds",
                  "ordering", "invariants")


def _record(check: str, params: dict, lhs, rhs, ok: bool) -> dict:
    ratio = None
    if isinstance(lhs, (int, float)) and isinstance(rhs, (int, float)) \
            and rhs not in (0, 0.0):
        ratio = lhs / rhs
    return {"check": check, "params": params, "lhs": lhs, "rhs": rhs,
            "ratio": ratio, "pass": bool(ok)}


def _random_profile(rng, grid: RadialGrid) -> RadialFunction:
    center = rng.uniform(0.0, 0.5 * grid.max_radius)
    # width >= 0.3 keeps the bump resolvable on the graded quadrature grid
    width = rng.uniform(0.3, 1.0)
    amp = rng.uniform(0.5, 2.0)
    vals = amp * np.exp(-((grid.nodes - center) / width) ** 2)
    return RadialFunction(grid, vals, 0.0, grid.max_radius)


def _smoothing_section(fault: Optional[str], cases: int = 50) -> list:
    rng = np.random.default_rng(0)
    grids = {N: RadialGrid(N, 8.0, 384, 3.0) for N in (1, 2, 3)}
    engines = {N: FreeSpaceEngine(g) for N, g in grids.items()}
    qs = [1.0, 2.0, 4.0, math.inf]
    out = []
    for i in range(cases):
        N = int(rng.integers(1, 4))
        f = _random_profile(rng, grids[N])
        t = float(10.0 ** rng.uniform(-3.0, 0.0))
        q1 = qs[int(rng.integers(0, len(qs)))]
        q2 = qs[int(rng.integers(0, len(qs)))]
        if q1 > q2:
            q1, q2 = q2, q1
        chk = verify_smoothing(engines[N], f, t, q1, q2)
        bound = chk.bound
        ok = chk.satisfied
        if fault == "smoothing":
            bound = 0.5 * bound  # injected broken constant (test hook)
            ok = chk.lhs <= bound * (1.0 + 1e-3)
        out.append(_record("smoothing",
                           {"case": i, "N": N, "t": t, "q1": q1, "q2": q2},
                           chk.lhs, bound, ok))
    return out


def _decay_constant_section() -> list:
    grid = RadialGrid(3, 8.0, 512, 3.0)
    engine = FreeSpaceEngine(grid)
    out = []
    for gamma in (0.5, 1.0, 2.0):
        est = estimate_lemma2_constant(3, gamma, math.inf, math.inf, engine)
        ok = abs(est.slope_hat + gamma / 2.0) <= 0.05
        out.append(_record("decay_constant",
                           {"N": 3, "gamma": gamma, "q1": "inf", "q2": "inf",
                            "C0_hat": est.C0_hat},
                           est.slope_hat, -gamma / 2.0, ok))
    return out


def _lower_bounds_section() -> list:
    out = []
    for N in (1, 2, 3):
        grid = RadialGrid(N, 4.0, 256, 1.0)
        engine = DirichletBallEngine(grid)
        res = verify_lemma1_lower(engine, l=1.0, gamma=0.5,
                                  t_list=[1e-3, 1e-2, 1e-1])
        out.append(_record("lower_bounds",
                           {"N": N, "l": 1.0, "gamma": 0.5,
                            "c_N": res["c_N"], "c_N_prime": res["c_N_prime"]},
                           min(res["c_N"] + res["c_N_prime"]), 0.0,
                           res["pass"]))
    return out


def _ordering_section() -> list:
    out = []
    for N in (1, 3):
        grid = RadialGrid(N, 8.0, 256, 3.0)
        f = RadialFunction(grid, (grid.nodes <= 1.0).astype(float), 0.0, 1.0)
        ok = verify_kernel_ordering(f, 0.05, 2.0, 4.0)
        out.append(_record("ordering",
                           {"N": N, "t": 0.05, "R_small": 2.0, "R_large": 4.0},
                           None, None, ok))
    return out


def _invariants_section() -> list:
    out = []
    for N in (1, 2, 3):
        grid = RadialGrid(N, 8.0, 384, 3.0)
        free = FreeSpaceEngine(grid)
        # small time step: the semigroup-law check compares two CN marches,
        # so the O(dt^2) time error must sit below the 1e-5 tolerance
        bgrid = RadialGrid(N, 4.0, 384, 1.0)
        ball = DirichletBallEngine(bgrid, dt_cap=2.5e-4)
        f = RadialFunction(grid, np.exp(-grid.nodes**2), 0.0, 8.0)
        fb = RadialFunction(bgrid, np.exp(-2.0 * bgrid.nodes**2), 0.0, 4.0)

        for name, eng, dat in (("free_space", free, f),
                               ("dirichlet_ball", ball, fb)):
            # semigroup law
            lhs = np.max(np.abs(eng.apply(eng.apply(dat, 0.01), 0.02).values
                                - eng.apply(dat, 0.03).values))
            bound = 1e-5 * radial_norm(dat, math.inf)
            out.append(_record("semigroup_law", {"N": N, "engine": name},
                               float(lhs), bound, lhs <= bound))
            # positivity
            mn = float(np.min(eng.apply(dat, 0.05).values))
            out.append(_record("positivity", {"N": N, "engine": name},
                               mn, -1e-12, mn >= -1e-12))
            # order preservation
            lo = dat.scaled(0.5)
            diff = float(np.max(eng.apply(lo, 0.05).values
                                - eng.apply(dat, 0.05).values))
            out.append(_record("order_preservation",
                               {"N": N, "engine": name}, diff, 1e-12,
                               diff <= 1e-12))
            # Jensen for two convex functions vanishing at 0
            for label, phi in (("square", lambda v: np.maximum(v, 0.0) ** 2),
                               ("expm1", lambda v: np.expm1(np.maximum(v, 0.0)))):
                v = verify_jensen(eng, dat, phi, 0.05)
                out.append(_record("jensen",
                                   {"N": N, "engine": name, "phi": label},
                                   v, 1e-6, v <= 1e-6))
        # L1 contraction (free space, data well inside the truncation radius)
        l1_before = radial_norm(f, 1.0)
        l1_after = radial_norm(free.apply(f, 0.1), 1.0)
        out.append(_record("l1_contraction", {"N": N, "engine": "free_space"},
                           l1_after, l1_before * (1.0 + 1e-4),
                           l1_after <= l1_before * (1.0 + 1e-4)))
    return out


def run_verify_suite(only: Optional[str] = None,
                     fault: Optional[str] = None) -> dict:
    """Run the estimate-verification battery.

    only   — restrict to a single section (see SUITE_SECTIONS);
    fault  — named fault injection ("smoothing" halves the smoothing bound)
             used to exercise the failure path.
    """
    if only is not None and only not in SUITE_SECTIONS:
        raise ValueError(f"unknown section {only!r}; "
                         f"choose from {SUITE_SECTIONS}")
    sections = {
        "smoothing": lambda: _smoothing_section(fault),
        "decay_constant": _decay_constant_section,
        "lower_bounds": _lower_bounds_section,
        "ordering": _ordering_section,
        "invariants": _invariants_section,
    }
    checks: list = []
    for name, fn in sections.items():
        if only is None or only == name:
            checks.extend(fn())
    failed = [c for c in checks if not c["pass"]]
    return {
        "checks": checks,
        "n_checks": len(checks),
        "n_failed": len(failed),
        "failed_names": sorted({c["check"] for c in failed}),
        "pass": not failed,
    }
