"""Acceptance gate: the nine headline properties of the laboratory.

Each criterion prints a single pass/fail line (bypassing pytest capture so
the lines appear in the terminal log) and asserts its stated tolerance and
runtime budget.
"""

import math
import sys
import time

import numpy as np
import pytest

from heatlab.criteria import check_h4, classify
from heatlab.nonlinearity import (NonlinearitySpec, WeightSpec,
                                  growth_exponents, osgood_tail)
from heatlab.radial import (ProblemSpec, RadialFunction, RadialGrid,
                            build_singular_data)
from heatlab.semigroup import (DirichletBallEngine, FreeSpaceEngine,
                               estimate_lemma2_constant, verify_jensen,
                               verify_lemma1_lower, verify_smoothing)
from heatlab.solver import (blowup_probe, build_supersolution, decay_check,
                            default_engine, direct_mild_solve,
                            gronwall_uniqueness_check, monotone_iterate)
from heatlab.verification import run_verify_suite


def _report(number: int, name: str, ok: bool, elapsed: float, detail: str):
    line = (f"ACCEPTANCE {number} ({name}): {'PASS' if ok else 'FAIL'} "
            f"[{elapsed:.1f}s] {detail}")
    print(line, file=sys.__stdout__, flush=True)
    import conftest
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


def _cubic_spec(rho, side="upper_class", beta=None):
    return ProblemSpec(
        dimension=3, r=1.0, rho=rho, K=1.0, a=1.0,
        nonlinearity=NonlinearitySpec.power(3.0),
        weight=WeightSpec.one() if beta is None else WeightSpec.power(beta),
        data_side=side)


@pytest.fixture(scope="module")
def existence_runs():
    """Converged monotone solves for rho in {0.25, 0.5, 0.75}, shared by
    criteria 1 and 9."""
    runs = {}
    for rho in (0.25, 0.5, 0.75):
        spec = _cubic_spec(rho)
        engine = default_engine(spec, node_count=256)
        u0 = build_singular_data(spec, engine.grid)
        T = min(build_supersolution(spec, verify=False).T_star, 1.0)
        trace = monotone_iterate(spec, engine, u0, T, n_steps=32)
        runs[rho] = (spec, engine, u0, trace)
    return runs


def test_acceptance_1_dichotomy(existence_runs):
    t0 = time.perf_counter()
    ok = True
    details = []
    for rho, (spec, engine, u0, trace) in existence_runs.items():
        c = trace.decay_constant()
        good = (trace.status == "converged" and trace.monotone_decreasing
                and math.isfinite(c))
        ok &= good
        details.append(f"rho={rho}: {trace.status}, C_meas={c:.3f}")
    for rho in (1.25, 1.5, 1.75):
        spec = _cubic_spec(rho, side="lower_class")
        engine = default_engine(spec, node_count=256)
        probe = blowup_probe(spec, engine)
        good = (probe["applicable"] and probe["max_phi"] > 1.0
                and probe["argmax_tau"] <= 1e-2)
        ok &= good
        details.append(f"rho={rho}: Phi_max={probe['max_phi']:.3g}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 300.0
    _report(1, "dichotomy at rho*=1", ok, elapsed, "; ".join(details))


def test_acceptance_2_weighted_shift():
    t0 = time.perf_counter()
    spec_ex = _cubic_spec(1.5, beta=1.0)
    assert classify(spec_ex).existence == "predicted"
    engine = default_engine(spec_ex, node_count=256)
    u0 = build_singular_data(spec_ex, engine.grid)
    T = min(build_supersolution(spec_ex, verify=False).T_star, 1.0)
    trace = monotone_iterate(spec_ex, engine, u0, T, n_steps=32)
    exist_ok = trace.status == "converged" and trace.monotone_decreasing

    spec_no = _cubic_spec(2.5, side="lower_class", beta=1.0)
    engine_no = default_engine(spec_no, node_count=256)
    probe = blowup_probe(spec_no, engine_no)
    excl_ok = probe["applicable"] and probe["max_phi"] > 1.0
    elapsed = time.perf_counter() - t0
    ok = exist_ok and excl_ok and elapsed <= 300.0
    _report(2, "weighted shift to rho*=2", ok, elapsed,
            f"rho=1.5 {trace.status}; rho=2.5 Phi_max={probe['max_phi']:.3g}")


def test_acceptance_3_smoothing():
    t0 = time.perf_counter()
    res = run_verify_suite(only="smoothing")
    random_ok = res["pass"] and res["n_checks"] == 50

    # near-delta bump saturates the exact L1 -> Linf constant within 2%
    grid = RadialGrid(3, 8.0, 512, 3.0)
    engine = FreeSpaceEngine(grid)
    bump = RadialFunction(grid, np.exp(-grid.nodes**2 / (4.0 * 1e-3)),
                          0.0, 8.0)
    chk = verify_smoothing(engine, bump, 0.1, 1.0, math.inf)
    sat_ok = chk.satisfied and chk.lhs >= 0.98 * chk.bound
    elapsed = time.perf_counter() - t0
    ok = random_ok and sat_ok and elapsed <= 30.0
    _report(3, "smoothing estimate", ok, elapsed,
            f"50 random cases {res['n_failed']} failed; "
            f"saturation ratio={chk.lhs / chk.bound:.4f}")


def test_acceptance_4_decay_constant():
    t0 = time.perf_counter()
    grid = RadialGrid(3, 8.0, 512, 3.0)
    engine = FreeSpaceEngine(grid)
    ok = True
    details = []
    for gamma in (0.5, 1.0, 2.0):
        est = estimate_lemma2_constant(3, gamma, math.inf, math.inf, engine)
        fine = estimate_lemma2_constant(
            3, gamma, math.inf, math.inf, engine,
            t_grid=np.geomspace(1e-4, 1e-1, 25))
        slope_ok = abs(est.slope_hat + gamma / 2.0) <= 0.05
        stable_ok = abs(fine.C0_hat - est.C0_hat) <= 0.10 * est.C0_hat
        ok &= slope_ok and stable_ok
        details.append(f"gamma={gamma}: slope={est.slope_hat:.3f}, "
                       f"C0={est.C0_hat:.4f}/{fine.C0_hat:.4f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 60.0
    _report(4, "decay constant slope -gamma/2", ok, elapsed,
            "; ".join(details))


def test_acceptance_5_lower_bounds():
    t0 = time.perf_counter()
    ok = True
    details = []
    for N in (1, 2, 3):
        grid = RadialGrid(N, 4.0, 256, 1.0)
        engine = DirichletBallEngine(grid)
        res = verify_lemma1_lower(engine, l=1.0, gamma=0.5,
                                  t_list=[1e-3, 1e-2, 1e-1])
        positive = (all(c > 0.0 for c in res["c_N"])
                    and all(c > 0.0 for c in res["c_N_prime"]))
        ok &= positive and res["pass"]
        details.append(
            f"N={N}: c in [{min(res['c_N']):.3f},{max(res['c_N']):.3f}], "
            f"c' in [{min(res['c_N_prime']):.3f},{max(res['c_N_prime']):.3f}]")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 60.0
    _report(5, "kernel lower bounds", ok, elapsed, "; ".join(details))


def test_acceptance_6_criteria_oracles():
    t0 = time.perf_counter()
    # supersolution integral vs the analytic predicate on a 5 x 5 x 2 grid
    r = 1.0
    grid_ok = True
    for rho in np.linspace(0.3, 2.7, 5):
        for q in np.linspace(1.5, 4.5, 5):
            for beta in (0.0, 1.0):
                h = WeightSpec.one() if beta == 0.0 else WeightSpec.power(beta)
                want = rho * (q - 1.0) / 2.0 < r * (beta + 1.0)
                got = check_h4(NonlinearitySpec.power(q), h, r, rho)["pass"]
                grid_ok &= (got == want)

    osgood_ok = True
    for p in (1.5, 2.0, 3.0):
        for z in (0.5, 2.0, 50.0):
            tail = osgood_tail(NonlinearitySpec.power(p), z)
            exact = z ** (1.0 - p) / (p - 1.0)
            osgood_ok &= tail.converged and \
                abs(tail.value - exact) <= 1e-6 * exact

    p_star = 5.0 / 3.0
    exps_ok = True
    for g, want in [(NonlinearitySpec.power(3.0), (3.0, 3.0)),
                    (NonlinearitySpec.exponential(1.0), (None, math.inf)),
                    (NonlinearitySpec.log_power(4.0, 2.0), (4.0, 4.0))]:
        e = growth_exponents(g, p_star)
        exps_ok &= (e.method == "exact" and (e.p_inf, e.p_sup) == want)
    elapsed = time.perf_counter() - t0
    ok = grid_ok and osgood_ok and exps_ok and elapsed <= 30.0
    _report(6, "criteria oracles", ok, elapsed,
            f"h4 grid={grid_ok}, osgood={osgood_ok}, exponents={exps_ok}")


def test_acceptance_7_solver_oracles():
    t0 = time.perf_counter()
    spec = ProblemSpec(dimension=3, r=1.0, rho=0.5, K=1.0, a=1.0,
                       nonlinearity=NonlinearitySpec.linear(1.0),
                       weight=WeightSpec.one())
    engine = default_engine(spec, node_count=256)
    u0 = build_singular_data(spec, engine.grid)
    tol = 1e-8
    trace = monotone_iterate(spec, engine, u0, 0.01, tol=tol)
    k = len(trace.times) - 1
    t_end = float(trace.times[k])
    exact = math.exp(t_end) * engine.apply(u0, t_end).values
    linear_err = float(np.max(np.abs(trace.profiles[k] - exact))
                       / np.max(exact))
    linear_ok = linear_err <= 0.02
    residual_ok = trace.converged and trace.residual <= 10.0 * tol

    cubic = _cubic_spec(0.5)
    eng2 = default_engine(cubic, node_count=256)
    u02 = build_singular_data(cubic, eng2.grid)
    T = build_supersolution(cubic, verify=False).T_star
    mono = monotone_iterate(cubic, eng2, u02, T, n_steps=32)
    monotone_ok = mono.status == "converged" and mono.monotone_decreasing

    grid = RadialGrid(3, 8.0, 384, 3.0)
    free = FreeSpaceEngine(grid)
    f = RadialFunction(grid, np.exp(-grid.nodes**2), 0.0, 8.0)
    jensen_ok = (verify_jensen(free, f, lambda v: v**2, 0.05) <= 1e-6
                 and verify_jensen(free, f, np.expm1, 0.05) <= 1e-6)
    elapsed = time.perf_counter() - t0
    ok = linear_ok and residual_ok and monotone_ok and jensen_ok \
        and elapsed <= 60.0
    _report(7, "solver oracles", ok, elapsed,
            f"linear err={linear_err:.2e}, residual={trace.residual:.1e}, "
            f"monotone={monotone_ok}, jensen={jensen_ok}")


def test_acceptance_8_uniqueness():
    t0 = time.perf_counter()
    # p = 2 < 1 + 2 r / rho = 5: Gronwall applies and passes
    def spec_pair(rho, p, side="upper_class"):
        mk = lambda K: ProblemSpec(   # noqa: E731
            dimension=3, r=1.0, rho=rho, K=K, a=1.0,
            nonlinearity=NonlinearitySpec.power(p, extension="odd"),
            weight=WeightSpec.one(), data_side=side)
        return mk(1.0), mk(1.02)

    su, sv = spec_pair(0.5, 2.0)
    engine = default_engine(su, node_count=192)
    tu = monotone_iterate(su, engine, build_singular_data(su, engine.grid),
                          1e-3)
    tv = monotone_iterate(sv, engine, build_singular_data(sv, engine.grid),
                          1e-3)
    res = gronwall_uniqueness_check(tu, tv)
    pass_ok = res["applicable"] and res["pass"]

    # p = 4 >= 1 + 2 r / rho = 2: the Lipschitz mass diverges
    su, sv = spec_pair(2.0, 4.0, side="lower_class")
    engine = default_engine(su, node_count=128)
    tu = direct_mild_solve(su, engine, build_singular_data(su, engine.grid),
                           1e-6, n_steps=8)
    tv = direct_mild_solve(sv, engine, build_singular_data(sv, engine.grid),
                           1e-6, n_steps=8)
    res2 = gronwall_uniqueness_check(tu, tv)
    inapp_ok = not res2["applicable"]
    elapsed = time.perf_counter() - t0
    ok = pass_ok and inapp_ok and elapsed <= 60.0
    _report(8, "uniqueness via Gronwall", ok, elapsed,
            f"subcritical pass={pass_ok}, supercritical inapplicable"
            f"={inapp_ok}")


def test_acceptance_9_consistency(existence_runs):
    t0 = time.perf_counter()
    ok = True
    details = []
    for rho, (spec, engine, u0, trace) in existence_runs.items():
        assert trace.status == "converged"
        probe = blowup_probe(spec, engine, u0, tau_grid=trace.times)
        assert probe["applicable"]
        good = probe["max_phi"] <= 1.05
        ok &= good
        details.append(f"rho={rho}: Phi_max={probe['max_phi']:.3f}")
        # the decay certificate holds on the same runs
        ok &= decay_check(trace)["pass"]
    elapsed = time.perf_counter() - t0
    _report(9, "probe never contradicts a solution", ok, elapsed,
            "; ".join(details))
