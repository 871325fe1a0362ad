import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatlab.criteria import (Verdict, check_blowup_weight, check_def2,
                              check_h4, check_laister, classify,
                              critical_values)
from heatlab.nonlinearity import NonlinearitySpec, WeightSpec
from heatlab.radial import ProblemSpec


def _spec(rho, q=3.0, r=1.0, N=3, beta=None, side="upper_class", K=1.0):
    return ProblemSpec(
        dimension=N, r=r, rho=rho, K=K, a=1.0,
        nonlinearity=NonlinearitySpec.power(q),
        weight=WeightSpec.one() if beta is None else WeightSpec.power(beta),
        data_side=side)


class TestCriticalValues:
    def test_oracle(self):
        got = critical_values(3, 1.0, 3.0)
        assert got["p_star"] == pytest.approx(1.0 + 2.0 / 3.0)
        assert got["rho_star"] == pytest.approx(1.0)
        assert got["rho_star_weighted"] == pytest.approx(1.0)

    def test_weighted_shift(self):
        got = critical_values(3, 1.0, 3.0, beta=1.0)
        assert got["rho_star_weighted"] == pytest.approx(2.0)

    def test_validation(self):
        for bad in (dict(N=3, r=1.0, q=1.0), dict(N=3, r=0.5, q=2.0),
                    dict(N=0, r=1.0, q=2.0)):
            with pytest.raises(ValueError):
                critical_values(bad["N"], bad["r"], bad["q"])

    @settings(max_examples=30, deadline=None)
    @given(r=st.floats(min_value=1.0, max_value=5.0),
           q=st.floats(min_value=1.1, max_value=8.0))
    def test_rho_star_decreasing_in_q(self, r, q):
        lo = critical_values(3, r, q)["rho_star"]
        hi = critical_values(3, r, q + 0.5)["rho_star"]
        assert hi < lo


class TestLaister:
    def test_subcritical_power_passes(self):
        # q = 1.5 < p* = 3 for r = 1, N = 1
        f = NonlinearitySpec.power(1.5)
        assert check_laister(f, 2.0, 1)["pass"]

    def test_supercritical_power_fails(self):
        f = NonlinearitySpec.power(5.0)
        assert not check_laister(f, 1.0, 3)["pass"]

    def test_r1_integral_oracle(self):
        # r=1, N=1: p* = 3; int_1^inf s^{-3} s^{0.5} ds = 1/1.5
        f = NonlinearitySpec.power(1.5)
        res = check_laister(f, 1.0, 1)
        assert res["pass"]
        assert res["detail"].value == pytest.approx(1.0 / 1.5, rel=1e-5)


class TestH4:
    @pytest.mark.parametrize("rho", np.linspace(0.3, 2.7, 5))
    @pytest.mark.parametrize("q", np.linspace(1.5, 4.5, 5))
    @pytest.mark.parametrize("beta", [0.0, 1.0])
    def test_matches_analytic_predicate(self, rho, q, beta):
        # for g = t^q, h = t^beta the integral converges iff
        # rho (q - 1) / 2 < r (beta + 1)
        r = 1.0
        g = NonlinearitySpec.power(q)
        h = WeightSpec.one() if beta == 0.0 else WeightSpec.power(beta)
        want = rho * (q - 1.0) / 2.0 < r * (beta + 1.0)
        got = check_h4(g, h, r, rho)["pass"]
        assert got == want

    def test_validation(self):
        g = NonlinearitySpec.power(2.0)
        with pytest.raises(ValueError):
            check_h4(g, WeightSpec.one(), 1.0, -0.5)
        with pytest.raises(ValueError):
            check_h4(g, WeightSpec.one(), 1.0, 0.5, A=0.5)


class TestDef2:
    @pytest.mark.parametrize("p,rho,expected", [
        (2.0, 1.0, True),    # p < 1 + 2r/rho = 3
        (2.9, 1.0, True),
        (3.0, 1.0, False),   # boundary diverges (log)
        (4.0, 1.0, False),
        (2.0, 4.0, False),   # 1 + 2/4 = 1.5 < 2
    ])
    def test_threshold(self, p, rho, expected):
        g = NonlinearitySpec.power(p)
        res = check_def2(g, WeightSpec.one(), 1.0, rho, C1=1.0)
        assert res["pass"] == expected

    def test_requires_lipschitz(self):
        t = np.geomspace(1e-3, 1e3, 50)
        g = NonlinearitySpec.tabulated(t, t**0.5)  # not locally Lipschitz at 0
        if not g.locally_lipschitz:
            with pytest.raises(ValueError):
                check_def2(g, WeightSpec.one(), 1.0, 1.0, C1=1.0)


class TestBlowupWeight:
    @pytest.mark.parametrize("beta", [0.0, 0.5, 1.0, 2.0])
    @pytest.mark.parametrize("rho", [0.5, 1.5, 2.5, 4.0])
    def test_matches_analytic_threshold(self, beta, rho):
        # theta = rho (p - 1 - eps) / (2 r); holds iff beta + 1 < theta
        r, p, eps = 1.0, 3.0, 0.01
        h = WeightSpec.one() if beta == 0.0 else WeightSpec.power(beta)
        theta = rho * (p - 1.0 - eps) / (2.0 * r)
        got = check_blowup_weight(h, r, rho, p, eps)["holds"]
        assert got == (beta + 1.0 < theta)

    def test_validation(self):
        h = WeightSpec.one()
        with pytest.raises(ValueError):
            check_blowup_weight(h, 1.0, 1.0, math.inf, 0.1)
        with pytest.raises(ValueError):
            check_blowup_weight(h, 1.0, 1.0, 3.0, 5.0)


class TestClassify:
    def test_subcritical_existence(self):
        v = classify(_spec(0.5))
        assert v.existence == "predicted"
        assert v.uniqueness == "predicted"
        assert v.applied_theorem == "comparison-subcritical"

    def test_supercritical_exclusion(self):
        v = classify(_spec(1.5, side="lower_class"))
        assert v.existence == "excluded"
        assert v.applied_theorem == "osgood-supercritical"

    def test_boundary_inconclusive(self):
        v = classify(_spec(1.0))
        assert v.existence == "inconclusive"

    def test_upper_side_cannot_exclude(self):
        # upper-class data licenses only existence conclusions
        v = classify(_spec(1.5, side="upper_class"))
        assert v.existence in ("predicted", "inconclusive")
        assert v.existence == "inconclusive"

    def test_weighted_shift(self):
        # h = t moves the critical value to 2 r (beta+1)/(q-1) = 2
        assert classify(_spec(1.5, beta=1.0)).existence == "predicted"
        v = classify(_spec(2.5, beta=1.0, side="lower_class"))
        assert v.existence == "excluded"
        assert v.applied_theorem == "blowup-weighted"
        assert v.epsilon is not None

    def test_monotone_in_rho(self):
        # once excluded, larger rho stays excluded (constant weight)
        verdicts = [classify(_spec(rho, side="lower_class")).existence
                    for rho in (1.1, 1.5, 2.0, 2.9)]
        assert all(v == "excluded" for v in verdicts)
        verdicts = [classify(_spec(rho)).existence
                    for rho in (0.2, 0.5, 0.9)]
        assert all(v == "predicted" for v in verdicts)

    def test_exponential_family_always_excludable(self):
        # p_sup = inf means rho_star = 0: every rho > 0 is supercritical
        spec = ProblemSpec(dimension=3, r=1.0, rho=0.5, K=1.0, a=1.0,
                           nonlinearity=NonlinearitySpec.exponential(1.0),
                           weight=WeightSpec.one(), data_side="lower_class")
        assert classify(spec).existence == "excluded"

    def test_verdict_serializes(self):
        import json
        v = classify(_spec(0.5))
        assert isinstance(v, Verdict)
        json.dumps(v.as_dict())  # must not raise
        assert any(c["pass"] for c in v.as_dict()["certificates"])
