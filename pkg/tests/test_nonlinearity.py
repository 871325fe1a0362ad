import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatlab.nonlinearity import (NonlinearitySpec, WeightSpec, envelope_F,
                                  envelope_G, growth_exponents, lipschitz_L,
                                  osgood_tail, parse_nonlinearity,
                                  parse_weight)


class TestParsing:
    def test_power(self):
        g = parse_nonlinearity("power:q=3")
        assert g.family == "power" and g.q == 3.0
        assert g(2.0) == pytest.approx(8.0)

    def test_odd_extension(self):
        g = parse_nonlinearity("power:q=3,odd=1")
        assert g(-2.0) == pytest.approx(-8.0)

    def test_exponential(self):
        g = parse_nonlinearity("exp:alpha=1")
        assert g(1.0) == pytest.approx(math.e - 1.0)

    def test_log_power(self):
        g = parse_nonlinearity("logpow:q=5,s=2")
        assert g(0.0) == 0.0
        # g(t) = (1+t)^q log(1+t)^s, so g(e-1) = e^q
        assert g(math.e - 1.0) == pytest.approx(math.e ** 5)

    def test_linear(self):
        g = parse_nonlinearity("linear:c=2")
        assert g(3.0) == pytest.approx(6.0)

    def test_weights(self):
        assert parse_weight("one")(0.37) == 1.0
        h = parse_weight("weight:beta=1")
        assert h(2.0) == pytest.approx(2.0)
        assert h.integral(2.0) == pytest.approx(2.0)

    def test_bad_strings(self):
        for text in ("power:q=0.5", "mystery:x=1", "weight:beta=-2"):
            with pytest.raises(ValueError):
                if text.startswith("weight"):
                    parse_weight(text)
                else:
                    parse_nonlinearity(text)


class TestEnvelopes:
    def test_power_envelope_exact(self):
        g = NonlinearitySpec.power(3.0)
        assert envelope_G(g, 2.0) == pytest.approx(4.0)   # g(s)/s = s^2
        assert lipschitz_L(g, 2.0) == pytest.approx(12.0)  # 3 s^2

    @settings(max_examples=40, deadline=None)
    @given(q=st.floats(min_value=1.1, max_value=5.0),
           s1=st.floats(min_value=0.01, max_value=50.0),
           s2=st.floats(min_value=0.01, max_value=50.0))
    def test_envelope_nondecreasing(self, q, s1, s2):
        g = NonlinearitySpec.power(q)
        lo, hi = min(s1, s2), max(s1, s2)
        assert envelope_G(g, lo) <= envelope_G(g, hi) * (1.0 + 1e-12)

    @settings(max_examples=40, deadline=None)
    @given(q=st.floats(min_value=1.1, max_value=5.0),
           s=st.floats(min_value=0.01, max_value=50.0))
    def test_lipschitz_dominates_envelope(self, q, s):
        # for convex g with g(0) = 0 the chord slope is below the derivative
        g = NonlinearitySpec.power(q)
        assert envelope_G(g, s) <= lipschitz_L(g, s) * (1.0 + 1e-12)

    def test_window_envelope(self):
        g = NonlinearitySpec.power(2.0)
        assert envelope_F(g, 3.0) == pytest.approx(3.0)


class TestGrowthExponents:
    def test_three_families_exact(self):
        p_star = 5.0 / 3.0
        cases = [
            (NonlinearitySpec.power(3.0), 3.0, 3.0),
            (NonlinearitySpec.exponential(1.0), None, math.inf),
            (NonlinearitySpec.log_power(4.0, 2.0), 4.0, 4.0),
        ]
        for g, p_inf, p_sup in cases:
            exps = growth_exponents(g, p_star)
            assert exps.method == "exact"
            assert exps.p_inf == p_inf
            assert exps.p_sup == p_sup

    def test_tabulated_is_fitted(self):
        t = np.geomspace(1e-3, 1e3, 200)
        g = NonlinearitySpec.tabulated(t, t**2.5)
        exps = growth_exponents(g, 5.0 / 3.0)
        assert exps.method != "exact"
        assert exps.p_sup == pytest.approx(2.5, abs=0.1)


class TestOsgoodTail:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    @pytest.mark.parametrize("z", [0.5, 2.0, 100.0])
    def test_power_oracle(self, p, z):
        # int_z^inf s^-p ds = z^{1-p}/(p-1)
        g = NonlinearitySpec.power(p)
        tail = osgood_tail(g, z)
        assert tail.converged
        assert tail.value == pytest.approx(z ** (1.0 - p) / (p - 1.0),
                                           rel=1e-6)

    def test_linear_diverges(self):
        tail = osgood_tail(NonlinearitySpec.linear(1.0), 1.0)
        assert not tail.converged

    @settings(max_examples=25, deadline=None)
    @given(p=st.floats(min_value=1.2, max_value=4.0),
           z1=st.floats(min_value=0.1, max_value=10.0),
           z2=st.floats(min_value=0.1, max_value=10.0))
    def test_tail_decreasing_in_z(self, p, z1, z2):
        g = NonlinearitySpec.power(p)
        lo, hi = min(z1, z2), max(z1, z2)
        assert osgood_tail(g, hi).value <= osgood_tail(g, lo).value \
            * (1.0 + 1e-9)


class TestWeights:
    def test_power_integral_oracle(self):
        h = WeightSpec.power(0.5)
        # int_0^t s^{1/2} ds = (2/3) t^{3/2}
        assert h.integral(4.0) == pytest.approx((2.0 / 3.0) * 8.0)

    def test_tabulated_roundtrip(self):
        t = np.linspace(0.01, 2.0, 50)
        h = WeightSpec.tabulated(t, 2.0 * np.ones_like(t))
        assert h(1.0) == pytest.approx(2.0)
        assert h.integral(1.0) == pytest.approx(2.0, rel=1e-2)
