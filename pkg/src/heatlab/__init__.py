"""Numerical laboratory for local existence/non-existence of mild solutions
of time-weighted semilinear heat equations with singular power-law data."""

from heatlab.radial import (
    RadialGrid,
    RadialFunction,
    ProblemSpec,
    build_singular_data,
    radial_norm,
    class_membership,
)
from heatlab.nonlinearity import (
    NonlinearitySpec,
    WeightSpec,
    envelope_G,
    envelope_F,
    lipschitz_L,
    growth_exponents,
    osgood_tail,
    parse_nonlinearity,
    parse_weight,
)
from heatlab.semigroup import (
    FreeSpaceEngine,
    DirichletBallEngine,
    heat_apply,
    verify_smoothing,
    estimate_lemma2_constant,
    verify_lemma1_lower,
    verify_kernel_ordering,
)
from heatlab.criteria import (
    critical_values,
    check_laister,
    check_h4,
    check_blowup_weight,
    check_def2,
    classify,
    Verdict,
)
from heatlab.verification import run_verify_suite
from heatlab.solver import (
    SolveTrace,
    SandwichPair,
    build_supersolution,
    monotone_iterate,
    direct_mild_solve,
    blowup_probe,
    decay_check,
    gronwall_uniqueness_check,
)

__version__ = "0.1.0"
