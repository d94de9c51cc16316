import numpy as np
import pytest

from opsplit import oracle as orc
from opsplit import rational as rat
from opsplit import spatial as sp
from opsplit import splitting as spl
from opsplit.errors import DimensionMismatch, InvalidParams
from opsplit.rational import EXACT

BE = rat.backward_euler()
CN = rat.crank_nicolson()

A2 = sp.DiscreteOperator.from_dense([[-1.0, 1.0], [0.0, -1.0]])
B2 = sp.DiscreteOperator.from_dense([[-1.0, 0.0], [1.0, -1.0]])


def scalar_problem(a, b=None, x0=1.0):
    op_a = sp.DiscreteOperator.from_dense([[a]])
    op_b = sp.DiscreteOperator.from_dense([[b]]) if b is not None else None
    return spl.SplitProblem(op_a, op_b, np.array([x0]))


# ---------------------------------------------------------------------------
# scheme and problem validation


def test_scheme_rejects_unknown_variant():
    with pytest.raises(InvalidParams):
        spl.SplitScheme("lie", BE, BE)


@pytest.mark.parametrize("theta", [None, -0.1, 1.5])
def test_weighted_requires_theta_in_unit_interval(theta):
    with pytest.raises(InvalidParams):
        spl.SplitScheme("weighted", BE, BE, theta=theta)


def test_problem_validates_dimensions():
    with pytest.raises(DimensionMismatch):
        spl.SplitProblem(A2, B2, np.ones(3))
    with pytest.raises(DimensionMismatch):
        spl.SplitProblem(A2, sp.DiscreteOperator.zero(3), np.ones(2))


def test_step_needs_q_stage_when_b_present():
    prob = spl.SplitProblem(A2, B2, np.ones(2))
    with pytest.raises(InvalidParams):
        spl.step(spl.SplitScheme("sequential", BE), prob, 0.1, np.ones(2))


# ---------------------------------------------------------------------------
# step compositions


def test_sequential_scalar_composition():
    # q(hB) r(hA) with backward Euler stages: 1/((1 - h b)(1 - h a))
    prob = scalar_problem(-1.0, -2.0)
    out = spl.step(spl.SplitScheme("sequential", BE, BE), prob, 0.5, np.array([1.0]))
    assert out[0] == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_weighted_endpoints_reproduce_both_orders():
    prob = spl.SplitProblem(A2, B2, np.array([1.0, 2.0]))
    v = np.array([0.3, -0.7])
    seq = spl.step(spl.SplitScheme("sequential", BE, BE), prob, 0.2, v)
    w1 = spl.step(spl.SplitScheme("weighted", BE, BE, theta=1.0), prob, 0.2, v)
    assert np.array_equal(w1, seq)
    # theta = 0 is the reverse order r(hA) q(hB)
    w0 = spl.step(spl.SplitScheme("weighted", BE, BE, theta=0.0), prob, 0.2, v)
    reverse = rat.apply(BE, 0.2, A2, rat.apply(BE, 0.2, B2, v))
    assert np.max(np.abs(w0 - reverse)) < 1e-15


def test_weighted_is_convex_combination_of_orders():
    prob = spl.SplitProblem(A2, B2, np.array([1.0, 2.0]))
    v = np.array([0.4, 0.1])
    theta = 0.3
    qr = spl.step(spl.SplitScheme("weighted", BE, BE, theta=1.0), prob, 0.2, v)
    rq = spl.step(spl.SplitScheme("weighted", BE, BE, theta=0.0), prob, 0.2, v)
    mixed = spl.step(spl.SplitScheme("weighted", BE, BE, theta=theta), prob, 0.2, v)
    assert np.array_equal(mixed, theta * qr + (1.0 - theta) * rq)


def test_strang_with_zero_b_is_two_half_steps():
    prob = spl.SplitProblem(A2, sp.DiscreteOperator.zero(2), np.array([1.0, 2.0]))
    v = np.array([0.3, -0.7])
    out = spl.step(spl.SplitScheme("strang", BE, BE), prob, 0.2, v)
    twice = rat.apply(BE, 0.1, A2, rat.apply(BE, 0.1, A2, v))
    assert np.max(np.abs(out - twice)) < 1e-12


def test_exact_stages_on_commuting_diagonals():
    a = np.diag([-1.0, -2.0])
    b = np.diag([-0.5, -3.0])
    prob = spl.SplitProblem(
        sp.DiscreteOperator.from_dense(a),
        sp.DiscreteOperator.from_dense(b),
        np.array([1.0, 1.0]),
    )
    want = orc.expm(a + b, 0.4) @ np.array([1.0, 1.0])
    out = spl.step(spl.SplitScheme("sequential", EXACT, EXACT), prob, 0.4, prob.initial)
    assert np.max(np.abs(out - want)) < 1e-10


def test_step_accepts_matrix_argument():
    prob = spl.SplitProblem(A2, B2, np.ones(2))
    dense = spl.step(spl.SplitScheme("sequential", BE, BE), prob, 0.2, np.eye(2))
    for j in range(2):
        col = spl.step(spl.SplitScheme("sequential", BE, BE), prob, 0.2, np.eye(2)[:, j])
        assert np.max(np.abs(dense[:, j] - col)) < 1e-15


def test_step_dimension_mismatch():
    prob = spl.SplitProblem(A2, B2, np.ones(2))
    with pytest.raises(DimensionMismatch):
        spl.step(spl.SplitScheme("sequential", BE, BE), prob, 0.2, np.ones(3))


def test_none_variant_ignores_b():
    prob = spl.SplitProblem(A2, B2, np.ones(2))
    out = spl.step(spl.SplitScheme("none", BE), prob, 0.2, prob.initial)
    direct = rat.apply(BE, 0.2, A2, prob.initial)
    assert np.array_equal(out, direct)


# ---------------------------------------------------------------------------
# evolve


def test_evolve_zero_time_returns_initial():
    prob = spl.SplitProblem(A2, B2, np.array([1.0, 2.0]))
    for scheme in (
        spl.SplitScheme("none", BE),
        spl.SplitScheme("strang", BE, BE),
    ):
        out = spl.evolve(scheme, prob, 0.0, 5)
        assert np.array_equal(out, prob.initial)


def test_evolve_scalar_power():
    prob = scalar_problem(-1.0)
    out = spl.evolve(spl.SplitScheme("none", BE), prob, 1.0, 10)
    assert out[0] == pytest.approx((1.0 / 1.1) ** 10, abs=1e-14)
    assert out[0] == pytest.approx(0.385543, abs=1e-6)


def test_evolve_single_step_equals_step():
    prob = spl.SplitProblem(A2, B2, np.array([1.0, 2.0]))
    scheme = spl.SplitScheme("strang", BE, CN)
    assert np.array_equal(
        spl.evolve(scheme, prob, 0.3, 1),
        spl.step(scheme, prob, 0.3, prob.initial),
    )


def test_evolve_validates_arguments():
    prob = scalar_problem(-1.0)
    scheme = spl.SplitScheme("none", BE)
    with pytest.raises(InvalidParams):
        spl.evolve(scheme, prob, 1.0, 0)
    with pytest.raises(InvalidParams):
        spl.evolve(scheme, prob, -1.0, 4)


# ---------------------------------------------------------------------------
# exact split


def test_exact_split_commuting_equals_full_exponential():
    a = np.diag([-1.0, -2.0, -0.3])
    b = np.diag([-0.5, -3.0, -1.0])
    prob = spl.SplitProblem(
        sp.DiscreteOperator.from_dense(a),
        sp.DiscreteOperator.from_dense(b),
        np.array([1.0, -1.0, 2.0]),
    )
    want = orc.expm(a + b, 0.8) @ prob.initial
    for variant, theta in (("sequential", None), ("strang", None), ("weighted", 0.3)):
        for n in (1, 2, 5):
            got = spl.exact_split(variant, prob, 0.8, n, theta=theta)
            assert np.max(np.abs(got - want)) < 1e-10, (variant, n)


def test_exact_split_zero_time():
    prob = spl.SplitProblem(A2, B2, np.array([1.0, 2.0]))
    assert np.array_equal(spl.exact_split("sequential", prob, 0.0, 3), prob.initial)


def test_exact_split_error_halves_on_noncommuting_pair():
    prob = spl.SplitProblem(A2, B2, np.array([1.0, 2.0]))
    want = orc.expm(A2.matrix + B2.matrix, 1.0) @ prob.initial
    errs = {}
    for n in (1, 2):
        got = spl.exact_split("sequential", prob, 1.0, n)
        errs[n] = np.max(np.abs(got - want))
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.25)
