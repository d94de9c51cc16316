import numpy as np
import pytest

from opsplit import spatial as sp
from opsplit.errors import DimensionMismatch, InvalidParams, InvalidSize


# ---------------------------------------------------------------------------
# grid spaces


def test_grid_space_nodes():
    assert np.array_equal(sp.make_grid_space(4).nodes, [0.0, 0.25, 0.5, 0.75])
    assert np.array_equal(sp.make_grid_space(2).nodes, [0.0, 0.5])


@pytest.mark.parametrize("m", [1, 0, -3])
def test_grid_space_rejects_small(m):
    with pytest.raises(InvalidSize):
        sp.make_grid_space(m)


# ---------------------------------------------------------------------------
# projection and interpolation


def test_project_sine_m4():
    v = sp.ProjectionPair(4).project(sp.sin_mode(1))
    assert v == pytest.approx([0.0, 1.0, 0.0, -1.0], abs=1e-15)


def test_project_constant():
    assert np.array_equal(sp.ProjectionPair(2).project(sp.constant(1.0)), [1.0, 1.0])


def test_project_cosine_m8():
    v = sp.ProjectionPair(8).project(sp.cos_mode(1))
    r = np.sqrt(2.0) / 2.0
    assert v == pytest.approx([1.0, r, 0.0, -r, -1.0, -r, 0.0, r], abs=1e-15)


def test_project_interpolate_roundtrip_exact():
    pair = sp.ProjectionPair(4)
    v = np.array([3.0, -1.0, 4.0, -1.0])
    assert np.array_equal(pair.project(pair.interpolate(v)), v)


def test_roundtrip_exact_for_awkward_sizes():
    # node positions i/m are not exactly representable for these m
    rng = np.random.default_rng(5)
    for m in (3, 7, 49, 100):
        pair = sp.ProjectionPair(m)
        v = rng.normal(size=m)
        assert np.array_equal(pair.project(pair.interpolate(v)), v)


def test_interpolate_linear_midpoint():
    g = sp.ProjectionPair(4).interpolate(np.array([0.0, 1.0, 0.0, -1.0]))
    assert g(0.125) == pytest.approx(0.5, abs=1e-15)


def test_interpolate_sup_norm_equals_max_node_value():
    g = sp.ProjectionPair(4).interpolate(np.array([0.0, 1.0, 0.0, -1.0]))
    assert sp.sup_norm(g) == pytest.approx(1.0, abs=1e-15)


def test_interpolate_is_periodic():
    g = sp.ProjectionPair(4).interpolate(np.array([2.0, 1.0, 0.0, -1.0]))
    assert g(1.0) == g(0.0) == 2.0
    assert g(-0.25) == g(0.75)


def test_interpolate_rejects_wrong_length():
    with pytest.raises(DimensionMismatch):
        sp.ProjectionPair(4).interpolate(np.ones(5))


def test_interpolation_error_decays_second_order():
    f = sp.sin_mode(1)
    errs = {}
    for m in (16, 32, 128):
        pair = sp.ProjectionPair(m)
        errs[m] = sp.sup_distance(pair.interpolate(pair.project(f)), f)
    assert errs[16] / errs[32] == pytest.approx(4.0, rel=0.1)
    assert errs[16] / errs[128] >= 32.0


def test_interpolation_exact_on_constants():
    f = sp.constant(2.5)
    for m in (2, 16, 128):
        pair = sp.ProjectionPair(m)
        assert sp.sup_distance(pair.interpolate(pair.project(f)), f) == 0.0


# ---------------------------------------------------------------------------
# expression whitelist


def test_expression_evaluates():
    f = sp.function_from_expression("-(1+sin(2*pi*s))")
    s = np.array([0.0, 0.25])
    assert f(s) == pytest.approx([-1.0, -2.0], abs=1e-15)


def test_expression_supports_exp_and_powers():
    f = sp.function_from_expression("exp(cos(2*pi*s)) + s*0 + 2**2")
    assert f(0.0) == pytest.approx(np.e + 4.0)


@pytest.mark.parametrize(
    "expr",
    ["__import__('os')", "tan(s)", "s.__class__", "lambda s: s", "x + 1", "sin(s, 2)"],
)
def test_expression_rejects_non_whitelisted(expr):
    with pytest.raises(InvalidParams):
        sp.function_from_expression(expr)


# ---------------------------------------------------------------------------
# operators


def test_diffusion_stencil_value():
    a = sp.diffusion_operator(4, 1.0)
    v = np.array([0.0, 1.0, 0.0, -1.0])
    assert (a @ v)[1] == pytest.approx(16.0 * (0.0 - 2.0 + 0.0))


def test_diffusion_annihilates_constants():
    a = sp.diffusion_operator(8, 0.7)
    assert np.max(np.abs(a @ np.ones(8))) < 1e-12


def test_diffusion_requires_positive_nu():
    with pytest.raises(InvalidParams):
        sp.diffusion_operator(8, 0.0)


def test_advection_centered_stencil():
    b = sp.advection_operator(4, 1.0)
    v = np.array([1.0, 2.0, 3.0, 4.0])
    # (B v)_i = -c (m/2) (v_{i+1} - v_{i-1})
    assert (b @ v)[1] == pytest.approx(-2.0 * (3.0 - 1.0))
    assert np.max(np.abs(b.matrix + b.matrix.T)) < 1e-14  # skew-symmetric


def test_advection_upwind_stencil():
    b = sp.advection_operator(4, 2.0, "upwind")
    v = np.array([1.0, 2.0, 3.0, 4.0])
    assert (b @ v)[1] == pytest.approx(-2.0 * 4.0 * (2.0 - 1.0))


def test_advection_upwind_requires_positive_c():
    with pytest.raises(InvalidParams):
        sp.advection_operator(4, -1.0, "upwind")


def test_advection_rejects_unknown_stencil():
    with pytest.raises(InvalidParams):
        sp.advection_operator(4, 1.0, "spectral")


def test_reaction_diagonal_from_expression():
    r = sp.reaction_operator(4, "-(1+sin(2*pi*s))")
    assert np.diag(r.matrix) == pytest.approx([-1.0, -2.0, -1.0, 0.0], abs=1e-15)
    assert np.count_nonzero(r.matrix - np.diag(np.diag(r.matrix))) == 0


def test_reaction_rejects_positive_rho():
    with pytest.raises(InvalidParams):
        sp.reaction_operator(4, 0.5)
    with pytest.raises(InvalidParams):
        sp.reaction_operator(4, "sin(2*pi*s)")


def test_build_operator_dispatch():
    a = sp.build_operator("diffusion", {"nu": 1.0}, 8)
    assert a.kind == "diffusion"
    with pytest.raises(InvalidParams):
        sp.build_operator("laplace", {}, 8)
    with pytest.raises(InvalidParams):
        sp.build_operator("diffusion", {}, 8)


@pytest.mark.parametrize(
    "make",
    [
        lambda m: sp.diffusion_operator(m, 1.0),
        lambda m: sp.advection_operator(m, 1.0),
        lambda m: sp.advection_operator(m, 2.0, "upwind"),
        lambda m: sp.reaction_operator(m, "-(1+sin(2*pi*s))"),
    ],
    ids=["diffusion", "advection", "upwind", "reaction"],
)
def test_builtin_spectra_in_left_half_plane(make):
    for m in (8, 32):
        eigs = np.linalg.eigvals(make(m).matrix)
        assert np.max(eigs.real) <= 1e-10


@pytest.mark.parametrize("m", [8, 32, 64])
def test_builtin_operators_are_circulant(m):
    assert sp.diffusion_operator(m, 1.0).is_circulant()
    assert sp.advection_operator(m, 1.0).is_circulant()
    assert sp.advection_operator(m, 1.0, "upwind").is_circulant()
    assert not sp.DiscreteOperator.from_dense(
        np.triu(np.ones((m, m)))
    ).is_circulant()


def test_diffusion_is_symmetric_negative_semidefinite():
    a = sp.diffusion_operator(16, 1.0)
    assert np.array_equal(a.matrix, a.matrix.T)
    assert np.max(np.linalg.eigvalsh(a.matrix)) <= 1e-10


def test_operator_addition():
    a = sp.diffusion_operator(8, 1.0)
    b = sp.advection_operator(8, 1.0)
    c = a + b
    assert np.array_equal(c.matrix, a.matrix + b.matrix)
    with pytest.raises(DimensionMismatch):
        a + sp.diffusion_operator(16, 1.0)


def test_operator_matrix_is_read_only():
    a = sp.diffusion_operator(8, 1.0)
    with pytest.raises(ValueError):
        a.matrix[0, 0] = 1.0


def test_consistency_gap_halves_at_second_order():
    # || J A_m P x - A x || for x = sin(2 pi s), exact A x = -4 pi^2 sin
    f = sp.sin_mode(1)
    exact = sp.ContinuousFunction(
        lambda s: -4.0 * np.pi**2 * np.sin(2.0 * np.pi * s)
    )
    gaps = {}
    for m in (32, 64):
        pair = sp.ProjectionPair(m)
        lifted = pair.interpolate(sp.diffusion_operator(m, 1.0) @ pair.project(f))
        gaps[m] = sp.sup_distance(lifted, exact)
    assert gaps[32] / gaps[64] == pytest.approx(4.0, rel=0.1)


# ---------------------------------------------------------------------------
# axiom report


def test_projection_axiom_report():
    report = sp.check_projection_axioms(
        [16, 32, 64],
        [sp.sin_mode(1), sp.constant(1.0)],
        n_random=50,
    )
    assert report.passed
    assert all(v == 0.0 for v in report.identity_deviation.values())
    assert report.k_bound == 1.0
    e16 = report.interpolation_error[(16, "sin(2*pi*1*s)")]
    e32 = report.interpolation_error[(32, "sin(2*pi*1*s)")]
    assert e16 / e32 == pytest.approx(4.0, rel=0.1)
    assert report.interpolation_error[(64, "1")] == 0.0
