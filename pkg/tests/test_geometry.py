import numpy as np
import pytest

from tangentlab.catalog import instantiate
from tangentlab.geometry import (
    EndomorphismField,
    VectorField,
    euler_cocycle_residual,
    euler_field_chart,
    is_second_order_residual,
    lie_derivative_S,
    nijenhuis,
    validate_affine_transition,
    validate_bundle_type,
)
from tangentlab.manifold import Point, SpecError, spec_from_dict


def _with_transition(name, x, y, **params):
    doc = instantiate(name, **params)
    doc["transitions"][0]["x"] = x
    doc["transitions"][0]["y"] = y
    return spec_from_dict(doc)


def test_torus_translation_is_affine():
    spec = spec_from_dict(instantiate("torus_flat"))
    rep = validate_affine_transition(spec, spec.transitions[0])
    assert rep.residual == 0.0 and rep.samples == 5


def test_heisenberg_transition_is_affine_but_not_bundle_type():
    spec = spec_from_dict(instantiate("nilmanifold_m1p", p=2))
    t = spec.transitions[0]
    assert validate_affine_transition(spec, t).residual == 0.0
    # with the fiber zeroed, the translation part of the fiber map survives
    assert validate_bundle_type(spec, t).residual >= 1.0


def test_quadratic_fiber_map_has_second_derivative_two():
    spec = _with_transition("torus_flat", ["x1", "x2"], ["y1^2", "y2"])
    rep = validate_affine_transition(spec, spec.transitions[0])
    assert rep.max_d2y_dydy == pytest.approx(2.0)
    assert rep.max_dx_dy == 0.0


def test_base_depending_on_fiber_is_flagged():
    spec = _with_transition("torus_flat", ["x1 + y2", "x2"], ["y1", "y2"])
    assert validate_affine_transition(spec, spec.transitions[0]).max_dx_dy == pytest.approx(1.0)


def test_hopf_transition_is_bundle_type():
    spec = spec_from_dict(instantiate("hopf_log", n=3, lam=0.7))
    assert validate_bundle_type(spec, spec.transitions[0]).residual == 0.0


def test_identity_transition_is_bundle_type():
    spec = _with_transition("torus_flat", ["x1", "x2"], ["y1", "y2"])
    assert validate_bundle_type(spec, spec.transitions[0]).residual == 0.0


def test_bundle_residual_shows_fiber_translation():
    spec = _with_transition("torus_flat", ["x1", "x2"], ["y1 + 0.75", "y2 - 0.25"])
    assert validate_bundle_type(spec, spec.transitions[0]).residual == pytest.approx(0.75)


def test_empty_overlap_rejected():
    doc = instantiate("torus_flat")
    doc["transitions"][0]["overlap_samples"] = []
    with pytest.raises(SpecError):
        spec = spec_from_dict(doc)
        validate_affine_transition(spec, spec.transitions[0])


P = Point("U", np.array([0.3, -0.4, 1.2, 0.7]))


def test_euler_field_components():
    np.testing.assert_array_equal(euler_field_chart([0.3, -0.4, 1.2, 0.7]), [0, 0, 1.2, 0.7])


def test_euler_cocycle_accepts_projectable_shift():
    assert euler_cocycle_residual(VectorField(["0", "0", "y1", "y2"]), P) == 0.0
    assert euler_cocycle_residual(VectorField(["0", "0", "y1 + sin(x2)", "y2 + x1"]), P) == 0.0
    assert euler_cocycle_residual(VectorField(["0", "0", "2*y1", "y2"]), P) == pytest.approx(1.0)


def test_second_order_fields():
    spray = VectorField(["y1", "y2", "-x1*y2^2", "sin(x1)"])
    assert is_second_order_residual(spray, P) == 0.0
    assert is_second_order_residual(VectorField(["y1", "0", "0", "0"]), P) == pytest.approx(1.0)


def test_lie_derivative_of_S_and_projectors():
    # X = x1 d/dx1 + y1 d/dy1 is the complete lift of x1 d/dx1
    res = lie_derivative_S(VectorField(["x1", "0", "y1", "0"]), P)
    assert res.is_tangential
    # a semispray gives an almost product structure F with F^2 = Id
    res = lie_derivative_S(VectorField(["y1", "y2", "-x2*y1", "x1*x2"]), P)
    np.testing.assert_allclose(res.F @ res.F, np.eye(4), atol=1e-14)
    np.testing.assert_allclose(res.V + res.H, np.eye(4), atol=1e-14)
    np.testing.assert_allclose(res.H @ res.H, res.H, atol=1e-14)


def test_nijenhuis_standard_tangent_structure_vanishes():
    S = [["0", "0", "0", "0"], ["0", "0", "0", "0"], ["1", "0", "0", "0"], ["0", "1", "0", "0"]]
    assert np.abs(nijenhuis(EndomorphismField(S), P)).max() == 0.0


def test_nijenhuis_nonzero_example():
    # J d/dx1 = y2 d/dy1 + d/dy1... only entry [y1][x1] depends on y2
    J = [["0", "0", "0", "0"], ["0", "0", "0", "0"], ["y2", "0", "0", "0"], ["0", "1", "0", "0"]]
    N = nijenhuis(EndomorphismField(J), P)
    # N(d/dx1, d/dx2) = -[J d/dx1, J d/dx2] + ... = -(d/dy2 of y2) d/dy1
    assert N[2, 0, 1] == pytest.approx(-1.0)
    assert N[2, 1, 0] == pytest.approx(1.0)


def test_nijenhuis_with_y1_entry_is_integrable():
    J = [["0", "0", "0", "0"], ["0", "0", "0", "0"], ["y1", "0", "0", "0"], ["0", "1", "0", "0"]]
    assert np.abs(nijenhuis(EndomorphismField(J), P)).max() == 0.0


def test_field_shape_checked():
    with pytest.raises(SpecError):
        VectorField(["y1", "y2"]).jet(P, 1)
