import numpy as np
import pytest

from tangentlab.catalog import CATALOG, instantiate, list_catalog
from tangentlab.cli import run_check
from tangentlab.expr import eval_scalar, parse_text
from tangentlab.geometry import validate_affine_transition, validate_bundle_type
from tangentlab.lagrange import lagrangian_metric
from tangentlab.manifold import SpecError, coord_names, spec_from_dict


def test_listing_contains_the_worked_examples():
    names = [e["name"] for e in list_catalog()]
    for required in ("torus_flat", "hopf_log", "nilmanifold_m1p", "hopf_conformal", "tangent_hopf_global", "foliated_flat"):
        assert required in names
    assert all(e["summary"] for e in list_catalog())


def test_hopf_known_determinant():
    doc = instantiate("hopf_log", n=2, lam=0.5)
    expr = parse_text(doc["known_values"]["det_g"])
    x1, x2, y1, y2 = 0.9, -0.4, 0.3, 0.2
    rho = x1**2 + x2**2 + y1**2 + y2**2
    value = eval_scalar(expr, {"x1": x1, "x2": x2, "y1": y1, "y2": y2})
    assert value == pytest.approx((x1**2 + x2**2 - y1**2 - y2**2) / rho**3, rel=1e-14)


def test_torus_known_zeros_in_dimension_three():
    doc = instantiate("torus_flat", n=3)
    assert doc["n"] == 3
    assert {"C", "T_D", "R_D"} <= set(doc["known_values"]["zero"])


@pytest.mark.parametrize(
    "name,params",
    [
        ("hopf_log", {"lam": 1.5}),
        ("hopf_log", {"lam": 0.0}),
        ("hopf_conformal", {"lambda": 1.0}),
        ("torus_flat", {"n": 0}),
        ("torus_flat", {"n": 9}),
        ("nilmanifold_m1p", {"p": 0}),
        ("torus_flat", {"lam": 0.5}),
        ("cartan_counterexample", {"n": 2}),
        ("no_such_entry", {}),
    ],
)
def test_parameter_errors(name, params):
    with pytest.raises(SpecError):
        instantiate(name, **params)


def test_lambda_alias():
    assert instantiate("hopf_log", **{"lambda": 0.3}) == instantiate("hopf_log", lam=0.3)


def test_unset_parameters_take_defaults():
    assert instantiate("hopf_log", n=None, lam=None) == instantiate("hopf_log")


def test_instantiation_is_deterministic():
    assert instantiate("nilmanifold_m1p", p=2) == instantiate("nilmanifold_m1p", p=2)


VARIANTS = [
    ("torus_flat", {"n": 1}),
    ("torus_flat", {"n": 3}),
    ("nilmanifold_m1p", {"p": 1}),
    ("nilmanifold_m1p", {"p": 3}),
    ("hopf_log", {"n": 1, "lam": 0.2}),
    ("hopf_log", {"n": 3, "lam": 0.8}),
    ("hopf_conformal", {"n": 1}),
    ("hopf_conformal", {"n": 3, "lam": 0.6}),
    ("tangent_hopf_global", {"n": 3}),
    ("foliated_flat", {"n": 3}),
    ("cartan_counterexample", {}),
]


@pytest.mark.parametrize("name", list(CATALOG))
def test_every_default_entry_validates(name):
    doc = instantiate(name)
    spec = spec_from_dict(doc)
    assert len(spec.charts) == 2 and len(spec.transitions) == 1
    for t in spec.transitions:
        assert len(t.overlap_samples) > 0
        assert all(spec.chart(t.source).contains(p) for p in t.overlap_samples)
        if doc["flags"]["claims_affine"]:
            assert validate_affine_transition(spec, t).residual <= 1e-12
        if doc["flags"]["bundle_type"]:
            assert validate_bundle_type(spec, t).residual <= 1e-12


WITH_DET = [(name, params) for name, params in VARIANTS if "det_g" in instantiate(name, **params)["known_values"]]


@pytest.mark.parametrize("name,params", WITH_DET)
def test_known_determinants_reproduced(name, params):
    doc = instantiate(name, **params)
    known = doc["known_values"]
    spec = spec_from_dict(doc)
    expr = parse_text(known["det_g"])
    names = coord_names(spec.n)
    rng = np.random.default_rng(0)
    for cid, chart in spec.charts.items():
        lo, hi = np.array(chart.sample_box).T
        for _ in range(10):
            p = rng.uniform(lo, hi)
            expected = eval_scalar(expr, dict(zip(names, p)), spec.params(cid))
            got = lagrangian_metric(spec, cid, p).det
            assert got == pytest.approx(expected, rel=known["tolerance"], abs=known["tolerance"])


@pytest.mark.parametrize("name,params", VARIANTS)
def test_known_values_table_reproduced_by_the_suites(name, params):
    spec = spec_from_dict(instantiate(name, **params))
    rep = run_check(spec, "all", points=4, seed=1)
    failed = [r["name"] for r in rep["records"] if not r["passed"]]
    if name == "cartan_counterexample":
        assert failed == ["Cartan symmetry"]
    else:
        assert failed == []
