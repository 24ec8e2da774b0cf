"""End-to-end acceptance checks, one per numbered criterion.

Each check prints a single ``criterion N: PASS|FAIL  detail`` line (visible
with ``pytest -v`` and when the module is run as a script) and then asserts.
"""

from __future__ import annotations

import sys
import time

import numpy as np
import pytest

from conftest import random_lagrangian_doc
from tangentlab.catalog import CATALOG, instantiate
from tangentlab.cli import run_check, sample_points
from tangentlab.connection import FrameGeometry, energy_and_hamiltonian, normalization_from_semispray, normalization_jet
from tangentlab.curvature import finite_difference_oracle, ricci, riemann_D
from tangentlab.expr import ExprError, compile_expr, eval_jet, eval_scalar, parse_text, pretty
from tangentlab.geometry import VectorField, is_second_order_residual
from tangentlab.jets import Jet, extract_partial
from tangentlab.lagrange import (
    cartan_tensor,
    conformal_cartan_residual,
    conformal_checks,
    is_locally_lagrange,
    lagrangian_metric,
    psi_and_lie_coefficients,
)
from tangentlab.manifold import Point, spec_from_dict

REQUIRED_IDENTITIES = [
    "Bott1", "Bott2", "Bott3", "Bott4",
    "Bianchi0", "Bianchi1", "Bianchi3",
    "Bianchi20", "Bianchi21", "Bianchi22", "Bianchi23",
    "Bianchicovar1", "arg1-2", "pair-exchange", "cocurb", "eqlemei",
]  # fmt: skip


def _spec(name, **params):
    return spec_from_dict(instantiate(name, **params))


def _box_points(spec, chart, count, seed, shrink=0.0):
    lo, hi = np.array(spec.chart(chart).sample_box, dtype=float).T
    pad = shrink * (hi - lo)
    rng = np.random.default_rng(seed)
    return [rng.uniform(lo + pad, hi - pad) for _ in range(count)]


# ---------------------------------------------------------------------------
# the criteria; each returns (passed, detail)
# ---------------------------------------------------------------------------


def criterion_1():
    start = time.perf_counter()
    worst, count = 0.0, 0
    for n in (1, 2, 3):
        spec = _spec("hopf_log", n=n)
        rng = np.random.default_rng(n)
        found = 0
        while found < 100:
            p = rng.uniform(-1.5, 1.5, size=2 * n)
            x2, y2 = p[:n] @ p[:n], p[n:] @ p[n:]
            if abs(x2 - y2) < 0.1:
                continue
            ref = (x2 - y2) / (x2 + y2) ** (n + 1)
            det = lagrangian_metric(spec, "U0", p).det
            worst = max(worst, abs(det - ref) / abs(ref))
            found += 1
        count += found
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 5.0
    return ok, f"{count} points, max relative error {worst:.2e}, {elapsed:.2f}s"


def criterion_2():
    worst = 0.0
    for seed in range(10):
        spec = spec_from_dict(random_lagrangian_doc(seed, 2 + seed % 2))
        rng = np.random.default_rng(500 + seed)
        samples = [("U", rng.uniform(-0.4, 0.4, 2 * spec.n)) for _ in range(25)]
        worst = max(worst, is_locally_lagrange(spec, samples).max_residual)
    ce = _spec("cartan_counterexample")
    ce_res = min(cartan_tensor(ce, "U0", p).symmetry_residual for p in _box_points(ce, "U0", 10, 0))
    ok = worst <= 1e-10 and ce_res >= 0.9
    return ok, f"random Lagrangians max {worst:.2e}; counterexample min {ce_res:.3f}"


def criterion_3():
    spec = _spec("torus_flat")
    worst = {"Gamma_D": 0.0, "T_D": 0.0, "R_D": 0.0, "rho_D": 0.0, "kappa_D": 0.0}
    for p in _box_points(spec, "U0", 25, 3):
        fg = FrameGeometry.at(spec, "U0", p, 0)
        ric = ricci(fg)
        vals = {
            "Gamma_D": fg.connection("canonical_D").value,
            "T_D": fg.torsion("D").value,
            "R_D": fg.R.value,
            "rho_D": ric.rho,
            "kappa_D": ric.kappa,
        }
        for k, v in vals.items():
            worst[k] = max(worst[k], float(np.abs(np.asarray(v)).max()))
    ok = max(worst.values()) <= 1e-12
    return ok, "max " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items())


def criterion_4():
    worst_R = worst_mag = worst_formula = 0.0
    entries = 0
    for p_dim in (1, 2, 3):
        doc = instantiate("nilmanifold_m1p", p=p_dim)
        spec = spec_from_dict(doc)
        for cid, pt in sample_points(spec, 25, 4):
            fg = FrameGeometry.at(spec, cid, pt, 0)
            T = np.asarray(fg.torsion("D").value)
            worst_R = max(worst_R, float(np.abs(np.asarray(fg.R.value)).max()))
            worst_formula = max(worst_formula, float(np.abs(T - fg.torsion_closed_form).max()))
            for entry in doc["known_values"]["torsion_D"]:
                a, b = entry["args"]
                v = T[entry["component"], a, b]
                worst_mag = max(worst_mag, abs(abs(v) - 1.0), abs(v - entry["value"]))
                entries += 1
    ok = worst_R <= 1e-10 and worst_mag <= 1e-10 and worst_formula <= 1e-10
    return ok, f"R_D max {worst_R:.1e}; |T|-1 max {worst_mag:.1e} over {entries} entries; formula {worst_formula:.1e}"


def criterion_5():
    start = time.perf_counter()
    worst, missing, failed = 0.0, [], []
    for name in CATALOG:
        rep = run_check(_spec(name), "identities", points=25, seed=0, tol=1e-8)
        recs = {r["name"]: r for r in rep["records"]}
        for ident in REQUIRED_IDENTITIES:
            if ident not in recs:
                missing.append(f"{name}:{ident}")
                continue
            r = recs[ident]
            if not r["passed"] or r["max_residual"] is None:
                failed.append(f"{name}:{ident}")
            else:
                worst = max(worst, r["max_residual"])
    elapsed = time.perf_counter() - start
    ok = not missing and not failed and worst <= 1e-8 and elapsed < 30.0
    detail = f"{len(CATALOG)} entries, max relative residual {worst:.2e}, {elapsed:.1f}s"
    if missing or failed:
        detail += f"; missing {missing} failed {failed}"
    return ok, detail


def criterion_6():
    spec = _spec("hopf_log")
    box = spec.chart("U0").sample_box
    worst = 0.0
    for p in _box_points(spec, "U0", 10, 6, shrink=0.05):
        R = riemann_D(FrameGeometry.at(spec, "U0", p, 0))
        Rfd = finite_difference_oracle(lambda q: FrameGeometry.at(spec, "U0", q, -1), p, 1e-5, box)
        worst = max(worst, float(np.abs(R - Rfd).max() / np.abs(R).max()))
    return worst <= 1e-5, f"10 points, max relative difference {worst:.2e}"


def criterion_7():
    spec = _spec("torus_flat")
    doc = instantiate("torus_flat")
    doc["normalization"] = {"type": "energy"}
    energy_spec = spec_from_dict(doc)
    n = spec.n
    field_err = so_err = t_semispray = t_energy = 0.0
    for p in _box_points(spec, "U0", 25, 7):
        en = energy_and_hamiltonian(spec, "U0", p)
        expected = np.concatenate([p[n:], np.zeros(n)])
        field_err = max(field_err, float(np.abs(en.field - expected).max()))
        so_err = max(so_err, en.second_order_residual)
        X = VectorField(["y1", "y2", "0", "0"])
        so_err = max(so_err, is_second_order_residual(X, Point("U0", tuple(p))))
        t = normalization_from_semispray(X, Point("U0", tuple(p)))
        t_semispray = max(t_semispray, float(np.abs(t).max()))
        t_energy = max(t_energy, float(np.abs(np.asarray(normalization_jet(energy_spec, "U0", p, 0).value)).max()))
    ok = field_err <= 1e-10 and so_err <= 1e-10 and max(t_semispray, t_energy) <= 1e-12
    return ok, f"field error {field_err:.1e}, second-order {so_err:.1e}, |t| {t_semispray:.1e} (semispray) {t_energy:.1e} (energy)"


def criterion_8():
    lam = 0.5
    spec = _spec("hopf_conformal", lam=lam)
    worst_sym = max(conformal_cartan_residual(spec, cid, p) for cid in spec.charts for p in _box_points(spec, cid, 25, 8))
    worst_factor = 0.0
    for t in spec.transitions:
        for p in t.overlap_samples:
            res = conformal_checks(spec, t, p)
            worst_factor = max(worst_factor, abs(res.factor - lam**2), res.residual)
    ok = worst_sym <= 1e-10 and worst_factor <= 1e-10
    return ok, f"conformal Cartan max {worst_sym:.1e}; |factor - lambda^2| max {worst_factor:.1e}"


def criterion_9():
    worst = 0.0
    for n in (1, 2, 3):
        spec = _spec("hopf_log", n=n)
        for p in _box_points(spec, "U0", 10, 9):
            psi, lam_psi = psi_and_lie_coefficients(spec, "U0", p)

            def det_at(s):
                q = p.copy()
                q[n:] *= np.exp(s)
                return lagrangian_metric(spec, "U0", q).det

            h = 1e-4
            fd = (det_at(h) - det_at(-h)) / (2 * h) + n * psi
            worst = max(worst, abs(lam_psi - fd) / abs(fd))
    return worst <= 1e-6, f"30 points, max relative difference {worst:.2e}"


def _jet_fd_check(sources, env):
    names = ["x1", "x2", "y1", "y2"]
    p = np.array([env[k] for k in names])
    h = 1e-5
    worst, checked = 0.0, 0

    def jet(src, q, order):
        u = Jet.variables(q, order)
        return eval_jet(compile_expr(src), {k: u[i] for i, k in enumerate(names)}, {"lam": env["lam"]})

    indices = [e for k in range(4) for e in np.ndindex(*(k + 1,) * 4) if sum(e) == k]
    for src in sources:
        base = jet(src, p, 4)
        shifted = {}
        for a in range(4):
            d = np.zeros(4)
            d[a] = h
            shifted[a] = (jet(src, p + d, 3), jet(src, p - d, 3))
        for e in indices:
            for a in range(4):
                up = list(e)
                up[a] += 1
                fd = (extract_partial(shifted[a][0], e) - extract_partial(shifted[a][1], e)) / (2 * h)
                got = extract_partial(base, tuple(up))
                worst = max(worst, abs(got - fd) / max(1.0, abs(got)))
                checked += 1
    return worst, checked


def criterion_10():
    from test_expr import CORPUS, ENV, ERRORS

    round_trip_failures = [s for s, _ in CORPUS if parse_text(pretty(parse_text(s))) != parse_text(s)]
    worst, checked = _jet_fd_check([s for s, _ in CORPUS], ENV)
    positioned = all(_positioned(src) for src, _, _ in ERRORS)
    rng = np.random.default_rng(10)
    alphabet = list("x1y2 +-*/^().,e5sinlpq$")
    fuzz = ["".join(rng.choice(alphabet, size=rng.integers(0, 26))) for _ in range(3000)]
    fuzz += ["(" * 500 + "1" + ")" * 500, "+".join(["x1"] * 1000), "-" * 800 + "1", "2^" * 300 + "2"]
    unpositioned = [s for s in fuzz if not _positioned(s)]
    ok = len(CORPUS) >= 50 and not round_trip_failures and worst <= 1e-6 and positioned and not unpositioned
    detail = (
        f"{len(CORPUS)} expressions round-trip, {checked} partials up to order 4 with max relative error {worst:.1e}, "
        f"{len(fuzz) + len(ERRORS)} bad or odd inputs all positioned"
    )
    if round_trip_failures or unpositioned:
        detail += f"; round-trip failures {round_trip_failures[:3]} unpositioned {unpositioned[:3]}"
    return ok, detail


def _positioned(src: str) -> bool:
    """True when parsing and evaluating either succeed or fail with a valid offset."""
    env = {"x1": 0.3, "y2": 1.7, "e5": 2.0, "s": 1.0, "l": 0.5, "p": 2.0, "q": 0.1}
    try:
        ast = parse_text(src)
        eval_scalar(ast, env)
    except ExprError as exc:
        return 0 <= exc.offset <= len(src)
    except Exception:
        return False
    return True


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def _report(number, ok, detail, stream):
    stream.write(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}\n")
    stream.flush()


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1))
def test_acceptance_criterion(number, capsys):
    ok, detail = CRITERIA[number - 1]()
    with capsys.disabled():
        _report(number, ok, detail, sys.stdout)
    assert ok, detail


if __name__ == "__main__":
    results = []
    for i, fn in enumerate(CRITERIA, start=1):
        ok, detail = fn()
        _report(i, ok, detail, sys.stdout)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
