"""Built-in, parameterized manifold specs for the standard worked examples.

Each quotient manifold is represented by two overlapping charts related by one
generator of its deck group.  Overlap samples lie inside the source box and map
into the target box.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .manifold import SCHEMA_VERSION, SpecError, coord_names, spec_from_dict

__all__ = ["CatalogEntry", "list_catalog", "instantiate", "CATALOG"]


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    summary: str
    defaults: dict[str, Any]
    builder: Callable[..., dict]


def _names(n: int) -> tuple[list[str], list[str]]:
    c = coord_names(n)
    return c[:n], c[n:]


def _sum(terms: list[str]) -> str:
    return "(" + " + ".join(terms) + ")"


def _rho(n: int) -> str:
    xs, ys = _names(n)
    return _sum([f"{v}^2" for v in xs + ys])


def _samples(box, transform, count: int, seed: int) -> list[list[float]]:
    """Deterministic overlap samples strictly inside ``box``."""
    box = np.asarray(box, dtype=float)
    rng = np.random.default_rng(seed)
    lo, hi = box[:, 0], box[:, 1]
    pad = 0.1 * (hi - lo)
    pts = rng.uniform(lo + pad, hi - pad, size=(count, box.shape[0]))
    return [[round(float(v), 12) for v in transform(p)] for p in pts]


def _check_n(n, lo: int = 1, hi: int = 4) -> int:
    if isinstance(n, bool) or int(n) != n or not lo <= int(n) <= hi:
        raise SpecError(f"parameter n must be an integer in [{lo}, {hi}], got {n!r}")
    return int(n)


def _check_lambda(lam) -> float:
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise SpecError(f"parameter lambda must lie in (0, 1), got {lam}")
    return lam


def _base(name: str, n: int, description: str) -> dict:
    return {"schema_version": SCHEMA_VERSION, "name": name, "n": n, "description": description}


# ---------------------------------------------------------------------------


def _translation_atlas(n: int) -> tuple[list, list]:
    xs, ys = _names(n)
    box0 = [[0.0, 1.0]] * n + [[-1.0, 1.0]] * n
    box1 = [[1.0, 2.0]] * n + [[0.0, 2.0]] * n
    charts = [{"id": "U0", "sample_box": box0}, {"id": "U1", "sample_box": box1}]
    trans = [
        {
            "from": "U0",
            "to": "U1",
            "x": [f"{v} + 1" for v in xs],
            "y": [f"{v} + 1" for v in ys],
            "overlap_samples": _samples(box0, lambda p: p, 5, 11),
        }
    ]
    return charts, trans


def _torus_flat(n: int = 2) -> dict:
    n = _check_n(n)
    _, ys = _names(n)
    charts, trans = _translation_atlas(n)
    L = "0.5*" + _sum([f"{v}^2" for v in ys])
    doc = _base("torus_flat", n, "flat torus T^2n with integer translations and L = |y|^2/2")
    doc.update(
        charts=charts,
        transitions=trans,
        lagrangians={"U0": L, "U1": L},
        normalization={"type": "zero"},
        flags={"claims_affine": True, "bundle_type": False},
        known_values={
            "det_g": "1",
            "zero": ["C", "T_D", "R_D", "Gamma_D", "ricci", "scalar"],
            "tolerance": 1e-12,
        },
    )
    return doc


def _nilmanifold(p: int = 1) -> dict:
    if isinstance(p, bool) or int(p) != p or not 1 <= int(p) <= 3:
        raise SpecError(f"parameter p must be an integer in [1, 3], got {p!r}")
    p = int(p)
    n = p + 1
    xs, ys = _names(n)
    # base: x1..xp (Heisenberg x), x_{p+1} (Heisenberg y); fiber: y1..yp (z), y_{p+1} (t)
    box0 = [[0.0, 1.0]] * n + [[-1.0, 1.0]] * n
    box1 = [[1.0, 2.0]] * n + [[-1.0, 2.0]] * p + [[0.0, 2.0]]
    hy = xs[p]
    tx = [f"{v} + 1" for v in xs]
    ty = [f"{ys[i]} + {hy}" for i in range(p)] + [f"{ys[p]} + 1"]

    def image(q):
        q = np.array(q, dtype=float)
        out = q.copy()
        out[:n] += 1.0
        out[n : n + p] += q[p]
        out[n + p] += 1.0
        return out

    # only keep samples whose image stays inside box1
    samples = [s for s in _samples(box0, lambda q: q, 8, 12) if np.all(image(s) >= np.array(box1)[:, 0])][:5]
    t_rows = [["0"] * n for _ in range(n)]
    for i in range(p):
        t_rows[i][p] = f"-{xs[i]}"
    L = "0.5*" + _sum([f"{v}^2" for v in ys])
    doc = _base("nilmanifold_m1p", n, f"M(1,{p}) x (R/Z): Heisenberg nilmanifold with its left-invariant frame")
    doc.update(
        charts=[{"id": "U0", "sample_box": box0}, {"id": "U1", "sample_box": box1}],
        transitions=[{"from": "U0", "to": "U1", "x": tx, "y": ty, "overlap_samples": samples}],
        lagrangians={"U0": L, "U1": L},
        normalization={"type": "explicit", "t": {"U0": t_rows, "U1": t_rows}},
        flags={"claims_affine": True, "bundle_type": False},
        known_values={
            "det_g": "1",
            "zero": ["C", "R_D", "Gamma_D", "ricci", "scalar"],
            "torsion_D": [{"args": [i, p], "component": n + i, "value": -1.0} for i in range(p)],
            "tolerance": 1e-10,
        },
    )
    return doc


def _hopf_boxes(n: int, lam: float):
    box0 = [[0.6, 1.5]] * n + [[-0.4, 0.4]] * n
    box1 = [[lam * a, lam * b] for a, b in box0]
    return box0, box1


def _hopf_atlas(n: int, lam: float):
    xs, ys = _names(n)
    box0, box1 = _hopf_boxes(n, lam)
    charts = [
        {"id": "U0", "sample_box": box0},
        {"id": "U1", "sample_box": box1},
    ]
    trans = [
        {
            "from": "U0",
            "to": "U1",
            "x": [f"lam*{v}" for v in xs],
            "y": [f"lam*{v}" for v in ys],
            "overlap_samples": _samples(box0, lambda q: q, 5, 13),
        }
    ]
    return charts, trans


def _hopf_log(n: int = 2, lam: float = 0.5) -> dict:
    n, lam = _check_n(n), _check_lambda(lam)
    xs, ys = _names(n)
    charts, trans = _hopf_atlas(n, lam)
    L = f"0.5*ln{_rho(n)}"
    num = _sum([f"{v}^2" for v in xs]) + " - " + _sum([f"{v}^2" for v in ys])
    doc = _base("hopf_log", n, "Hopf manifold H^2n with the local Lagrangians ln(rho)/2")
    doc.update(
        params={"lam": lam},
        charts=charts,
        transitions=trans,
        lagrangians={"U0": L, "U1": L},
        normalization={"type": "zero"},
        flags={"claims_affine": True, "bundle_type": True},
        known_values={"det_g": f"({num})/{_rho(n)}^{n + 1}", "tolerance": 1e-9},
    )
    return doc


def _hopf_conformal(n: int = 2, lam: float = 0.5) -> dict:
    n, lam = _check_n(n), _check_lambda(lam)
    _, ys = _names(n)
    charts, trans = _hopf_atlas(n, lam)
    rho = _rho(n)
    g = [[f"2/{rho}" if i == j else "0" for j in range(n)] for i in range(n)]
    local = _sum([f"{v}^2" for v in ys])
    tau = [f"2*{v}/{rho}" for v in ys]
    doc = _base("hopf_conformal", n, "Hopf manifold with the locally conformal Lagrange structure of |y|^2")
    doc.update(
        params={"lam": lam},
        charts=charts,
        transitions=trans,
        metric={"U0": g, "U1": g},
        normalization={"type": "zero"},
        flags={"claims_affine": True, "bundle_type": True},
        conformal={"lagrangians": {"U0": local, "U1": local}, "tau": {"U0": tau, "U1": tau}, "expected_factor": "lam^2"},
        known_values={"det_g": f"(2/{rho})^{n}", "tolerance": 1e-10},
    )
    return doc


def _tangent_hopf_global(n: int = 2, lam: float = 0.5) -> dict:
    n, lam = _check_n(n), _check_lambda(lam)
    xs, ys = _names(n)
    charts, trans = _hopf_atlas(n, lam)
    L = f"{_sum([f'{v}^2' for v in ys])}/(2*{_sum([f'{v}^2' for v in xs])})"
    doc = _base("tangent_hopf_global", n, "tangent bundle of the Hopf manifold H^n with a global regular Lagrangian")
    doc.update(
        params={"lam": lam},
        charts=charts,
        transitions=trans,
        lagrangians={"U0": L, "U1": L},
        normalization={"type": "zero"},
        flags={"claims_affine": True, "bundle_type": True},
        known_values={"det_g": f"{_sum([f'{v}^2' for v in xs])}^(-{n})", "zero": ["C"], "tolerance": 1e-10},
    )
    return doc


def _foliated_flat(n: int = 2) -> dict:
    n = _check_n(n)
    xs, _ = _names(n)
    charts, trans = _translation_atlas(n)
    g = [
        [
            f"2 + sin(2*pi*{xs[i]})" if i == j else f"0.25*cos(2*pi*({xs[min(i, j)]} + {xs[max(i, j)]}))"
            for j in range(n)
        ]
        for i in range(n)
    ]
    doc = _base("foliated_flat", n, "torus with a foliated (y-independent) transversal metric")
    doc.update(
        charts=charts,
        transitions=trans,
        metric={"U0": g, "U1": g},
        normalization={"type": "zero"},
        flags={"claims_affine": True, "bundle_type": False},
        known_values={"zero": ["C"], "tolerance": 1e-12},
    )
    return doc


def _cartan_counterexample() -> dict:
    n = 2
    box0 = [[0.0, 1.0], [0.0, 1.0], [-0.5, 0.5], [-0.5, 0.5]]
    box1 = [[1.0, 2.0], [1.0, 2.0], [-0.5, 0.5], [-0.5, 0.5]]
    g = [["1", "y1"], ["y1", "1"]]
    doc = _base("cartan_counterexample", n, "explicit transversal metric whose Cartan tensor is not totally symmetric")
    doc.update(
        charts=[{"id": "U0", "sample_box": box0}, {"id": "U1", "sample_box": box1}],
        transitions=[
            {
                "from": "U0",
                "to": "U1",
                "x": ["x1 + 1", "x2 + 1"],
                "y": ["y1", "y2"],
                "overlap_samples": _samples(box0, lambda q: q, 5, 14),
            }
        ],
        metric={"U0": g, "U1": g},
        normalization={"type": "zero"},
        flags={"claims_affine": True, "bundle_type": True},
        known_values={"det_g": "1 - y1^2", "tolerance": 1e-12},
    )
    return doc


CATALOG: dict[str, CatalogEntry] = {
    e.name: e
    for e in (
        CatalogEntry("torus_flat", "flat torus, L = |y|^2/2, zero curvature", {"n": 2}, _torus_flat),
        CatalogEntry("nilmanifold_m1p", "Heisenberg nilmanifold: R_D = 0 with torsion", {"p": 1}, _nilmanifold),
        CatalogEntry("hopf_log", "Hopf manifold, L = ln(rho)/2", {"n": 2, "lambda": 0.5}, _hopf_log),
        CatalogEntry("hopf_conformal", "Hopf manifold, locally conformal Lagrange metric", {"n": 2, "lambda": 0.5}, _hopf_conformal),
        CatalogEntry("tangent_hopf_global", "tangent bundle of H^n, global Lagrangian", {"n": 2, "lambda": 0.5}, _tangent_hopf_global),
        CatalogEntry("foliated_flat", "foliated transversal metric, C = 0", {"n": 2}, _foliated_flat),
        CatalogEntry("cartan_counterexample", "g = [[1, y1], [y1, 1]], not locally Lagrange", {}, _cartan_counterexample),
    )
}


def list_catalog() -> list[dict[str, Any]]:
    return [{"name": e.name, "summary": e.summary, "defaults": dict(e.defaults)} for e in CATALOG.values()]


def instantiate(name: str, **params: Any) -> dict:
    """Spec document for a catalog entry; ``lam`` and ``lambda`` are synonyms."""
    if name not in CATALOG:
        raise SpecError(f"unknown catalog entry {name!r}; available: {', '.join(CATALOG)}")
    entry = CATALOG[name]
    if "lambda" in params:
        params["lam"] = params.pop("lambda")
    allowed = {("lam" if k == "lambda" else k) for k in entry.defaults}
    extra = {k for k, v in params.items() if v is not None} - allowed
    if extra:
        raise SpecError(f"catalog entry {name!r} takes no parameter(s) {sorted(extra)}")
    kwargs = {k: v for k, v in params.items() if v is not None}
    doc = entry.builder(**kwargs)
    spec_from_dict(doc)  # every emitted document must validate
    return doc
