"""Manifold spec files: charts, transitions, local Lagrangians or metrics.

A spec is a JSON document (schema in ``schemas/manifold.schema.json``).  Loading
turns every formula into a parsed AST once; evaluation then binds the chart
coordinates ``x1..xn, y1..yn`` to jets at a point.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

import jsonschema
import numpy as np

from .expr import CONSTANTS, ExprError, Node, compile_expr, eval_jet, free_names
from .jets import Jet, stack

SCHEMA_VERSION = "1.0"

__all__ = [
    "SCHEMA_VERSION",
    "SpecError",
    "Chart",
    "Transition",
    "Point",
    "ManifoldSpec",
    "coord_names",
    "load_spec",
    "spec_from_dict",
    "load_schema",
    "eval_tree",
    "chart_bindings",
]


class SpecError(ValueError):
    """Malformed or inconsistent manifold spec."""


def coord_names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]


@lru_cache(maxsize=None)
def _schema_text(name: str) -> str:
    return resources.files("tangentlab").joinpath("schemas", f"{name}.schema.json").read_text()


def load_schema(name: str = "manifold") -> dict:
    return json.loads(_schema_text(name))


@dataclass(frozen=True)
class Chart:
    id: str
    n: int
    sample_box: np.ndarray  # shape (2n, 2)
    params: Mapping[str, float] = field(default_factory=dict)

    def contains(self, coords: Sequence[float], margin: float = 0.0) -> bool:
        c = np.asarray(coords, dtype=float)
        lo, hi = self.sample_box[:, 0], self.sample_box[:, 1]
        return bool(np.all(c >= lo + margin) and np.all(c <= hi - margin))

    def sample(self, count: int, rng: np.random.Generator, shrink: float = 0.0) -> np.ndarray:
        lo, hi = self.sample_box[:, 0], self.sample_box[:, 1]
        pad = shrink * (hi - lo)
        return rng.uniform(lo + pad, hi - pad, size=(count, lo.shape[0]))


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    x: tuple[Node, ...]
    y: tuple[Node, ...]
    overlap_samples: np.ndarray  # shape (k, 2n), source coordinates
    x_text: tuple[str, ...] = ()
    y_text: tuple[str, ...] = ()

    @property
    def exprs(self) -> tuple[Node, ...]:
        return self.x + self.y


@dataclass(frozen=True)
class Point:
    chart: str
    coords: np.ndarray


def chart_bindings(n: int, coords: Sequence[float], order: int) -> dict[str, Jet]:
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (2 * n,):
        raise SpecError(f"expected {2 * n} coordinates (x1..x{n}, y1..y{n}), got {coords.size}")
    v = Jet.variables(coords, order)
    return {name: v[k] for k, name in enumerate(coord_names(n))}


def eval_tree(tree, bindings: Mapping[str, Jet], params: Mapping[str, float]) -> Jet:
    """Evaluate a nested list of ASTs into an array jet of the same shape."""
    if isinstance(tree, (list, tuple)):
        return stack([eval_tree(t, bindings, params) for t in tree])
    return eval_jet(tree, bindings, params)


def _compile_tree(tree, where: str, allowed: set[str]):
    if isinstance(tree, (list, tuple)):
        return tuple(_compile_tree(t, f"{where}[{k}]", allowed) for k, t in enumerate(tree))
    if not isinstance(tree, str):
        raise SpecError(f"{where}: expected an expression string, got {type(tree).__name__}")
    try:
        ast = compile_expr(tree)
    except ExprError as exc:
        raise SpecError(f"{where}: {exc}") from None
    unknown = free_names(ast) - allowed
    if unknown:
        raise SpecError(f"{where}: unknown name(s) {sorted(unknown)} in {tree!r}")
    return ast


def _shape_check(tree, shape: tuple[int, ...], where: str) -> None:
    if not shape:
        return
    if not isinstance(tree, (list, tuple)) or len(tree) != shape[0]:
        raise SpecError(f"{where}: expected {shape[0]} entries")
    for k, t in enumerate(tree):
        _shape_check(t, shape[1:], f"{where}[{k}]")


class ManifoldSpec:
    """Immutable, compiled view of a manifold spec document."""

    def __init__(self, doc: Mapping[str, Any]):
        self.doc = copy.deepcopy(dict(doc))
        d = self.doc
        self.name: str = d["name"]
        self.n: int = int(d["n"])
        n = self.n
        global_params = {k: float(v) for k, v in d.get("params", {}).items()}
        names = set(coord_names(n)) | set(CONSTANTS)

        self.charts: dict[str, Chart] = {}
        for c in d["charts"]:
            box = np.asarray(c["sample_box"], dtype=float)
            if box.shape != (2 * n, 2):
                raise SpecError(f"chart {c['id']}: sample_box needs {2 * n} intervals")
            if np.any(box[:, 1] <= box[:, 0]):
                raise SpecError(f"chart {c['id']}: degenerate sample_box interval")
            if c["id"] in self.charts:
                raise SpecError(f"duplicate chart id {c['id']!r}")
            params = dict(global_params)
            params.update({k: float(v) for k, v in c.get("params", {}).items()})
            self.charts[c["id"]] = Chart(c["id"], n, box, params)

        def allowed(chart_id: str) -> set[str]:
            return names | set(self.charts[chart_id].params)

        self.transitions: list[Transition] = []
        for k, t in enumerate(d["transitions"]):
            for end in ("from", "to"):
                if t[end] not in self.charts:
                    raise SpecError(f"transition {k}: undeclared chart {t[end]!r}")
            where = f"transitions[{k}]"
            _shape_check(t["x"], (n,), where + ".x")
            _shape_check(t["y"], (n,), where + ".y")
            samples = np.asarray(t["overlap_samples"], dtype=float)
            if samples.ndim != 2 or samples.shape[1] != 2 * n:
                raise SpecError(f"{where}: overlap samples need {2 * n} coordinates each")
            al = allowed(t["from"])
            self.transitions.append(
                Transition(
                    t["from"],
                    t["to"],
                    _compile_tree(t["x"], where + ".x", al),
                    _compile_tree(t["y"], where + ".y", al),
                    samples,
                    tuple(t["x"]),
                    tuple(t["y"]),
                )
            )

        has_l, has_g = "lagrangians" in d, "metric" in d
        if has_l == has_g:
            raise SpecError("exactly one of 'lagrangians' or 'metric' must be present")
        self.lagrangians: dict[str, Node] | None = None
        self.metric: dict[str, tuple] | None = None
        if has_l:
            self.lagrangians = {}
            for cid, src in d["lagrangians"].items():
                self._require_chart(cid, "lagrangians")
                self.lagrangians[cid] = _compile_tree(src, f"lagrangians.{cid}", allowed(cid))
        else:
            self.metric = {}
            for cid, rows in d["metric"].items():
                self._require_chart(cid, "metric")
                _shape_check(rows, (n, n), f"metric.{cid}")
                for i in range(n):
                    for j in range(i):
                        if rows[i][j].replace(" ", "") != rows[j][i].replace(" ", ""):
                            raise SpecError(
                                f"metric.{cid}: entries [{i}][{j}] and [{j}][{i}] differ; "
                                "metric components must be symmetric"
                            )
                self.metric[cid] = _compile_tree(rows, f"metric.{cid}", allowed(cid))

        nz = d["normalization"]
        self.normalization_type: str = nz["type"]
        self.normalization_exprs: dict[str, tuple] = {}
        if nz["type"] == "explicit":
            for cid, rows in nz["t"].items():
                self._require_chart(cid, "normalization.t")
                _shape_check(rows, (n, n), f"normalization.t.{cid}")
                self.normalization_exprs[cid] = _compile_tree(rows, f"normalization.t.{cid}", allowed(cid))
        elif nz["type"] == "semispray":
            for cid, comps in nz["X"].items():
                self._require_chart(cid, "normalization.X")
                _shape_check(comps, (2 * n,), f"normalization.X.{cid}")
                self.normalization_exprs[cid] = _compile_tree(comps, f"normalization.X.{cid}", allowed(cid))
        elif nz["type"] == "energy" and self.lagrangians is None:
            raise SpecError("energy normalization needs 'lagrangians'")

        self.claims_affine: bool = bool(d["flags"]["claims_affine"])
        self.bundle_type: bool = bool(d["flags"]["bundle_type"])

        self.conformal = None
        if "conformal" in d:
            cf = d["conformal"]
            lag = {}
            tau = {}
            for cid, src in cf["lagrangians"].items():
                self._require_chart(cid, "conformal.lagrangians")
                lag[cid] = _compile_tree(src, f"conformal.lagrangians.{cid}", allowed(cid))
            for cid, comps in cf["tau"].items():
                self._require_chart(cid, "conformal.tau")
                _shape_check(comps, (n,), f"conformal.tau.{cid}")
                tau[cid] = _compile_tree(comps, f"conformal.tau.{cid}", allowed(cid))
            factor = None
            if "expected_factor" in cf:
                factor = _compile_tree(cf["expected_factor"], "conformal.expected_factor", names | set(global_params))
            self.conformal = {"lagrangians": lag, "tau": tau, "expected_factor": factor}

        kv = d.get("known_values", {})
        self.known_zero: list[str] = list(kv.get("zero", []))
        self.known_torsion: list[dict] = list(kv.get("torsion_D", []))
        self.known_tolerance: float | None = kv.get("tolerance")
        self.known_det = None
        if "det_g" in kv:
            self.known_det = _compile_tree(kv["det_g"], "known_values.det_g", names | set(global_params))
        self.global_params = global_params

    def _require_chart(self, cid: str, where: str) -> None:
        if cid not in self.charts:
            raise SpecError(f"{where}: undeclared chart {cid!r}")

    # -- convenience ---------------------------------------------------------

    @property
    def chart_ids(self) -> list[str]:
        return list(self.charts)

    def chart(self, cid: str) -> Chart:
        try:
            return self.charts[cid]
        except KeyError:
            raise SpecError(f"unknown chart {cid!r}; declared: {', '.join(self.charts)}") from None

    def params(self, cid: str) -> dict[str, float]:
        return dict(self.chart(cid).params)

    def bindings(self, cid: str, coords: Sequence[float], order: int) -> dict[str, Jet]:
        self.chart(cid)
        return chart_bindings(self.n, coords, order)

    def evaluate(self, tree, cid: str, coords: Sequence[float], order: int) -> Jet:
        return eval_tree(tree, self.bindings(cid, coords, order), self.params(cid))

    def lagrangian_ast(self, cid: str) -> Node:
        if self.lagrangians is None:
            raise SpecError(f"spec {self.name!r} defines a metric, not Lagrangians")
        if cid not in self.lagrangians:
            raise SpecError(f"no Lagrangian declared on chart {cid!r}")
        return self.lagrangians[cid]

    def metric_tree(self, cid: str):
        if self.metric is None or cid not in self.metric:
            raise SpecError(f"no explicit metric declared on chart {cid!r}")
        return self.metric[cid]

    def has_metric_on(self, cid: str) -> bool:
        src = self.lagrangians if self.lagrangians is not None else self.metric
        return cid in src

    def digest(self) -> str:
        blob = json.dumps(self.doc, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_dict(self) -> dict:
        return copy.deepcopy(self.doc)


def validate_document(doc: Any) -> None:
    try:
        jsonschema.validate(doc, load_schema("manifold"))
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        if exc.validator == "oneOf" and not exc.absolute_path:
            msg = "exactly one of 'lagrangians' or 'metric' must be present"
        elif exc.validator in ("oneOf", "anyOf"):
            msg = f"value matches none of the allowed forms ({exc.validator})"
        else:
            msg = exc.message if len(exc.message) <= 200 else exc.message[:200] + "..."
        raise SpecError(f"schema violation at {path}: {msg}") from None


def spec_from_dict(doc: Mapping[str, Any]) -> ManifoldSpec:
    validate_document(doc)
    return ManifoldSpec(doc)


def load_spec(path: str | Path) -> ManifoldSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return spec_from_dict(doc)
