"""Tangent structure in adapted coordinates and the structural checks on atlases.

Coordinates are ordered ``(x1..xn, y1..yn)``.  The tangent structure is always
the standard one, ``S(d/dx^i) = d/dy^i`` and ``S(d/dy^i) = 0``; as a matrix acting
on component columns it is ``[[0, 0], [I, 0]]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .expr import ExprError, compile_expr
from .jets import Jet, jeinsum
from .manifold import ManifoldSpec, Point, SpecError, Transition, chart_bindings, eval_tree

__all__ = [
    "S_matrix",
    "VectorField",
    "EndomorphismField",
    "AffineReport",
    "BundleReport",
    "LieSResult",
    "transition_jet",
    "validate_affine_transition",
    "validate_bundle_type",
    "euler_field_chart",
    "euler_cocycle_residual",
    "is_second_order_residual",
    "nijenhuis",
    "lie_derivative_S",
]


def S_matrix(n: int) -> np.ndarray:
    S = np.zeros((2 * n, 2 * n))
    S[n:, :n] = np.eye(n)
    return S


class _ChartExprs:
    """Per-chart expression arrays; a single array applies to every chart."""

    shape: tuple[int, ...] = ()

    def __init__(self, components, shape_of):
        if isinstance(components, Mapping):
            raw = dict(components)
        else:
            raw = {"*": components}
        self.asts = {}
        for cid, comps in raw.items():
            self.asts[cid] = self._compile(comps, cid)
        self._shape_of = shape_of

    @staticmethod
    def _compile(tree, cid):
        if isinstance(tree, (list, tuple)):
            return tuple(_ChartExprs._compile(t, cid) for t in tree)
        if isinstance(tree, str):
            try:
                return compile_expr(tree)
            except ExprError as exc:
                raise SpecError(f"field on chart {cid}: {exc}") from None
        return tree  # already an AST node

    def tree(self, chart: str):
        if chart in self.asts:
            return self.asts[chart]
        if "*" in self.asts:
            return self.asts["*"]
        raise SpecError(f"field not declared on chart {chart!r}")

    def jet(self, p: Point, order: int, params: Mapping[str, float] | None = None) -> Jet:
        coords = np.asarray(p.coords, dtype=float)
        n = coords.shape[0] // 2
        tree = self.tree(p.chart)
        want = self._shape_of(n)
        got = _tree_shape(tree)
        if got != want:
            raise SpecError(f"field has shape {got}, expected {want} for n={n}")
        return eval_tree(tree, chart_bindings(n, coords, order), params or {})


def _tree_shape(tree) -> tuple[int, ...]:
    if isinstance(tree, tuple):
        inner = {_tree_shape(t) for t in tree}
        if len(inner) != 1:
            raise SpecError("ragged expression array")
        return (len(tree),) + inner.pop()
    return ()


class VectorField(_ChartExprs):
    """Vector field given by 2n coordinate components (on d/dx^i, then d/dy^i)."""

    def __init__(self, components):
        super().__init__(components, lambda n: (2 * n,))


class EndomorphismField(_ChartExprs):
    """(1,1) tensor field; entry [a][b] is the a-th component of J(d/du^b)."""

    def __init__(self, components):
        super().__init__(components, lambda n: (2 * n, 2 * n))


# ---------------------------------------------------------------------------
# transitions
# ---------------------------------------------------------------------------


def transition_jet(spec: ManifoldSpec, t: Transition, coords: Sequence[float], order: int) -> Jet:
    """Target coordinates as a jet of shape (2n,) in the source coordinates."""
    return eval_tree(t.exprs, chart_bindings(spec.n, coords, order), spec.params(t.source))


@dataclass(frozen=True)
class AffineReport:
    max_dx_dy: float
    max_d2y_dydy: float
    samples: int

    @property
    def residual(self) -> float:
        return max(self.max_dx_dy, self.max_d2y_dydy)


@dataclass(frozen=True)
class BundleReport:
    residual: float
    samples: int


def validate_affine_transition(spec: ManifoldSpec, t: Transition, order: int = 2) -> AffineReport:
    """Residuals of the affine-in-y transition form at every overlap sample."""
    n = spec.n
    if len(t.overlap_samples) == 0:
        raise SpecError("transition has no overlap samples")
    order = max(order, 2)
    dx, d2y = 0.0, 0.0
    for s in t.overlap_samples:
        T = transition_jet(spec, t, s, order)
        first = T.grad()  # (2n target, 2n source)
        dx = max(dx, float(np.max(np.abs(first.value[:n, n:]))))
        second = first[n:, n:].grad().value  # (n, n, 2n)
        d2y = max(d2y, float(np.max(np.abs(second[:, :, n:]))))
    return AffineReport(dx, d2y, len(t.overlap_samples))


def validate_bundle_type(spec: ManifoldSpec, t: Transition) -> BundleReport:
    """Largest |y_target| with the fiber coordinates of each sample set to zero."""
    n = spec.n
    worst = 0.0
    for s in t.overlap_samples:
        s0 = np.array(s, dtype=float)
        s0[n:] = 0.0
        T = transition_jet(spec, t, s0, 0)
        worst = max(worst, float(np.max(np.abs(T.value[n:]))))
    return BundleReport(worst, len(t.overlap_samples))


# ---------------------------------------------------------------------------
# Euler fields and second order fields
# ---------------------------------------------------------------------------


def euler_field_chart(coords: Sequence[float]) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[0] // 2
    return np.concatenate([np.zeros(n), coords[n:]])


def _euler_residual_from_jet(Xj: Jet, n: int) -> float:
    fiber = Xj[n:]
    jac = fiber.grad().value[:, n:] - np.eye(n)  # d/dy^j (X^{y_i} - y^i)
    base = np.abs(Xj.value[:n])
    return float(max(np.max(np.abs(jac)), np.max(base) if n else 0.0))


def euler_cocycle_residual(X: VectorField, p: Point, params: Mapping[str, float] | None = None) -> float:
    """Zero iff X equals y^i d/dy^i plus a projectable vertical field near p."""
    Xj = X.jet(p, 1, params)
    return _euler_residual_from_jet(Xj, len(p.coords) // 2)


def is_second_order_residual(X: VectorField, p: Point, params: Mapping[str, float] | None = None) -> float:
    n = len(p.coords) // 2
    Xj = X.jet(p, 1, params)
    return second_order_residual_jet(Xj, n)


def second_order_residual_jet(Xj: Jet, n: int) -> float:
    """Residual of SX against a local Euler field, for X given as a jet."""
    SX = jeinsum("ab,b->a", S_matrix(n), Xj)
    return _euler_residual_from_jet(SX, n)


# ---------------------------------------------------------------------------
# Nijenhuis tensor and L_X S
# ---------------------------------------------------------------------------


def nijenhuis_from_jet(J: Jet) -> np.ndarray:
    """N[d, a, b]: d-th component of N(d/du^a, d/du^b) for J given as an order>=1 jet."""
    Jv = J.value
    dJ = J.grad().value  # dJ[d, b, c] = d_c J^d_b
    t1 = np.einsum("ca,dbc->dab", Jv, dJ)
    t2 = np.einsum("cb,dac->dab", Jv, dJ)
    t3 = np.einsum("dc,cab->dab", Jv, dJ)  # J^d_c d_b J^c_a
    t4 = np.einsum("dc,cba->dab", Jv, dJ)  # J^d_c d_a J^c_b
    return t1 - t2 + t3 - t4


def nijenhuis(Jfield: EndomorphismField, p: Point, params: Mapping[str, float] | None = None) -> np.ndarray:
    return nijenhuis_from_jet(Jfield.jet(p, 1, params))


@dataclass(frozen=True)
class LieSResult:
    F: np.ndarray
    V: np.ndarray
    H: np.ndarray

    @property
    def is_tangential(self) -> bool:
        return bool(np.max(np.abs(self.F)) <= 1e-12)


def lie_derivative_S_jet(Xj: Jet, n: int) -> Jet:
    """Components of F = L_X S as a jet one order below X."""
    S = S_matrix(n)
    DX = Xj.grad()  # DX[a, c] = d_c X^a
    return jeinsum("ab,bc->ac", S, DX) - jeinsum("ab,bc->ac", DX, S)


def lie_derivative_S(X: VectorField, p: Point, params: Mapping[str, float] | None = None) -> LieSResult:
    n = len(p.coords) // 2
    F = lie_derivative_S_jet(X.jet(p, 1, params), n).value
    I = np.eye(2 * n)
    return LieSResult(F, 0.5 * (I + F), 0.5 * (I - F))
