"""Hessians, Lagrangian forms, Cartan tensor and the (conformal) Lagrange tests.

All component conventions use the coordinate order ``(x1..xn, y1..yn)``:

* ``g_ij = d^2 L / dy^i dy^j`` with no symmetric-product factor;
* ``C_ijk = d g_jk / dy^i``;
* ``omega = d theta`` with ``theta = (dL/dy^i) dx^i``, stored as the matrix
  ``omega[a, b] = omega(d/du^a, d/du^b)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .connection import (
    DEGENERACY_TOL,
    DegenerateMetricError,
    PreconditionError,
    frame_matrices,
    hessian_y,
    lagrangian_jet,
    metric_jet,
    normalization_jet,
)
from .expr import Node
from .geometry import S_matrix, VectorField, lie_derivative_S_jet, transition_jet
from .jets import Jet, compose, jeinsum, jet_det, jet_inv
from .manifold import ManifoldSpec, Point, SpecError, Transition, coord_names, eval_tree

__all__ = [
    "hess_k",
    "theta_form",
    "MetricResult",
    "lagrangian_metric",
    "OmegaResult",
    "omega_form",
    "CartanResult",
    "cartan_tensor",
    "symmetry_residual",
    "is_locally_lagrange",
    "compatibility_residual",
    "ConformalResult",
    "conformal_checks",
    "conformal_cartan_residual",
    "ThetaResult",
    "theta_global",
    "psi_and_lie_coefficients",
    "hess_lie_commutation_residual",
    "LieMetricResult",
    "lagrange_automorphism_residual",
]


def _ys(n: int) -> range:
    return range(n, 2 * n)


def hess_k(spec: ManifoldSpec, chart: str, coords: Sequence[float], k: int, ast: Node | None = None) -> np.ndarray:
    """Components d^k L / dy^{i1} ... dy^{ik} at the point."""
    if not 1 <= k <= 4:
        raise ValueError(f"k must be in 1..4, got {k}")
    L = lagrangian_jet(spec, chart, coords, k, ast)
    for _ in range(k):
        L = L.grad(_ys(spec.n))
    return np.asarray(L.value)


def theta_form(spec: ManifoldSpec, chart: str, coords: Sequence[float]) -> np.ndarray:
    return hess_k(spec, chart, coords, 1)


def is_degenerate(g: np.ndarray) -> bool:
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    scale = float(np.max(np.abs(g)))
    return scale == 0.0 or abs(float(np.linalg.det(g))) < DEGENERACY_TOL * scale**n


@dataclass(frozen=True)
class MetricResult:
    g: np.ndarray
    det: float
    signature: tuple[int, int]
    degenerate: bool


def lagrangian_metric(spec: ManifoldSpec, chart: str, coords: Sequence[float]) -> MetricResult:
    """Transversal metric at a point; degeneracy is flagged, never raised."""
    g = np.asarray(metric_jet(spec, chart, coords, 0).value)
    det = float(np.linalg.det(g))
    eig = np.linalg.eigvalsh(g)
    tol = DEGENERACY_TOL * max(float(np.max(np.abs(g))), 1e-300)
    sig = (int(np.sum(eig > tol)), int(np.sum(eig < -tol)))
    return MetricResult(g, det, sig, is_degenerate(g))


@dataclass(frozen=True)
class OmegaResult:
    omega: np.ndarray
    compatibility_residual: float
    metric_residual: float

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.omega))


def omega_matrix(H2: np.ndarray, n: int) -> np.ndarray:
    """omega = d theta from the full coordinate Hessian of L."""
    Lxy = H2[:n, n:]
    Lyy = H2[n:, n:]
    om = np.zeros((2 * n, 2 * n))
    om[:n, :n] = Lxy - Lxy.T
    om[n:, :n] = Lyy
    om[:n, n:] = -Lyy
    return om


def omega_form(spec: ManifoldSpec, chart: str, coords: Sequence[float]) -> OmegaResult:
    n = spec.n
    L = lagrangian_jet(spec, chart, coords, 2)
    H2 = np.asarray(L.grad().grad().value)
    om = omega_matrix(H2, n)
    S = S_matrix(n)
    oS = om @ S  # oS[a, b] = omega(d_a, S d_b)
    compat = float(np.max(np.abs(oS - oS.T)))
    # g([d_a], [d_b]) = omega(S d_a, d_b) on horizontal arguments
    gS = (S.T @ om)[:n, :n]
    metric_res = float(np.max(np.abs(gS - H2[n:, n:])))
    return OmegaResult(om, compat, metric_res)


def symmetry_residual(C: np.ndarray) -> float:
    """Largest difference between C and any index permutation of it."""
    worst = 0.0
    for perm in itertools.permutations(range(C.ndim)):
        worst = max(worst, float(np.max(np.abs(C - np.transpose(C, perm)))))
    return worst


@dataclass(frozen=True)
class CartanResult:
    C: np.ndarray
    symmetry_residual: float


def _cartan(g: Jet, n: int) -> np.ndarray:
    dg = np.asarray(g.grad().value)  # (n, n, 2n)
    return np.transpose(dg[:, :, n:], (2, 0, 1))


def cartan_tensor(spec: ManifoldSpec, chart: str, coords: Sequence[float]) -> CartanResult:
    C = _cartan(metric_jet(spec, chart, coords, 1), spec.n)
    return CartanResult(C, symmetry_residual(C))


@dataclass(frozen=True)
class Verdict:
    passed: bool
    max_residual: float
    points: int


def is_locally_lagrange(spec: ManifoldSpec, samples: Iterable[tuple[str, Sequence[float]]], tol: float = 1e-10) -> Verdict:
    samples = list(samples)
    if not samples:
        raise ValueError("is_locally_lagrange needs at least one sample point")
    worst = max(cartan_tensor(spec, cid, p).symmetry_residual for cid, p in samples)
    return Verdict(worst <= tol, worst, len(samples))


# ---------------------------------------------------------------------------
# cocycles across transitions
# ---------------------------------------------------------------------------


def _pullback_scalar(spec: ManifoldSpec, ast: Node, t: Transition, coords, order: int) -> Jet:
    """Jet (in source coordinates) of a target-chart scalar composed with the transition."""
    inner = transition_jet(spec, t, coords, order)
    outer = spec.evaluate(ast, t.target, inner.value, order)
    return compose(outer, inner)


def compatibility_residual(
    spec: ManifoldSpec,
    t: Transition,
    coords: Sequence[float],
    source: Node | None = None,
    target: Node | None = None,
) -> float:
    """max |d^2 (L_target o t - L_source) / dy dy| at an overlap point."""
    n = spec.n
    La = lagrangian_jet(spec, t.source, coords, 2, source)
    tgt = spec.lagrangian_ast(t.target) if target is None else target
    Lb = _pullback_scalar(spec, tgt, t, coords, 2)
    return float(np.max(np.abs(hessian_y(Lb - La, n).value)))


@dataclass(frozen=True)
class ConformalResult:
    factor: float
    residual: float
    factor_y_derivative: float


def _metric_pullback(spec: ManifoldSpec, t: Transition, coords, order: int, lagrangians=None) -> tuple[Jet, Jet]:
    """(g_source, pulled-back g_target) as jets in the source chart."""
    n = spec.n
    if lagrangians is not None:
        La = spec.evaluate(lagrangians[t.source], t.source, coords, order + 2)
        Lb = _pullback_scalar(spec, lagrangians[t.target], t, coords, order + 2)
        return hessian_y(La, n), hessian_y(Lb, n)
    if spec.lagrangians is not None:
        La = lagrangian_jet(spec, t.source, coords, order + 2)
        Lb = _pullback_scalar(spec, spec.lagrangian_ast(t.target), t, coords, order + 2)
        return hessian_y(La, n), hessian_y(Lb, n)
    ga = metric_jet(spec, t.source, coords, order)
    inner = transition_jet(spec, t, coords, order + 1)
    binds = dict(zip(coord_names(n), (inner[a].truncate(order) for a in range(2 * n))))
    gb = eval_tree(spec.metric_tree(t.target), binds, spec.params(t.target))
    J = inner.grad()[n:, n:]  # d y_target / d y_source
    gb = jeinsum("ai,ab->ib", J, gb)
    gb = jeinsum("ib,bj->ij", gb, J)
    return ga, gb


def conformal_checks(
    spec: ManifoldSpec,
    t: Transition,
    coords: Sequence[float],
    use_conformal_lagrangians: bool = True,
) -> ConformalResult:
    """Factor f with g_target o t = f g_source, and how far that fails to hold with foliated f."""
    n = spec.n
    lag = spec.conformal["lagrangians"] if (use_conformal_lagrangians and spec.conformal) else None
    ga, gb = _metric_pullback(spec, t, coords, 1, lag)
    gav = np.asarray(ga.value)
    if is_degenerate(gav):
        raise DegenerateMetricError("source metric is degenerate at the overlap point")
    f = jeinsum("ij,ji->", jet_inv(ga), gb) * (1.0 / n)
    dev = float(np.max(np.abs(np.asarray(gb.value) - float(f.value) * gav)))
    dfy = float(np.max(np.abs(f.grad(_ys(n)).value)))
    return ConformalResult(float(f.value), max(dev, dfy), dfy)


def conformal_cartan_residual(
    spec: ManifoldSpec,
    chart: str,
    coords: Sequence[float],
    tau: Sequence | None = None,
) -> float:
    """Symmetry residual of C + tau (x) g.

    ``tau`` holds the coefficients of the complementary (0,1)-form on the
    vertical coframe.  It defaults to the manifold's ``conformal.tau`` entry, and it
    may be a sequence of numbers or of expression nodes.
    """
    n = spec.n
    g = metric_jet(spec, chart, coords, 1)
    C = _cartan(g, n)
    if tau is None:
        if not spec.conformal or chart not in spec.conformal["tau"]:
            raise SpecError(f"no conformal tau declared on chart {chart!r}")
        tau_v = np.asarray(spec.evaluate(spec.conformal["tau"][chart], chart, coords, 0).value)
    elif all(isinstance(v, (int, float, np.floating)) for v in tau):
        tau_v = np.asarray(tau, dtype=float)
    else:
        tau_v = np.asarray(spec.evaluate(tuple(tau), chart, coords, 0).value)
    Ct = C + np.einsum("i,jk->ijk", tau_v, np.asarray(g.value))
    return symmetry_residual(Ct)


# ---------------------------------------------------------------------------
# global forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaResult:
    components: np.ndarray  # Theta_ij on theta^i ^ dx^j
    matrix: np.ndarray  # Theta(d_a, d_b) in coordinates
    det: float
    nondegenerate: bool


def theta_global(spec: ManifoldSpec, chart: str, coords: Sequence[float]) -> ThetaResult:
    n = spec.n
    g = np.asarray(metric_jet(spec, chart, coords, 0).value)
    T = normalization_jet(spec, chart, coords, 0)
    _, W = frame_matrices(T)
    Wv = np.asarray(W.value)
    vert, hor = Wv[n:], Wv[:n]  # theta^i(d_a), dx^j(d_a)
    A = vert.T @ g @ hor
    M = A - A.T
    return ThetaResult(g, M, float(np.linalg.det(M)), not is_degenerate(g))


def psi_and_lie_coefficients(spec: ManifoldSpec, chart: str, coords: Sequence[float]) -> tuple[float, float]:
    """(psi, lambda_psi) = (det g, E(det g) + n det g) with E = y^i d/dy^i."""
    n = spec.n
    coords = np.asarray(coords, dtype=float)
    det = jet_det(metric_jet(spec, chart, coords, 1))
    Edet = float(coords[n:] @ det.grad(_ys(n)).value)
    return float(det.value), Edet + n * float(det.value)


# ---------------------------------------------------------------------------
# Lie derivatives
# ---------------------------------------------------------------------------


def _hess_tensor(L: Jet, n: int, k: int) -> Jet:
    """Hess_k L as a covariant k-tensor on M: only all-horizontal slots survive."""
    S = S_matrix(n)
    out = L
    for _ in range(k):
        out = out.grad()
    # contract every slot with S: H_{a1..ak} = S^{b1}_{a1} ... d_{b1..bk} L
    for s in range(k):
        out = jeinsum(_contract_slot(k, s), out, S)
    return out


def _contract_slot(k: int, s: int) -> str:
    letters = "abcdefgh"[:k]
    src = letters
    dst = letters[:s] + "z" + letters[s + 1 :]
    return f"{src},{letters[s]}z->{dst}"


def _lie_covariant(X: Jet, H: Jet, k: int) -> Jet:
    """(L_X H) for a covariant k-tensor H given in coordinates."""
    DX = X.grad()  # DX[c, a] = d_a X^c
    letters = "abcdefgh"[:k]
    dH = H.grad()
    out = jeinsum(f"{letters}z,z->{letters}", dH, X)
    for s in range(k):
        src = letters[:s] + "z" + letters[s + 1 :]
        out = out + jeinsum(f"{src},z{letters[s]}->{letters}", H, DX)
    return out


def hess_lie_commutation_residual(
    spec: ManifoldSpec,
    chart: str,
    coords: Sequence[float],
    X: VectorField,
    k: int,
    tol: float = 1e-10,
) -> float:
    """max |Hess_k(XL) - L_X(Hess_k L)| for a tangential infinitesimal automorphism X."""
    if not 1 <= k <= 4:
        raise ValueError(f"k must be in 1..4, got {k}")
    n = spec.n
    p = Point(chart, tuple(coords))
    params = spec.params(chart)
    Xj = X.jet(p, k + 1, params)
    F = lie_derivative_S_jet(Xj, n)
    if float(np.max(np.abs(F.value))) > tol:
        raise PreconditionError(f"X is not tangential: max|L_X S| = {np.max(np.abs(F.value)):.3e}")
    L = lagrangian_jet(spec, chart, coords, k + 1)
    XL = jeinsum("a,a->", L.grad(), Xj.truncate(k))
    lhs = _hess_tensor(XL, n, k)
    rhs = _lie_covariant(Xj.truncate(1), _hess_tensor(L, n, k), k)
    return float(np.max(np.abs(lhs.value - rhs.value)))


@dataclass(frozen=True)
class LieMetricResult:
    residual: float  # max over horizontal frame pairs of |(L_X g)|
    cross_check: float  # |(L_X g)(Y, SZ) + g(Y, [X, SZ])| over coordinate pairs
    horizontal: np.ndarray


def lagrange_automorphism_residual(spec: ManifoldSpec, chart: str, coords: Sequence[float], X: VectorField) -> LieMetricResult:
    n = spec.n
    m = 2 * n
    p = Point(chart, tuple(coords))
    Xj = X.jet(p, 1, spec.params(chart))
    gj = metric_jet(spec, chart, coords, 1)
    # g viewed as a 2-covariant tensor on M: dx^i (x) dx^j components only
    G = Jet.constant(np.zeros((m, m)), m, 1)
    coeffs = G.coeffs.copy()
    coeffs[:n, :n] = gj.coeffs
    G = Jet(coeffs, m, 1)
    Lg = np.asarray(_lie_covariant(Xj, G, 2).value)
    T = normalization_jet(spec, chart, coords, 0)
    E, _ = frame_matrices(T)
    Ev = np.asarray(E.value)
    hor = (Ev @ Lg @ Ev.T)[:n, :n]
    S = S_matrix(n)
    DX = np.asarray(Xj.grad().value)
    Gv = np.asarray(G.value)
    # (L_X g)(d_a, S d_b) = -g(d_a, [X, S d_b]) and [X, S d_b] = -(DX S)[:, b]
    cross = float(np.max(np.abs(Lg @ S - Gv @ DX @ S)))
    return LieMetricResult(float(np.max(np.abs(hor))), cross, hor)
