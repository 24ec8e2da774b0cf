"""Normalizations, adapted frames, the canonical extension and its connections.

Frame conventions
-----------------
With ``T[i, j] = t^i_j`` the adapted frame is

* ``X_i = d/dx^i - t^j_i d/dy^j`` (frame index ``i``),
* ``Y_i = d/dy^i`` (frame index ``n + i``),

stored as ``E[alpha, a]`` (coordinate component ``a`` of frame vector ``alpha``).
The coframe ``dx^i``, ``theta^i = dy^i + t^i_j dx^j`` is stored as ``W[alpha, a]``
and satisfies ``W @ E.T = I``.  Connection coefficients live in the frame:
``nabla_{e_a} e_b = Gamma[c, a, b] e_c``.

Every quantity is carried as a :class:`~tangentlab.jets.Jet`, so derivatives of
connection coefficients (needed for curvature and its covariant derivative)
are exact.  ``r_order`` is the jet order kept on the curvature tensor: Gamma is
carried at ``r_order + 1``, the metric and normalization at ``r_order + 2``.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .expr import Node
from .geometry import S_matrix, VectorField, lie_derivative_S_jet, second_order_residual_jet
from .jets import MAX_ORDER, Jet, SingularMatrixError, jeinsum, jet_det, jet_inv, stack
from .manifold import ManifoldSpec, Point, SpecError, chart_bindings, eval_tree

__all__ = [
    "DegenerateMetricError",
    "PreconditionError",
    "FrameGeometry",
    "metric_jet",
    "lagrangian_jet",
    "hessian_y",
    "normalization_jet",
    "energy_hamiltonian_jet",
    "normalization_from_semispray",
    "energy_and_hamiltonian",
    "second_energy",
    "EnergyResult",
    "frame_matrices",
]

DEGENERACY_TOL = 1e-9


class DegenerateMetricError(ValueError):
    """The transversal metric (or a form built from it) is singular at the point."""


class PreconditionError(ValueError):
    """An operation was asked for outside the situation where it is defined."""


# ---------------------------------------------------------------------------
# pulling fields out of a spec
# ---------------------------------------------------------------------------


def hessian_y(L: Jet, n: int) -> Jet:
    ys = range(n, 2 * n)
    return L.grad(ys).grad(ys)


def lagrangian_jet(spec: ManifoldSpec, chart: str, coords: Sequence[float], order: int, ast: Node | None = None) -> Jet:
    if order > MAX_ORDER:
        raise PreconditionError(f"needs Lagrangian jets of order {order} > {MAX_ORDER}")
    node = spec.lagrangian_ast(chart) if ast is None else ast
    return spec.evaluate(node, chart, coords, order)


def metric_jet(spec: ManifoldSpec, chart: str, coords: Sequence[float], order: int) -> Jet:
    """Transversal metric g_ij as an (n, n) jet of the given order."""
    if spec.lagrangians is not None:
        return hessian_y(lagrangian_jet(spec, chart, coords, order + 2), spec.n)
    return spec.evaluate(spec.metric_tree(chart), chart, coords, order)


def _semispray_t(Xj: Jet, n: int) -> Jet:
    F = lie_derivative_S_jet(Xj, n)
    return 0.5 * F[n:, :n]


def energy_hamiltonian_jet(L: Jet, coords: Sequence[float], n: int) -> tuple[Jet, Jet]:
    """(energy, Hamiltonian field) as jets; the field is two orders below L."""
    ys = list(range(n, 2 * n))
    y = Jet.variables(coords, L.order)[n:]
    energy = jeinsum("i,i->", y, L.grad(ys)) - L
    H2 = L.grad().grad()
    Lxy = H2[:n, n:]
    Lyy = H2[n:, n:]
    zero = Jet.constant(np.zeros((n, n)), L.nvars, Lyy.order)
    top = stack([Lxy - Lxy.transpose(), -Lyy], axis=1)
    bottom = stack([Lyy, zero], axis=1)
    omega = stack([top, bottom], axis=0).reshape(2 * n, 2 * n)
    try:
        inv = jet_inv(omega.transpose())
    except SingularMatrixError as exc:
        raise DegenerateMetricError(f"singular Lagrangian symplectic form: {exc}") from None
    X = -jeinsum("ab,b->a", inv, energy.grad())
    return energy, X


def normalization_jet(spec: ManifoldSpec, chart: str, coords: Sequence[float], order: int) -> Jet:
    """t^i_j as an (n, n) jet (``T[i, j] = t^i_j``)."""
    n = spec.n
    kind = spec.normalization_type
    m = 2 * n
    if kind == "zero":
        return Jet.constant(np.zeros((n, n)), m, order)
    if kind == "explicit":
        if chart not in spec.normalization_exprs:
            raise SpecError(f"normalization not declared on chart {chart!r}")
        return spec.evaluate(spec.normalization_exprs[chart], chart, coords, order)
    if kind == "semispray":
        if chart not in spec.normalization_exprs:
            raise SpecError(f"semispray not declared on chart {chart!r}")
        Xj = spec.evaluate(spec.normalization_exprs[chart], chart, coords, order + 1)
        _gate_second_order(Xj, n)
        return _semispray_t(Xj, n)
    if kind == "energy":
        L = lagrangian_jet(spec, chart, coords, order + 3)
        _, X = energy_hamiltonian_jet(L, coords, n)
        _gate_second_order(X, n)
        return _semispray_t(X, n)
    raise SpecError(f"unknown normalization type {kind!r}")


def _gate_second_order(Xj: Jet, n: int, tol: float = 1e-8) -> None:
    if Xj.order < 1:
        return
    res = second_order_residual_jet(Xj, n)
    if res > tol:
        raise PreconditionError(f"field is not of the second order (residual {res:.3e})")


def normalization_from_semispray(X: VectorField, p: Point, params: Mapping[str, float] | None = None, tol: float = 1e-8) -> np.ndarray:
    """t^i_j read off H = (Id - L_X S)/2 at p."""
    n = len(p.coords) // 2
    Xj = X.jet(p, 1, params)
    res = second_order_residual_jet(Xj, n)
    if res > tol:
        raise PreconditionError(f"X is not of the second order at this point (residual {res:.3e})")
    return _semispray_t(Xj, n).value


@dataclass(frozen=True)
class EnergyResult:
    energy: float
    field: np.ndarray
    second_order_residual: float


def energy_and_hamiltonian(spec: ManifoldSpec, chart: str, coords: Sequence[float]) -> EnergyResult:
    n = spec.n
    L = lagrangian_jet(spec, chart, coords, 3)
    energy, X = energy_hamiltonian_jet(L, coords, n)
    return EnergyResult(float(energy.value), np.asarray(X.value), second_order_residual_jet(X, n))


def second_energy(spec: ManifoldSpec, chart: str, coords: Sequence[float]) -> float:
    """E^2 L - E L with E = y^i d/dy^i."""
    n = spec.n
    L = lagrangian_jet(spec, chart, coords, 2)
    y = Jet.variables(coords, 2)[n:]

    def euler(f: Jet) -> Jet:
        return jeinsum("i,i->", y, f.grad(range(n, 2 * n)))

    EL = euler(L)
    return float((euler(EL) - EL).value)


# ---------------------------------------------------------------------------
# the adapted frame and everything built on it
# ---------------------------------------------------------------------------


def frame_matrices(T: Jet) -> tuple[Jet, Jet]:
    n = T.shape[0]
    m = T.nvars
    I = Jet.constant(np.eye(n), m, T.order)
    Z = Jet.constant(np.zeros((n, n)), m, T.order)
    E = stack([stack([I, -T.transpose()], axis=1), stack([Z, I], axis=1)]).reshape(2 * n, 2 * n)
    W = stack([stack([I, Z], axis=1), stack([T, I], axis=1)]).reshape(2 * n, 2 * n)
    return E, W


def _letters(k: int, skip: str = "") -> str:
    # "Z" is reserved by jeinsum for the coefficient-pair axis
    pool = [c for c in string.ascii_letters if c not in skip + "Z"]
    return "".join(pool[:k])


class FrameGeometry:
    """All frame-level objects at one point of one chart."""

    def __init__(self, g: Jet, T: Jet, coords: Sequence[float], r_order: int = 1, chart: str | None = None):
        self.n = g.shape[0]
        self.m = 2 * self.n
        self.coords = np.asarray(coords, dtype=float)
        self.r_order = r_order
        self.chart = chart
        og = r_order + 2
        if g.order < og or T.order < og:
            raise PreconditionError(f"metric/normalization jets of order {og} required")
        self.g = g.truncate(og)
        self.T = T.truncate(og)
        gv = self.g.value
        scale = float(np.max(np.abs(gv)))
        self.det_g = float(np.linalg.det(gv))
        if scale == 0.0 or abs(self.det_g) < DEGENERACY_TOL * scale ** self.n:
            raise DegenerateMetricError(f"degenerate transversal metric (det g = {self.det_g:.3e})")

    @classmethod
    def at(cls, spec: ManifoldSpec, chart: str, coords: Sequence[float], r_order: int = 1) -> "FrameGeometry":
        og = r_order + 2
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (2 * spec.n,):
            raise SpecError(f"expected {2 * spec.n} coordinates, got {coords.size}")
        g = metric_jet(spec, chart, coords, og)
        T = normalization_jet(spec, chart, coords, og)
        return cls(g, T, coords, r_order, chart)

    # -- basic frame data ------------------------------------------------

    @cached_property
    def frames(self) -> tuple[Jet, Jet]:
        return frame_matrices(self.T)

    @property
    def E(self) -> Jet:
        return self.frames[0]

    @property
    def W(self) -> Jet:
        return self.frames[1]

    @cached_property
    def pairing_residual(self) -> float:
        P = jeinsum("ab,cb->ac", self.W, self.E)
        return float(np.max(np.abs(P.value - np.eye(self.m))))

    def frame_deriv(self, f: Jet) -> Jet:
        """e_alpha(f) stacked on a new leading axis."""
        d = f.grad()  # (*shape, m)
        k = f.ndim
        idx = _letters(k, "pq")
        return jeinsum(f"{idx}q,pq->p{idx}", d, self.E)

    @cached_property
    def c(self) -> Jet:
        """Structure functions: [e_a, e_b] = c[g, a, b] e_g."""
        ed = self.frame_deriv(self.E)  # ed[a, b, k] = e_a(E[b, k])
        A = ed - ed.swapaxes(0, 1)
        return jeinsum("gk,abk->gab", self.W, A)

    @cached_property
    def G(self) -> Jet:
        n = self.n
        Z = Jet.constant(np.zeros((n, n)), self.m, self.g.order)
        return stack([stack([self.g, Z], axis=1), stack([Z, self.g], axis=1)]).reshape(self.m, self.m)

    @cached_property
    def g_inv(self) -> Jet:
        return jet_inv(self.g)

    @cached_property
    def G_inv(self) -> Jet:
        n = self.n
        gi = self.g_inv
        Z = Jet.constant(np.zeros((n, n)), self.m, gi.order)
        return stack([stack([gi, Z], axis=1), stack([Z, gi], axis=1)]).reshape(self.m, self.m)

    # -- connections -------------------------------------------------------

    @cached_property
    def gamma_levi_civita(self) -> Jet:
        G, c = self.G, self.c
        eG = self.frame_deriv(G)  # eG[e, a, b]
        # K[d, a, b] = 2 gamma(nabla_{e_a} e_b, e_d) by the Koszul formula
        K = (
            eG.transpose(2, 0, 1)  # e_a G_{bd}
            + eG.transpose(2, 1, 0)  # e_b G_{ad}
            - eG  # e_d G_{ab}
            + jeinsum("eab,ed->dab", c, G)
            - jeinsum("ead,eb->dab", c, G)
            - jeinsum("ebd,ea->dab", c, G)
        )
        return jeinsum("gd,dab->gab", self.G_inv, K) * 0.5

    @cached_property
    def gamma_D(self) -> Jet:
        n = self.n
        lc = self.gamma_levi_civita
        c = self.c.truncate(lc.order)
        coeffs = np.zeros_like(lc.coeffs)
        h, v = slice(0, n), slice(n, 2 * n)
        coeffs[h, h, h] = lc.coeffs[h, h, h]
        coeffs[v, v, v] = lc.coeffs[v, v, v]
        coeffs[h, v, h] = c.coeffs[h, v, h]
        coeffs[v, h, v] = c.coeffs[v, h, v]
        return Jet(coeffs, self.m, lc.order)

    @cached_property
    def gamma_nabla_prime(self) -> Jet:
        n = self.n
        lc = self.gamma_levi_civita
        coeffs = np.zeros_like(lc.coeffs)
        h, v = slice(0, n), slice(n, 2 * n)
        coeffs[h, :, h] = lc.coeffs[h, :, h]
        coeffs[v, :, v] = lc.coeffs[v, :, v]
        return Jet(coeffs, self.m, lc.order)

    def connection(self, which: str) -> Jet:
        if which in ("levi_civita", "LC"):
            return self.gamma_levi_civita
        if which in ("canonical_D", "D"):
            return self.gamma_D
        if which in ("nabla_prime",):
            return self.gamma_nabla_prime
        raise ValueError(f"unknown connection {which!r}")

    def torsion(self, which: str = "canonical_D") -> Jet:
        G = self.connection(which)
        c = self.c.truncate(G.order)
        return G - G.transpose(0, 2, 1) - c

    @cached_property
    def torsion_closed_form(self) -> np.ndarray:
        """-p_T[p_N a, p_N b] in frame components (values)."""
        n = self.n
        out = np.zeros((self.m,) * 3)
        out[n:, :n, :n] = -self.c.value[n:, :n, :n]
        return out

    def metricity(self, which: str) -> Jet:
        """(nabla_a gamma)(e_b, e_c) for the chosen connection."""
        Gm = self.connection(which)
        G = self.G.truncate(Gm.order)
        eG = self.frame_deriv(self.G).truncate(Gm.order)
        return eG - jeinsum("eab,ec->abc", Gm, G) - jeinsum("eac,be->abc", Gm, G)

    # -- endomorphisms --------------------------------------------------------

    def frame_endomorphisms(self) -> dict[str, np.ndarray]:
        n, m = self.n, self.m
        S = np.zeros((m, m))
        S[n:, :n] = np.eye(n)
        Sp = np.zeros((m, m))
        Sp[:n, n:] = np.eye(n)
        return {"S": S, "S_prime": Sp, "F": Sp + S, "J": Sp - S}

    def to_coordinates(self, M: np.ndarray) -> np.ndarray:
        """Coordinate matrix of an endomorphism given in the frame."""
        return self.E.value.T @ M @ self.W.value

    # -- metric in coordinates -----------------------------------------------

    @cached_property
    def gamma_coordinates(self) -> np.ndarray:
        W = self.W.value
        return W.T @ self.G.value @ W

    @cached_property
    def t_is_foliated(self) -> bool:
        if self.T.order < 1:
            return True
        dT = self.T.grad().value[..., self.n:]
        return bool(np.max(np.abs(dT)) <= 1e-12)

    # -- curvature -----------------------------------------------------------

    def curvature(self, which: str = "canonical_D") -> Jet:
        Gm = self.connection(which)
        if Gm.order < 1:
            raise PreconditionError("curvature needs r_order >= 0")
        c = self.c.truncate(Gm.order)
        eG = self.frame_deriv(Gm)  # eG[a, d, b, g] = e_a Gamma^d_{b g}
        t1 = eG.transpose(1, 3, 0, 2)  # [d, g, a, b]
        quad = jeinsum("dae,ebg->dgab", Gm, Gm)
        brk = jeinsum("eab,deg->dgab", c, Gm)
        return t1 - t1.transpose(0, 1, 3, 2) + quad - quad.transpose(0, 1, 3, 2) - brk

    @cached_property
    def R(self) -> Jet:
        return self.curvature("canonical_D")

    @cached_property
    def R_cov(self) -> Jet:
        """R_cov[a, b, c, d] = gamma(R(e_c, e_d) e_b, e_a)."""
        return jeinsum("ae,ebcd->abcd", self.G, self.R)

    @cached_property
    def DR(self) -> Jet:
        """(D_{e_f} R)[f, d, g, a, b]; note Gamma[c, a, b] has the direction in its middle slot."""
        R = self.R
        if R.order < 1:
            raise PreconditionError("covariant derivative of curvature needs r_order >= 1")
        Gm = self.gamma_D.truncate(R.order)
        eR = self.frame_deriv(R)
        return (
            eR
            + jeinsum("dfe,egab->fdgab", Gm, R)
            - jeinsum("efg,deab->fdgab", Gm, R)
            - jeinsum("efa,dgeb->fdgab", Gm, R)
            - jeinsum("efb,dgae->fdgab", Gm, R)
        )

    @cached_property
    def DR_cov(self) -> Jet:
        """(D_{e_f} R_cov)[f, a, b, c, d]."""
        Rc = self.R_cov
        if Rc.order < 1:
            raise PreconditionError("covariant derivative of curvature needs r_order >= 1")
        Gm = self.gamma_D.truncate(Rc.order)
        eR = self.frame_deriv(Rc)
        return (
            eR
            - jeinsum("efa,ebcd->fabcd", Gm, Rc)
            - jeinsum("efb,aecd->fabcd", Gm, Rc)
            - jeinsum("efc,abed->fabcd", Gm, Rc)
            - jeinsum("efd,abce->fabcd", Gm, Rc)
        )

    @cached_property
    def D_gamma(self) -> Jet:
        """(D_{e_f} gamma)(e_a, e_b)."""
        return self.metricity("canonical_D")

    # -- vector fields in frame components ---------------------------------

    def apply(self, V: Jet, f: Jet) -> Jet:
        """V(f) for a frame-component field V (shape (m,))."""
        ef = self.frame_deriv(f)
        idx = _letters(f.ndim, "z")
        return jeinsum(f"z,z{idx}->{idx}", V, ef)

    def bracket(self, V: Jet, U: Jet) -> Jet:
        VU = jeinsum("a,b->ab", V, U)
        return self.apply(V, U) - self.apply(U, V) + jeinsum("gab,ab->g", self.c, VU)

    def cov(self, V: Jet, U: Jet, which: str = "canonical_D") -> Jet:
        """nabla_V U for frame-component fields."""
        Gm = self.connection(which)
        inner = jeinsum("gab,b->ga", Gm, U)
        return jeinsum("a,ga->g", V, inner) + self.apply(V, U)

    def frame_field(self, k: int, order: int | None = None) -> Jet:
        e = np.zeros(self.m)
        e[k] = 1.0
        return Jet.constant(e, self.m, self.gamma_D.order if order is None else order)

    def euler_lift(self) -> Jet:
        """S'E = y^i X_i for the chart-local Euler field, in frame components."""
        y = Jet.variables(self.coords, self.gamma_D.order)[self.n:]
        zeros = Jet.constant(np.zeros(self.n), self.m, self.gamma_D.order)
        return stack([*[y[i] for i in range(self.n)], *[zeros[i] for i in range(self.n)]])
