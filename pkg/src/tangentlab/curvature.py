"""Curvature of the second canonical connection and its identity suite.

Index conventions follow :mod:`tangentlab.connection`: frame index ``i < n`` is
the horizontal ``X_i``; ``n + i`` is the vertical ``Y_i = S X_i``.

* ``R[d, g, a, b]`` is the ``e_d`` component of ``R(e_a, e_b) e_g``.
* ``Rcov[a, b, c, d] = gamma(R(e_c, e_d) e_b, e_a)``.
* ``DR[f, d, g, a, b]`` holds ``(D_{e_f} R)`` with the same layout as ``R``.

Every identity is checked on adapted frame fields.  The residual of an
identity ``lhs = rhs`` is ``max|lhs - rhs| / (1 + max|term|)`` over all its
individual terms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .connection import DegenerateMetricError, FrameGeometry, PreconditionError
from .jets import Jet, jeinsum

__all__ = [
    "IdentityReport",
    "IDENTITIES",
    "relative_residual",
    "riemann_D",
    "covariant_curvature",
    "ricci",
    "RicciResult",
    "identity_suite",
    "flag_curvature",
    "flag_curvature_from_arrays",
    "u_sectional",
    "u_sectional_from_arrays",
    "DegenerateDenominatorError",
    "curvature_reconstruction_residual",
    "finite_difference_oracle",
    "homogeneity_check",
    "cartan_from_metric_jet",
    "pair_exchange_general",
    "pair_exchange_stated",
]


class DegenerateDenominatorError(ValueError):
    """A sectional-type curvature is undefined (infinite) for the given arguments."""


def relative_residual(lhs, rhs, *terms) -> float:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    scale = max([float(np.max(np.abs(t))) if np.size(t) else 0.0 for t in (lhs, rhs, *terms)] or [0.0])
    diff = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
    return diff / (1.0 + scale)


@dataclass
class IdentityReport:
    name: str
    anchor: str
    residual: float | None
    tolerance: float
    passed: bool
    note: str = ""
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# basic tensors
# ---------------------------------------------------------------------------


def riemann_D(fg: FrameGeometry) -> np.ndarray:
    return np.asarray(fg.R.value)


def covariant_curvature(fg: FrameGeometry) -> np.ndarray:
    return np.asarray(fg.R_cov.value)


@dataclass(frozen=True)
class RicciResult:
    rho: np.ndarray  # rho[A, B] = rho_D(e_A, e_B)
    kappa: float
    ricci1_residual: float
    ricci2_residual: float
    ricci3_residual: float


def ricci_from_R(R: np.ndarray) -> np.ndarray:
    """rho(A, B) = trace of Z -> R(Z, A) B."""
    return np.einsum("abaA->Ab", R)


def ricci(fg: FrameGeometry) -> RicciResult:
    n = fg.n
    R = riemann_D(fg)
    rho = ricci_from_R(R)
    ginv = np.asarray(fg.g_inv.value)
    kappa = float(np.einsum("ij,ij->", ginv, rho[:n, :n]))
    # horizontal block: trace over the horizontal frame only
    r3 = np.einsum("ibiA->Ab", R[:n, :n, :n, :n])
    res3 = relative_residual(rho[:n, :n], r3, r3)
    # vertical block: trace over the vertical coframe
    Rv = R[n:, n:, n:, n:]
    r1 = np.einsum("ibiA->Ab", Rv)
    res1 = relative_residual(rho[n:, n:], r1, r1)
    # mixed block rho(Y_k, X_j) = sum_i <dx^i, p_N[D_{X_i} X_j, Y_k]>
    G = fg.gamma_D
    r2 = np.zeros((n, n))
    for k in range(n):
        Yk = fg.frame_field(n + k)
        for j in range(n):
            tot = 0.0
            for i in range(n):
                V = G[:, i, j]
                tot += float(fg.bracket(V, Yk).value[i])
            r2[k, j] = tot
    res2 = relative_residual(rho[n:, :n], r2, r2)
    return RicciResult(rho, kappa, res1, res2, res3)


def cartan_from_metric_jet(g: Jet, n: int) -> np.ndarray:
    """C[i, j, k] = dg_jk/dy^i."""
    dg = g.grad().value  # (n, n, 2n)
    return np.transpose(dg[:, :, n:], (2, 0, 1))


# ---------------------------------------------------------------------------
# pair exchange in closed form
# ---------------------------------------------------------------------------


def _B(C: np.ndarray, pt: np.ndarray) -> np.ndarray:
    """B[z, u, x, y] = C(S' p_T[X_z, X_u], X_x, X_y) with pt[m, z, u] = c^{n+m}_{zu}."""
    return np.einsum("mzu,mxy->zuxy", pt, C)


def pair_exchange_stated(Rh: np.ndarray, C: np.ndarray, pt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(lhs, rhs) of the pair-exchange defect in its two-term short form.

    The short form agrees with :func:`pair_exchange_general` for n <= 2 or
    when ``B`` vanishes; for n >= 3 with both torsion and Cartan tensor present
    it does not hold in general.
    """
    B = _B(C, pt)
    lhs = Rh - np.transpose(Rh, (2, 3, 0, 1))
    rhs = 0.5 * (np.transpose(B, (2, 3, 0, 1)) - B)
    return lhs, rhs


def pair_exchange_general(Rh: np.ndarray, C: np.ndarray, pt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(lhs, rhs) of the pair-exchange defect derived from the symmetry defect and first Bianchi.

    ``Rh[a, b, c, d] = R(X_a, X_b, X_c, X_d)``.  With ``B(z, u)(x, y)`` as in
    :func:`_B`, the exchange defect ``R(a, b, c, d) - R(c, d, a, b)`` equals
    ``(B(a,c)(d,b) - B(d,b)(a,c) + B(c,d)(b,a) + B(b,a)(d,c) - B(b,c)(a,d) - B(a,d)(c,b)) / 2``.
    """
    B = _B(C, pt)  # B[z, u, x, y]
    lhs = Rh - np.transpose(Rh, (2, 3, 0, 1))
    a, b, c, d = np.ix_(*(np.arange(Rh.shape[0]),) * 4)
    rhs = 0.5 * (
        B[a, c, d, b]
        - B[d, b, a, c]
        + B[c, d, b, a]
        + B[b, a, d, c]
        - B[b, c, a, d]
        - B[a, d, c, b]
    )
    return lhs, rhs


# ---------------------------------------------------------------------------
# the identity suite
# ---------------------------------------------------------------------------


class _Ctx:
    """Values and jet fields shared by the identities at one point."""

    def __init__(self, fg: FrameGeometry):
        self.fg = fg
        self.n = fg.n
        self.m = fg.m
        self.R = riemann_D(fg)
        self.Rcov = covariant_curvature(fg)
        self.DR = np.asarray(fg.DR.value)
        self.DRcov = np.asarray(fg.DR_cov.value)
        self.Dgamma = np.asarray(fg.D_gamma.value)
        self.c = np.asarray(fg.c.value)
        self.G = np.asarray(fg.G.value)
        self.GD = fg.gamma_D
        self.C = cartan_from_metric_jet(fg.g, fg.n)
        self._DXX: dict[tuple[int, int], Jet] = {}

    def DXX(self, j: int, k: int) -> Jet:
        """D_{X_j} X_k as a frame-component jet field."""
        key = (j, k)
        if key not in self._DXX:
            self._DXX[key] = self.GD[:, j, k]
        return self._DXX[key]

    def pN_bracket_Y(self, i: int, V: Jet) -> np.ndarray:
        """p_N [Y_i, V] (values, horizontal components padded to length m)."""
        br = self.fg.bracket(self.fg.frame_field(self.n + i), V).value
        out = np.zeros(self.m)
        out[: self.n] = br[: self.n]
        return out

    @property
    def pt(self) -> np.ndarray:
        """pt[m, i, j] = vertical component m of [X_i, X_j]."""
        n = self.n
        return self.c[n:, :n, :n]

    def foliated_t(self) -> bool:
        return self.fg.t_is_foliated


def _cyc3(n: int) -> Iterable[tuple[int, int, int]]:
    return itertools.product(range(n), repeat=3)


def _bott1(x: _Ctx):
    n = x.n
    lhs = x.R[:, :n, n:, n:]
    return lhs, np.zeros_like(lhs), ()


def _bott2(x: _Ctx):
    n = x.n
    lhs = np.zeros((n, n, n, x.m))
    rhs = np.zeros_like(lhs)
    for i, j, k in _cyc3(n):
        lhs[i, j, k] = x.R[:, k, n + i, j]
        rhs[i, j, k] = x.pN_bracket_Y(i, x.DXX(j, k))
    return lhs, rhs, ()


def _bott3(x: _Ctx):
    n = x.n
    fg = x.fg
    lhs = np.zeros((n, n, n, x.m))
    rhs = np.zeros_like(lhs)
    cj = fg.c
    for i, j in itertools.product(range(n), repeat=2):
        comps = cj[:, i, j]
        # p_T [X_i, X_j]: keep the vertical components
        mask = np.zeros(x.m)
        mask[n:] = 1.0
        V = comps * mask
        for k in range(n):
            lhs[i, j, k] = x.R[:, n + k, i, j]
            rhs[i, j, k] = -fg.cov(fg.frame_field(n + k), V).value
    return lhs, rhs, ()


def _bott4(x: _Ctx):
    n = x.n
    a = x.R[:, :n, n:, :n]  # [d, k, i, j] = R(Y_i, X_j) X_k
    lhs = a
    rhs = np.transpose(a, (0, 3, 2, 1))
    return lhs, rhs, ()


def _bianchi0(x: _Ctx):
    n = x.n
    V = x.R[:, n:, n:, n:]  # [d, k, i, j] = R(SX_i, SX_j) SX_k
    s = V + np.transpose(V, (0, 2, 3, 1)) + np.transpose(V, (0, 3, 1, 2))
    return s, np.zeros_like(s), (V,)


def _bianchi1(x: _Ctx):
    n = x.n
    # R(SX_i, X_k) SX_j  ->  A[d, j, i, k]
    A = x.R[:, n:, n:, :n]
    lhs = A
    rhs = np.transpose(A, (0, 2, 1, 3))
    return lhs, rhs, ()


def _bianchi3(x: _Ctx):
    n = x.n
    H = x.R[:, :n, :n, :n]  # [d, k, i, j] = R(X_i, X_j) X_k
    s = H + np.transpose(H, (0, 2, 3, 1)) + np.transpose(H, (0, 3, 1, 2))
    return s, np.zeros_like(s), (H,)


def _bianchi23(x: _Ctx):
    n = x.n
    D = x.DR[n:, :, :, n:, n:]  # [i, d, g, j, k] = (D_{SX_i} R)(SX_j, SX_k)
    s = D + np.transpose(D, (3, 1, 2, 4, 0)) + np.transpose(D, (4, 1, 2, 0, 3))
    return s, np.zeros_like(s), (D,)


def _bianchi21(x: _Ctx):
    n = x.n
    DR = x.DR
    t1 = DR[n:, :, :, n:, :n]  # [i, d, g, j, k] = (D_{SX_i}R)(SX_j, X_k)
    t2 = np.transpose(t1, (3, 1, 2, 0, 4))  # (D_{SX_j}R)(SX_i, X_k)
    t3 = np.transpose(DR[:n, :, :, n:, n:], (3, 1, 2, 4, 0))  # (D_{X_k}R)(SX_i, SX_j)
    return t1 - t2, -t3, (t1, t2, t3)


def _bianchi22(x: _Ctx):
    n = x.n
    DR, R = x.DR, x.R
    # (D_{X_i}R)(X_j, SX_k) - (D_{X_j}R)(X_i, SX_k) + (D_{SX_k}R)(X_i, X_j)
    a = DR[:n, :, :, :n, n:]  # [i, d, g, j, k]
    b = np.transpose(a, (3, 1, 2, 0, 4))
    cterm = np.transpose(DR[n:, :, :, :n, :n], (3, 1, 2, 4, 0))  # [i, d, g, j, k]
    lhs = a - b + cterm
    # R(p_T[X_i, X_j], SX_k)
    rhs = np.einsum("mij,dgmk->idgjk", x.pt, R[:, :, n:, n:])
    return lhs, rhs, (a, b, cterm)


def _bianchi20(x: _Ctx):
    n = x.n
    DR, R = x.DR, x.R
    a = DR[:n, :, :, :n, :n]  # [i, d, g, j, k] = (D_{X_i}R)(X_j, X_k)
    lhs = a + np.transpose(a, (3, 1, 2, 4, 0)) + np.transpose(a, (4, 1, 2, 0, 3))
    r = np.einsum("mij,dgmk->idgjk", x.pt, R[:, :, n:, :n])  # R(p_T[X_i,X_j], X_k)
    rhs = r + np.transpose(r, (3, 1, 2, 4, 0)) + np.transpose(r, (4, 1, 2, 0, 3))
    return lhs, rhs, (a, r)


def _bianchicovar1(x: _Ctx):
    n = x.n
    H = x.Rcov[:n, :n, :n, :n]  # [u, a, b, c]
    s = H + np.transpose(H, (0, 2, 3, 1)) + np.transpose(H, (0, 3, 1, 2))
    return s, np.zeros_like(s), (H,)


def _arg12(x: _Ctx):
    n = x.n
    H = x.Rcov[:n, :n, :n, :n]
    lhs = H + np.transpose(H, (1, 0, 2, 3))
    B = _B(x.C, x.pt)  # [z, u, x, y]
    rhs = np.transpose(B, (2, 3, 0, 1))
    # the same defect written through the derivative of gamma along p_T[Z, U]
    Dg = np.einsum("mzu,mxy->xyzu", x.pt, x.Dgamma[n:, :n, :n])
    return np.stack([lhs, lhs]), np.stack([rhs, Dg]), (H,)


def _pair_exchange(x: _Ctx):
    n = x.n
    Rh = x.Rcov[:n, :n, :n, :n]
    lhs, rhs = pair_exchange_general(Rh, x.C, x.pt)
    return lhs, rhs, (Rh,)


def _pair_exchange_short(x: _Ctx):
    n = x.n
    Rh = x.Rcov[:n, :n, :n, :n]
    lhs, rhs = pair_exchange_stated(Rh, x.C, x.pt)
    return lhs, rhs, (Rh,)


def _cocurb(x: _Ctx):
    n = x.n
    fg = x.fg
    g = fg.g
    lhs = np.zeros((n, n, n, n))  # [l, k, i, j] = R(X_l, X_k, SX_i, X_j)
    rhs1 = np.zeros_like(lhs)
    rhs2 = np.zeros_like(lhs)
    terms = []
    for i, j, k in _cyc3(n):
        V = x.DXX(j, k)  # D_{X_j} X_k
        br = x.pN_bracket_Y(i, V)[:n]  # p_N [Y_i, V]
        Vh = V[:n]
        gV = jeinsum("ml,m->l", g.truncate(Vh.order), Vh)  # g(V, X_l)
        Yi_gV = gV.grad().value[:, n + i]  # Y_i (g(V, X_l)), t-independent since Y_i = d/dy^i
        CV = np.einsum("ml,m->l", x.C[i], Vh.value)
        for l in range(n):
            lhs[l, k, i, j] = x.Rcov[l, k, n + i, j]
            rhs1[l, k, i, j] = float(g.value[:, l] @ br)
            rhs2[l, k, i, j] = Yi_gV[l] - CV[l]
        terms.extend([Yi_gV, CV])
    return lhs, rhs2, (rhs1, *terms, lhs - rhs1)


def _eqlemei(x: _Ctx):
    n = x.n
    fg = x.fg
    SE = fg.euler_lift()
    lhs = np.zeros((n, x.m))
    rhs = np.zeros_like(lhs)
    for k in range(n):
        lhs[k] = fg.cov(fg.frame_field(n + k), SE).value
        rhs[k, k] = 1.0
    return lhs, rhs, ()


def _bianchi21covar(x: _Ctx):
    n = x.n
    DRc, Dg, R = x.DRcov, x.Dgamma, x.R
    h = slice(0, n)
    # indices: V=v, U=u, X=a, Y=b, Z=z (all horizontal)
    t1 = np.einsum("zvuab->vuabz", DRc[n:, h, h, h, h])  # (D_{SZ}R)(V,U,X,Y)
    t2 = np.einsum("avubz->vuabz", DRc[h, h, h, h, n:])  # (D_X R)(V,U,Y,SZ)
    t3 = np.einsum("bvuaz->vuabz", DRc[h, h, h, h, n:])  # (D_Y R)(V,U,X,SZ)
    lhs = t1 + t2 - t3
    RXYU = R[:, h, h, h]  # [d, u, a, b] = R(X_a, X_b) X_u
    s1 = np.einsum("zdv,duab->vuabz", Dg[n:, :, h], RXYU)
    br = np.zeros((n, n, n, x.m))  # [z, b, u] -> p_N[SZ, D_{X_b} X_u]
    for z, b, u in _cyc3(n):
        br[z, b, u] = x.pN_bracket_Y(z, x.DXX(b, u))
    s2 = np.einsum("adv,zbud->vuabz", Dg[h, :, h], br)
    s3 = np.einsum("bdv,zaud->vuabz", Dg[h, :, h], br)
    # the omitted R(V, U, p_T[X, Y], SZ) vanishes by the first Bott property; kept for completeness
    s4 = np.einsum("mab,vumz->vuabz", x.pt, x.Rcov[h, h, n:, n:])
    rhs = s1 - s2 + s3 + s4
    return lhs, rhs, (t1, t2, t3, s1, s2, s3)


def _bianchi22covar(x: _Ctx):
    n = x.n
    DRc, Dg, R = x.DRcov, x.Dgamma, x.R
    h = slice(0, n)
    a = np.einsum("avubc->vuabc", DRc[h, h, h, h, h])  # (D_{X_a} R)(V, U, X_b, X_c)
    lhs = a + np.transpose(a, (0, 1, 3, 4, 2)) + np.transpose(a, (0, 1, 4, 2, 3))
    r = np.einsum("mab,vumc->vuabc", x.pt, x.Rcov[h, h, n:, h])  # R(V,U,p_T[X_a,X_b],X_c)
    q = np.einsum("adv,dubc->vuabc", Dg[h, :, h], R[:, h, h, h])  # (D_{X_a}gamma)(R(X_b,X_c)U, V)
    cyc = lambda t: t + np.transpose(t, (0, 1, 3, 4, 2)) + np.transpose(t, (0, 1, 4, 2, 3))
    rhs = cyc(r) + cyc(q)
    return lhs, rhs, (a, r, q)


def _reconstruction(x: _Ctx):
    lhs, rhs, rhs_b, terms = _reconstruction_parts(x)
    return lhs, rhs, (*terms, rhs_b)


def _reconstruction_parts(x: _Ctx):
    n, m = x.n, x.m
    fg = x.fg
    SEj = fg.euler_lift()
    SE = SEj.value
    R, DR = x.R, x.DR
    GD = x.GD.value
    # r(X_a, X_b) as jet fields
    Rj = fg.R
    lhs = np.zeros((n, n, n, m))  # [a, b, z]
    rhs = np.zeros_like(lhs)
    rhs_b = np.zeros_like(lhs)
    rvals = np.einsum("dgab,g->abd", R, SE)  # r(e_a, e_b)
    terms = []
    for a, b in itertools.product(range(n), repeat=2):
        r_ab = jeinsum("dg,g->d", Rj[:, :, a, b], SEj.truncate(Rj.order))
        for z in range(n):
            Ys = fg.frame_field(n + z, Rj.order)
            t1 = fg.cov(Ys, r_ab).value
            DX = GD[:, n + z, a]  # D_{SZ} X_a
            DY = GD[:, n + z, b]
            t2 = np.einsum("e,ed->d", DX, rvals[:, b, :])
            t3 = np.einsum("e,ed->d", DY, rvals[a, :, :])
            t4 = np.einsum("dg,g->d", DR[n + z, :, :, a, b], SE)
            # the last term rewritten with the second Bianchi identity
            alt = (
                np.einsum("m,dgm->dg", x.pt[:, a, b], R[:, :, n:, n + z])
                - DR[a, :, :, b, n + z]
                + DR[b, :, :, a, n + z]
            )
            t4b = alt @ SE
            lhs[a, b, z] = R[:, z, a, b]
            rhs[a, b, z] = t1 - t2 - t3 - t4
            rhs_b[a, b, z] = t1 - t2 - t3 - t4b
            terms.extend([t1, t2, t3, t4, t4b])
    return lhs, rhs, rhs_b, terms


@dataclass(frozen=True)
class _Identity:
    name: str
    anchor: str
    fn: Callable
    needs_foliated: bool = False
    bundle_type: bool = False
    optional: bool = False


IDENTITIES: tuple[_Identity, ...] = (
    _Identity("Bott1", "Bott property: R(SX,SY)Z = 0", _bott1),
    _Identity("Bott2", "Bott property: R(SX,Y)Z = p_N[SX, D_Y Z]", _bott2, needs_foliated=True),
    _Identity("Bott3", "Bott property: R(X,Y)SZ = -D_SZ(p_T[X,Y])", _bott3),
    _Identity("Bott4", "Bott property: R(SX,Y)Z = R(SX,Z)Y", _bott4),
    _Identity("Bianchi0", "first Bianchi: cyclic R(SX,SY)SZ = 0", _bianchi0),
    _Identity("Bianchi1", "first Bianchi: R(SX,Z)SY = R(SY,Z)SX", _bianchi1),
    _Identity("Bianchi3", "first Bianchi: cyclic R(X,Y)Z = 0", _bianchi3),
    _Identity("Bianchi23", "second Bianchi: cyclic (D_SX R)(SY,SZ) = 0", _bianchi23),
    _Identity("Bianchi21", "second Bianchi: mixed vertical pair", _bianchi21),
    _Identity("Bianchi22", "second Bianchi: mixed horizontal pair", _bianchi22),
    _Identity("Bianchi20", "second Bianchi: horizontal triple", _bianchi20),
    _Identity("Bianchicovar1", "covariant first Bianchi on normal arguments", _bianchicovar1),
    _Identity("arg1-2", "symmetry defect in the first pair of covariant slots", _arg12),
    _Identity("pair-exchange", "pair-exchange defect of the covariant curvature", _pair_exchange),
    _Identity("pair-exchange-short", "two-term pair-exchange defect (opt-in, not general)", _pair_exchange_short, optional=True),
    _Identity("cocurb", "covariant curvature with one vertical slot", _cocurb, needs_foliated=True),
    _Identity("eqlemei", "D_SZ(S'E) = Z", _eqlemei, bundle_type=True),
    _Identity("Bianchi21covar", "covariant second Bianchi, mixed form", _bianchi21covar),
    _Identity("Bianchi22covar", "covariant second Bianchi, horizontal form", _bianchi22covar),
    _Identity("reconstruction", "curvature from its action on S'E", _reconstruction, bundle_type=True),
)

IDENTITY_NAMES = tuple(i.name for i in IDENTITIES)
DEFAULT_IDENTITIES = tuple(i.name for i in IDENTITIES if not i.optional)


def identity_suite(fg: FrameGeometry, which: Sequence[str] | None = None, tol: float = 1e-8) -> list[IdentityReport]:
    """Evaluate the selected identities at the point carried by ``fg``.

    Precondition failures are reported per identity.  Identities whose stated
    quantifier asks for foliated arguments are evaluated all the same (the
    frame fields ``X_i`` are always projectable) and carry a note when ``t``
    depends on the fiber coordinates.
    """
    if fg.r_order < 1:
        raise PreconditionError("the identity suite needs r_order >= 1")
    wanted = DEFAULT_IDENTITIES if which is None else tuple(which)
    unknown = set(wanted) - set(IDENTITY_NAMES)
    if unknown:
        raise ValueError(f"unknown identities: {sorted(unknown)}")
    ctx = _Ctx(fg)
    reports = []
    for ident in IDENTITIES:
        if ident.name not in wanted:
            continue
        note = ""
        if ident.needs_foliated and not ctx.foliated_t():
            note = "t depends on y: foliated-argument quantifier checked on projectable frame fields"
        try:
            lhs, rhs, terms = ident.fn(ctx)
            res = relative_residual(lhs, rhs, *terms)
            reports.append(IdentityReport(ident.name, ident.anchor, res, tol, res <= tol, note))
        except (PreconditionError, DegenerateMetricError) as exc:
            reports.append(IdentityReport(ident.name, ident.anchor, None, tol, False, f"precondition: {exc}"))
    return reports


# ---------------------------------------------------------------------------
# flag and U-sectional curvature
# ---------------------------------------------------------------------------

_DEGENERATE_REL = 1e-9


def flag_curvature_from_arrays(Rh: np.ndarray, g: np.ndarray, e: np.ndarray, X: np.ndarray) -> float:
    """k(X) from horizontal covariant curvature ``Rh``, metric ``g`` and S'E components ``e``."""
    X = np.asarray(X, dtype=float)
    e = np.asarray(e, dtype=float)
    num = float(np.einsum("abcd,a,b,c,d->", Rh, X, e, X, e))
    gee, gxx, gex = e @ g @ e, X @ g @ X, e @ g @ X
    den = gee * gxx - gex**2
    scale = float(np.max(np.abs(g))) ** 2 * float(e @ e) * float(X @ X)
    if not np.isfinite(den) or abs(den) <= _DEGENERATE_REL * max(scale, 1e-300):
        raise DegenerateDenominatorError(f"flag denominator {den:.3e} is degenerate: flag curvature undefined (infinite)")
    return num / den


def u_sectional_from_arrays(Rh: np.ndarray, g: np.ndarray, e: np.ndarray, U, X, Y) -> float:
    U, X, Y = (np.asarray(v, dtype=float) for v in (U, X, Y))
    e = np.asarray(e, dtype=float)
    num = float(np.einsum("abcd,a,b,c,d->", Rh, U, e, X, Y))
    den = (e @ g @ X) * (U @ g @ Y) - (e @ g @ Y) * (U @ g @ X)
    scale = float(np.max(np.abs(g))) ** 2 * np.sqrt(float(e @ e) * float(X @ X) * float(U @ U) * float(Y @ Y))
    if not np.isfinite(den) or abs(den) <= _DEGENERATE_REL * max(scale, 1e-300):
        raise DegenerateDenominatorError(f"U-sectional denominator {den:.3e} is degenerate")
    return num / den


def flag_curvature(fg: FrameGeometry, X: Sequence[float]) -> float:
    """Flag curvature for X = X^i X_i on a bundle-type chart (S'E = y^i X_i)."""
    n = fg.n
    Rh = covariant_curvature(fg)[:n, :n, :n, :n]
    return flag_curvature_from_arrays(Rh, np.asarray(fg.g.value), fg.coords[n:], X)


def u_sectional(fg: FrameGeometry, U, X, Y) -> float:
    n = fg.n
    Rh = covariant_curvature(fg)[:n, :n, :n, :n]
    return u_sectional_from_arrays(Rh, np.asarray(fg.g.value), fg.coords[n:], U, X, Y)


# ---------------------------------------------------------------------------
# reconstruction, oracle, homogeneity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReconstructionResult:
    residual: float
    residual_bianchi: float


def curvature_reconstruction_residual(fg: FrameGeometry, X=None, Y=None, Z=None) -> ReconstructionResult:
    """Residual of R(X,Y)Z against its expression through r = R(.,.)S'E.

    With no arguments every horizontal frame triple is checked; otherwise the
    three horizontal component vectors are contracted into the frame result
    (the identity is tensorial in X, Y, Z).
    """
    ctx = _Ctx(fg)
    lhs, rhs, rhs_b, terms = _reconstruction_parts(ctx)
    if X is not None:
        X, Y, Z = (np.asarray(v, dtype=float) for v in (X, Y, Z))
        contract = lambda t: np.einsum("abzd,a,b,z->d", t, X, Y, Z)
        lhs, rhs, rhs_b = contract(lhs), contract(rhs), contract(rhs_b)
    return ReconstructionResult(relative_residual(lhs, rhs, *terms), relative_residual(lhs, rhs_b, *terms))


def _check_step(step: float) -> None:
    if not (1e-9 <= step <= 0.1) or not np.isfinite(step):
        raise ValueError(f"finite-difference step {step!r} outside the guarded range [1e-9, 0.1]")


def finite_difference_oracle(
    factory: Callable[[np.ndarray], FrameGeometry],
    coords: Sequence[float],
    step: float = 1e-5,
    box: np.ndarray | None = None,
) -> np.ndarray:
    """R_D from central differences of connection coefficients.

    ``factory(coords)`` must return a value-grade geometry (``r_order=-1``) at
    the given point.  ``box`` (shape (2n, 2)) enforces that the stencil stays
    inside the chart by at least twice the step.
    """
    _check_step(step)
    p = np.asarray(coords, dtype=float)
    if box is not None:
        box = np.asarray(box, dtype=float)
        if np.any(p - box[:, 0] < 2 * step) or np.any(box[:, 1] - p < 2 * step):
            raise ValueError("point is not interior to the sample box by twice the step")
    base = factory(p)
    m = p.shape[0]
    Gam = np.asarray(base.gamma_D.value)
    c = np.asarray(base.c.value)
    dG = np.zeros(Gam.shape + (m,))
    for a in range(m):
        e = np.zeros(m)
        e[a] = step
        dG[..., a] = (np.asarray(factory(p + e).gamma_D.value) - np.asarray(factory(p - e).gamma_D.value)) / (2 * step)
    E = np.asarray(base.E.value)
    eG = np.einsum("dbgk,ak->adbg", dG, E)  # e_a Gamma^d_{bg}
    t1 = np.transpose(eG, (1, 3, 0, 2))
    quad = np.einsum("dae,ebg->dgab", Gam, Gam)
    brk = np.einsum("eab,deg->dgab", c, Gam)
    return t1 - np.transpose(t1, (0, 1, 3, 2)) + quad - np.transpose(quad, (0, 1, 3, 2)) - brk


def homogeneity_check(g: Jet, coords: Sequence[float]) -> float:
    """max_{j,k} |y^i C_ijk| (zero for metrics homogeneous of degree 0 in y)."""
    coords = np.asarray(coords, dtype=float)
    n = g.shape[0]
    C = cartan_from_metric_jet(g, n)
    return float(np.max(np.abs(np.einsum("i,ijk->jk", coords[n:], C))))
