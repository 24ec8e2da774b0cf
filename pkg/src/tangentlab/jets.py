"""Truncated multivariate Taylor jets.

A :class:`Jet` holds the Taylor coefficients of one or more smooth functions of
``m`` variables at a point, truncated at a fixed total order.  Coefficients are
stored in Taylor normal form (partial derivative divided by the multi-index
factorial), so multiplication is a plain truncated convolution.

Jets may be array valued: ``coeffs`` has shape ``(*shape, N)`` where ``N`` is the
number of monomials of total degree ``<= order``.  Monomials are graded by
degree, so truncating to a lower order is a slice of the last axis.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Sequence

import numpy as np

MAX_ORDER = 6

__all__ = [
    "MAX_ORDER",
    "Jet",
    "JetDomainError",
    "JetShapeError",
    "SingularMatrixError",
    "monomials",
    "lift_variable",
    "jet_arith",
    "jet_elementary",
    "extract_partial",
    "jeinsum",
    "stack",
    "jet_det",
    "jet_inv",
    "compose",
    "solve",
]


class JetShapeError(ValueError):
    pass


class JetDomainError(ValueError):
    """An elementary function was applied outside its smooth domain."""

    def __init__(self, fn: str, value: float):
        super().__init__(f"{fn}: argument {value!r} outside domain")
        self.fn = fn
        self.value = value


class SingularMatrixError(ValueError):
    pass


# ---------------------------------------------------------------------------
# monomial tables
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _degree_block(m: int, d: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for combo in itertools.combinations_with_replacement(range(m), d):
        e = [0] * m
        for v in combo:
            e[v] += 1
        out.append(tuple(e))
    return tuple(out)


@lru_cache(maxsize=None)
def monomials(m: int, order: int) -> tuple[tuple[int, ...], ...]:
    """Exponent tuples of all monomials of degree <= order, graded by degree."""
    if order < 0 or order > MAX_ORDER:
        raise JetShapeError(f"jet order {order} outside [0, {MAX_ORDER}]")
    out: list[tuple[int, ...]] = []
    for d in range(order + 1):
        out.extend(_degree_block(m, d))
    return tuple(out)


@lru_cache(maxsize=None)
def _size(m: int, order: int) -> int:
    return math.comb(m + order, order)


class _Tables:
    def __init__(self, m: int, order: int):
        self.m = m
        self.order = order
        self.exps = monomials(m, order)
        self.index = {e: k for k, e in enumerate(self.exps)}
        self.size = len(self.exps)
        self.factorial = np.array(
            [math.prod(math.factorial(v) for v in e) for e in self.exps], dtype=float
        )
        I, J, K = [], [], []
        for k, e in enumerate(self.exps):
            for sub in itertools.product(*(range(v + 1) for v in e)):
                rest = tuple(a - b for a, b in zip(e, sub))
                I.append(self.index[sub])
                J.append(self.index[rest])
                K.append(k)
        # K is produced in sorted order by construction
        self.I = np.array(I, dtype=np.intp)
        self.J = np.array(J, dtype=np.intp)
        K = np.array(K, dtype=np.intp)
        self.starts = np.flatnonzero(np.r_[True, K[1:] != K[:-1]])
        self.deriv_src: list[np.ndarray] = []
        self.deriv_mult: list[np.ndarray] = []
        if order > 0:
            lower = monomials(m, order - 1)
            for v in range(m):
                src, mult = [], []
                for e in lower:
                    up = list(e)
                    up[v] += 1
                    src.append(self.index[tuple(up)])
                    mult.append(e[v] + 1)
                self.deriv_src.append(np.array(src, dtype=np.intp))
                self.deriv_mult.append(np.array(mult, dtype=float))

    def convolve(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        prod = a[..., self.I] * b[..., self.J]
        return np.add.reduceat(prod, self.starts, axis=-1)


@lru_cache(maxsize=None)
def _tables(m: int, order: int) -> _Tables:
    return _Tables(m, order)


# ---------------------------------------------------------------------------
# the Jet value type
# ---------------------------------------------------------------------------


def _as_key(key) -> tuple:
    if not isinstance(key, tuple):
        key = (key,)
    if any(k is Ellipsis for k in key):
        raise IndexError("Ellipsis indexing is not supported on jets")
    return key + (slice(None),)


class Jet:
    """Truncated Taylor expansion, possibly array valued."""

    __slots__ = ("coeffs", "nvars", "order")
    __array_priority__ = 1000

    def __init__(self, coeffs, nvars: int, order: int):
        coeffs = np.asarray(coeffs, dtype=float)
        if order < 0 or order > MAX_ORDER:
            raise JetShapeError(f"jet order {order} outside [0, {MAX_ORDER}]")
        if coeffs.ndim == 0 or coeffs.shape[-1] != _size(nvars, order):
            raise JetShapeError(
                f"coefficient axis {coeffs.shape[-1:]} does not match "
                f"{_size(nvars, order)} monomials (m={nvars}, order={order})"
            )
        self.coeffs = coeffs
        self.nvars = nvars
        self.order = order

    # construction ---------------------------------------------------------

    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (_size(nvars, order),))
        c[..., 0] = value
        return cls(c, nvars, order)

    @classmethod
    def variables(cls, point: Sequence[float], order: int) -> "Jet":
        """Array jet of shape (m,) whose entries are the coordinate functions."""
        point = np.asarray(point, dtype=float)
        m = point.shape[0]
        c = np.zeros((m, _size(m, order)))
        c[:, 0] = point
        if order >= 1:
            c[np.arange(m), 1 + np.arange(m)] = 1.0
        return cls(c, m, order)

    # basic properties -----------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def value(self) -> np.ndarray:
        c = self.coeffs[..., 0]
        return c if c.ndim else float(c)

    def __len__(self) -> int:
        return self.shape[0]

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, nvars={self.nvars}, order={self.order})"

    def __getitem__(self, key) -> "Jet":
        return Jet(self.coeffs[_as_key(key)], self.nvars, self.order)

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetShapeError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.coeffs[..., : _size(self.nvars, order)], self.nvars, order)

    def transpose(self, *axes) -> "Jet":
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return Jet(np.transpose(self.coeffs, tuple(axes) + (self.ndim,)), self.nvars, self.order)

    def swapaxes(self, a: int, b: int) -> "Jet":
        a %= self.ndim
        b %= self.ndim
        return Jet(np.swapaxes(self.coeffs, a, b), self.nvars, self.order)

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Jet(self.coeffs.reshape(tuple(shape) + (self.coeffs.shape[-1],)), self.nvars, self.order)

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(self.ndim))
        elif isinstance(axis, int):
            axis = (axis % self.ndim,)
        else:
            axis = tuple(a % self.ndim for a in axis)
        return Jet(self.coeffs.sum(axis=axis), self.nvars, self.order)

    def broadcast_to(self, shape: tuple[int, ...]) -> "Jet":
        return Jet(
            np.broadcast_to(self.coeffs, tuple(shape) + self.coeffs.shape[-1:]).copy(),
            self.nvars,
            self.order,
        )

    # differentiation ------------------------------------------------------

    def deriv(self, var: int) -> "Jet":
        """Partial derivative w.r.t. variable ``var``; the order drops by one."""
        if not 0 <= var < self.nvars:
            raise IndexError(f"variable index {var} out of range for m={self.nvars}")
        if self.order == 0:
            raise JetShapeError("cannot differentiate an order-0 jet")
        t = _tables(self.nvars, self.order)
        c = self.coeffs[..., t.deriv_src[var]] * t.deriv_mult[var]
        return Jet(c, self.nvars, self.order - 1)

    def grad(self, variables: Sequence[int] | None = None) -> "Jet":
        """Stack of partial derivatives along a new trailing axis."""
        if variables is None:
            variables = range(self.nvars)
        parts = [self.deriv(v).coeffs for v in variables]
        return Jet(np.stack(parts, axis=-2), self.nvars, self.order - 1)

    def partial(self, exponents: Sequence[int]) -> np.ndarray | float:
        return extract_partial(self, exponents)

    # arithmetic -----------------------------------------------------------

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise JetShapeError(f"jets in {self.nvars} and {other.nvars} variables")
            return other
        return Jet.constant(other, self.nvars, self.order)

    def _pair(self, other) -> tuple[np.ndarray, np.ndarray, int]:
        other = self._coerce(other)
        o = min(self.order, other.order)
        return self.truncate(o).coeffs, other.truncate(o).coeffs, o

    def __add__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            c = self.coeffs.copy() if np.ndim(other) == 0 else np.broadcast_to(
                self.coeffs, np.broadcast_shapes(self.shape, np.shape(other)) + self.coeffs.shape[-1:]
            ).copy()
            c[..., 0] += other
            return Jet(c, self.nvars, self.order)
        a, b, o = self._pair(other)
        return Jet(a + b, self.nvars, o)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs, self.nvars, self.order)

    def __pos__(self) -> "Jet":
        return self

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self.coeffs * other[..., None], self.nvars, self.order)
        a, b, o = self._pair(other)
        return Jet(_tables(self.nvars, o).convolve(a, b), self.nvars, o)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if np.any(other == 0):
                raise ZeroDivisionError("jet divided by zero constant")
            return Jet(self.coeffs / other[..., None], self.nvars, self.order)
        return self * _compose(other, "reciprocal", None)

    def __rtruediv__(self, other) -> "Jet":
        return _compose(self, "reciprocal", None) * other

    def __pow__(self, exponent) -> "Jet":
        if isinstance(exponent, Jet):
            return jet_elementary("exp", exponent * jet_elementary("ln", self))
        exponent = float(exponent)
        if exponent.is_integer():
            return _int_power(self, int(exponent))
        return jet_elementary("pow_real", self, exponent)


def _int_power(a: Jet, k: int) -> Jet:
    if k < 0:
        return _compose(_int_power(a, -k), "reciprocal", None)
    result = Jet.constant(np.ones(a.shape), a.nvars, a.order)
    base = a
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


# ---------------------------------------------------------------------------
# elementary functions by univariate Taylor composition
# ---------------------------------------------------------------------------


def _falling(p: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= p - i
    return out


@lru_cache(maxsize=None)
def _tan_polys(order: int) -> tuple[np.poly1d, ...]:
    polys = [np.poly1d([1.0, 0.0])]
    sec2 = np.poly1d([1.0, 0.0, 1.0])
    for _ in range(order):
        polys.append(polys[-1].deriv() * sec2)
    return tuple(polys)


def _first_bad(mask: np.ndarray, v: np.ndarray) -> float:
    return float(np.asarray(v)[mask].flat[0])


def _derivatives(fn: str, v: np.ndarray, order: int, exponent: float | None) -> list[np.ndarray]:
    """f, f', ..., f^(order) evaluated at v."""
    if fn == "exp":
        e = np.exp(v)
        return [e] * (order + 1)
    if fn == "ln":
        bad = ~(v > 0)
        if np.any(bad):
            raise JetDomainError("ln", _first_bad(bad, v))
        out = [np.log(v)]
        for k in range(1, order + 1):
            out.append((-1) ** (k - 1) * math.factorial(k - 1) * v ** (-k))
        return out
    if fn in ("sqrt", "pow_real"):
        p = 0.5 if fn == "sqrt" else float(exponent)
        bad = ~(v > 0)
        if np.any(bad):
            raise JetDomainError(fn, _first_bad(bad, v))
        return [_falling(p, k) * v ** (p - k) for k in range(order + 1)]
    if fn == "reciprocal":
        bad = v == 0
        if np.any(bad):
            raise JetDomainError("division", 0.0)
        return [(-1) ** k * math.factorial(k) * v ** (-k - 1) for k in range(order + 1)]
    if fn == "sin":
        s, c = np.sin(v), np.cos(v)
        cyc = [s, c, -s, -c]
        return [cyc[k % 4] for k in range(order + 1)]
    if fn == "cos":
        s, c = np.sin(v), np.cos(v)
        cyc = [c, -s, -c, s]
        return [cyc[k % 4] for k in range(order + 1)]
    if fn == "tan":
        bad = np.abs(np.cos(v)) < 1e-15
        if np.any(bad):
            raise JetDomainError("tan", _first_bad(bad, v))
        t = np.tan(v)
        return [p(t) for p in _tan_polys(order)]
    raise ValueError(f"unknown elementary function {fn!r}")


def _compose(a: Jet, fn: str, exponent: float | None) -> Jet:
    v = np.asarray(a.coeffs[..., 0])
    ds = _derivatives(fn, v, a.order, exponent)
    h = Jet(a.coeffs.copy(), a.nvars, a.order)
    h.coeffs[..., 0] = 0.0
    # Horner in the nilpotent part h
    result = Jet.constant(ds[a.order] / math.factorial(a.order), a.nvars, a.order)
    for k in range(a.order - 1, -1, -1):
        result = result * h + ds[k] / math.factorial(k)
    return result


ELEMENTARY = ("ln", "exp", "sqrt", "sin", "cos", "tan", "pow_real")


def jet_elementary(fn: str, a: Jet, exponent: float | None = None) -> Jet:
    """Compose ``fn`` with ``a``; ``pow_real`` needs ``exponent``."""
    if fn not in ELEMENTARY:
        raise ValueError(f"unknown elementary function {fn!r}")
    if fn == "pow_real" and exponent is None:
        raise ValueError("pow_real needs an exponent")
    return _compose(a, fn, exponent)


def jet_arith(op: str, a: Jet, b: Jet) -> Jet:
    if not isinstance(a, Jet) or not isinstance(b, Jet):
        raise TypeError("jet_arith expects two jets")
    if a.nvars != b.nvars or a.order != b.order:
        raise JetShapeError(
            f"mismatched jets: (m={a.nvars}, o={a.order}) vs (m={b.nvars}, o={b.order})"
        )
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown jet operation {op!r}")


def lift_variable(index: int, point: Sequence[float], order: int) -> Jet:
    point = np.asarray(point, dtype=float)
    if not 0 <= index < point.shape[0]:
        raise IndexError(f"variable index {index} out of range for m={point.shape[0]}")
    return Jet.variables(point, order)[index]


def extract_partial(a: Jet, exponents: Sequence[int]):
    """Mixed partial derivative with the given exponents (coefficient x multi-factorial)."""
    e = tuple(int(v) for v in exponents)
    if len(e) != a.nvars or any(v < 0 for v in e):
        raise JetShapeError(f"multi-index {e} does not fit m={a.nvars}")
    if sum(e) > a.order:
        raise JetShapeError(f"multi-index order {sum(e)} exceeds jet order {a.order}")
    t = _tables(a.nvars, a.order)
    k = t.index[e]
    out = a.coeffs[..., k] * t.factorial[k]
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# array helpers
# ---------------------------------------------------------------------------


def stack(items: Sequence, axis: int = 0) -> Jet:
    jets = [x for x in items if isinstance(x, Jet)]
    if not jets:
        raise TypeError("stack needs at least one jet")
    m = jets[0].nvars
    o = min(j.order for j in jets)
    coeffs = []
    for x in items:
        j = x if isinstance(x, Jet) else Jet.constant(x, m, o)
        coeffs.append(j.truncate(o).coeffs)
    nd = coeffs[0].ndim - 1
    return Jet(np.stack(coeffs, axis=axis % (nd + 1)), m, o)


def jeinsum(subscripts: str, a, b):
    """Two-operand einsum over jet (or constant array) operands."""
    if "Z" in subscripts:
        raise ValueError("subscript letter 'Z' is reserved for the monomial axis")
    ins, out = subscripts.replace(" ", "").split("->")
    sa, sb = ins.split(",")
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    if not ja and not jb:
        return np.einsum(subscripts, a, b)
    if ja and jb:
        if a.nvars != b.nvars:
            raise JetShapeError("jets in different numbers of variables")
        o = min(a.order, b.order)
        t = _tables(a.nvars, o)
        A = a.truncate(o).coeffs[..., t.I]
        B = b.truncate(o).coeffs[..., t.J]
        prod = np.einsum(f"{sa}Z,{sb}Z->{out}Z", A, B)
        return Jet(np.add.reduceat(prod, t.starts, axis=-1), a.nvars, o)
    if ja:
        return Jet(np.einsum(f"{sa}Z,{sb}->{out}Z", a.coeffs, np.asarray(b, float)), a.nvars, a.order)
    return Jet(np.einsum(f"{sa},{sb}Z->{out}Z", np.asarray(a, float), b.coeffs), b.nvars, b.order)


def compose(f: Jet, inner: Jet) -> Jet:
    """Taylor composition ``f(inner)``.

    ``f`` is a jet in k variables expanded at ``inner.value`` and ``inner`` is a
    jet of shape (k,) in m variables.  The result is a jet in m variables whose
    order is the smaller of the two orders.
    """
    if inner.ndim != 1 or inner.shape[0] != f.nvars:
        raise JetShapeError(f"inner jet shape {inner.shape} does not feed {f.nvars} variables")
    o = min(f.order, inner.order)
    f = f.truncate(o)
    inner = inner.truncate(o)
    delta = inner - inner.value
    powers = []
    for v in range(f.nvars):
        seq = [Jet.constant(1.0, inner.nvars, o)]
        for _ in range(o):
            seq.append(seq[-1] * delta[v])
        powers.append(seq)
    out = Jet.constant(np.zeros(f.shape), inner.nvars, o)
    for k, e in enumerate(monomials(f.nvars, o)):
        term = None
        for v, p in enumerate(e):
            if p:
                term = powers[v][p] if term is None else term * powers[v][p]
        if term is None:
            out = out + f.coeffs[..., k]
        else:
            out = out + Jet(f.coeffs[..., k, None] * term.coeffs, inner.nvars, o)
    return out


def _pivot_solve(A: np.ndarray, B: np.ndarray, rel: float = 1e-12) -> np.ndarray:
    A = np.array(A, dtype=float)
    B = np.array(B, dtype=float)
    vec = B.ndim == 1
    if vec:
        B = B[:, None]
    n = A.shape[0]
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0.0:
        raise SingularMatrixError("zero matrix")
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if abs(A[p, k]) <= rel * scale:
            raise SingularMatrixError(f"pivot {A[p, k]:.3e} below {rel:g} x max entry {scale:.3e}")
        if p != k:
            A[[k, p]] = A[[p, k]]
            B[[k, p]] = B[[p, k]]
        f = A[k + 1 :, k] / A[k, k]
        A[k + 1 :, k:] -= np.outer(f, A[k, k:])
        B[k + 1 :] -= np.outer(f, B[k])
    X = np.zeros_like(B)
    for k in range(n - 1, -1, -1):
        X[k] = (B[k] - A[k, k + 1 :] @ X[k + 1 :]) / A[k, k]
    return X[:, 0] if vec else X


def solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Partial-pivot Gaussian elimination; singular below 1e-12 relative pivot."""
    return _pivot_solve(A, b)


def jet_inv(A: Jet) -> Jet:
    """Inverse of a square jet matrix (shape (n, n)) by nilpotent Neumann series."""
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise JetShapeError(f"jet_inv needs a square matrix, got shape {A.shape}")
    n = A.shape[0]
    B0 = _pivot_solve(A.value, np.eye(n))
    nil = A - A.value
    M = jeinsum("ij,jk->ik", -B0, nil)
    term = Jet.constant(B0, A.nvars, A.order)
    result = term
    for _ in range(A.order):
        term = jeinsum("ij,jk->ik", M, term)
        result = result + term
    return result


def jet_det(A: Jet) -> Jet:
    """Determinant of a square jet matrix by the permutation expansion."""
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise JetShapeError(f"jet_det needs a square matrix, got shape {A.shape}")
    n = A.shape[0]
    total = None
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = A[0, perm[0]]
        for i in range(1, n):
            term = term * A[i, perm[i]]
        term = term if inversions % 2 == 0 else -term
        total = term if total is None else total + term
    return total
