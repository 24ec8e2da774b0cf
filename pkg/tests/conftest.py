"""Shared fixtures: randomized smooth Lagrangian specs and finite-difference helpers."""

from __future__ import annotations

import numpy as np
import pytest

from tangentlab.catalog import instantiate
from tangentlab.manifold import coord_names, spec_from_dict


def fd_gradient(f, p, h=1e-5):
    """Central-difference gradient of a scalar or array function of a point."""
    p = np.asarray(p, dtype=float)
    cols = []
    for a in range(p.shape[0]):
        e = np.zeros_like(p)
        e[a] = h
        cols.append((np.asarray(f(p + e)) - np.asarray(f(p - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def random_lagrangian_text(rng: np.random.Generator, n: int) -> str:
    """A regular Lagrangian near the origin: |y|^2/2 plus small polynomial, exp and ln terms."""
    xs, ys = coord_names(n)[:n], coord_names(n)[n:]
    c = rng.uniform(-0.15, 0.15, size=8)
    i, j, k = rng.integers(0, n, size=3)
    terms = [
        "0.5*(" + " + ".join(f"{v}^2" for v in ys) + ")",
        f"{c[0]:.6f}*exp({c[1] * 5:.6f}*{xs[i]}*{ys[j]})",
        f"{c[2]:.6f}*{ys[i]}^2*{ys[j]}",
        f"{c[3]:.6f}*{xs[k]}*{ys[i]}*{ys[k]}",
        f"{c[4]:.6f}*ln(2 + {xs[j]}*{ys[k]})*{ys[i]}^2",
        f"{c[5]:.6f}*sin({xs[i]} + {ys[j]})*{ys[k]}^2",
        f"{c[6]:.6f}*({ys[j]}*{ys[k]})^2",
    ]
    return " + ".join(terms)


def random_t_rows(rng: np.random.Generator, n: int, y_dependent: bool = True) -> list[list[str]]:
    names = coord_names(n)
    rows = []
    for _ in range(n):
        row = []
        for _ in range(n):
            a, b = rng.integers(0, 2 * n if y_dependent else n, size=2)
            ca, cb = rng.uniform(-0.3, 0.3, size=2)
            row.append(f"{ca:.6f}*{names[a]}*{names[b]} + {cb:.6f}*{names[(a + 1) % (2 * n) if y_dependent else a]}")
        rows.append(row)
    return rows


def random_lagrangian_doc(seed: int, n: int = 2, normalization: str = "zero") -> dict:
    """Single-chart spec with a random Lagrangian; ``normalization`` is zero or explicit."""
    rng = np.random.default_rng(seed)
    L = random_lagrangian_text(rng, n)
    doc = {
        "schema_version": "1.0",
        "name": f"random_{seed}",
        "n": n,
        "charts": [{"id": "U", "sample_box": [[-0.4, 0.4]] * (2 * n)}],
        "transitions": [],
        "lagrangians": {"U": L},
        "normalization": {"type": "zero"},
        "flags": {"claims_affine": True, "bundle_type": True},
    }
    if normalization == "explicit":
        doc["normalization"] = {"type": "explicit", "t": {"U": random_t_rows(rng, n)}}
    return doc


@pytest.fixture(scope="session")
def catalog_specs():
    from tangentlab.catalog import CATALOG

    return {name: spec_from_dict(instantiate(name)) for name in CATALOG}


@pytest.fixture
def hopf():
    return spec_from_dict(instantiate("hopf_log", n=2, lam=0.5))


@pytest.fixture
def torus():
    return spec_from_dict(instantiate("torus_flat", n=2))
