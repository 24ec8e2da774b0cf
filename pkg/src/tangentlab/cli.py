"""Command-line interface: validate specs, run check suites, query tensors.

Exit codes are the same for every command: 0 when all checks pass, 2 when a
check fails, 1 for usage, I/O, parse or evaluation errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

import jsonschema
import numpy as np

from . import __version__
from .catalog import CATALOG, instantiate, list_catalog
from .connection import DegenerateMetricError, FrameGeometry, PreconditionError, energy_and_hamiltonian, metric_jet
from .curvature import DegenerateDenominatorError, flag_curvature, identity_suite, ricci
from .expr import ExprError
from .geometry import transition_jet, validate_affine_transition, validate_bundle_type
from .jets import JetDomainError, SingularMatrixError
from .lagrange import (
    cartan_tensor,
    compatibility_residual,
    conformal_cartan_residual,
    conformal_checks,
    is_degenerate,
    omega_form,
    theta_global,
)
from .manifold import SCHEMA_VERSION, ManifoldSpec, SpecError, load_schema, load_spec, spec_from_dict

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
SUITES = ("lagrange", "connection", "curvature", "identities")
QUANTITIES = ("g", "C", "theta", "omega", "gamma", "frame", "D", "LC", "T", "R", "ricci", "scalar", "flag", "energy")

_EVAL_ERRORS = (ExprError, JetDomainError, SingularMatrixError, DegenerateMetricError, ZeroDivisionError, OverflowError)


class CliError(Exception):
    """Reported on stderr with exit code 1."""


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------


@dataclass
class _Acc:
    """Per-check accumulator across sample points."""

    name: str
    anchor: str
    tolerance: float
    residuals: list[float] = field(default_factory=list)
    skipped: int = 0
    failed: bool = False
    notes: list[str] = field(default_factory=list)

    def add(self, value: float | None, passed: bool | None = None, note: str = "") -> None:
        if value is None:
            self.failed = True
        else:
            value = float(value)
            self.residuals.append(value)
            ok = value <= self.tolerance if passed is None else passed
            self.failed |= not ok or not np.isfinite(value)
        if note and note not in self.notes:
            self.notes.append(note)

    def record(self) -> dict:
        rec = {
            "name": self.name,
            "anchor": self.anchor,
            "points": len(self.residuals),
            "max_residual": max(self.residuals) if self.residuals else None,
            "tolerance": self.tolerance,
            "passed": bool(self.residuals) and not self.failed,
        }
        if self.skipped:
            rec["skipped"] = self.skipped
        if self.notes:
            rec["note"] = "; ".join(self.notes)
        return rec


class _Records:
    def __init__(self, tol: float):
        self.tol = tol
        self._acc: dict[str, _Acc] = {}

    def get(self, name: str, anchor: str, tol: float | None = None) -> _Acc:
        if name not in self._acc:
            self._acc[name] = _Acc(name, anchor, self.tol if tol is None else tol)
        return self._acc[name]

    def add(self, name: str, anchor: str, value, tol: float | None = None, passed: bool | None = None, note: str = ""):
        self.get(name, anchor, tol).add(value, passed, note)

    def records(self) -> list[dict]:
        return [a.record() for a in self._acc.values()]


def make_report(command: str, spec: ManifoldSpec | None, seed: int, records: list[dict], tol: float | None = None, payload=None, warnings=None) -> dict:
    rep: dict[str, Any] = {
        "tool_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "spec_digest": spec.digest() if spec is not None else "0" * 64,
        "seed": int(seed),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "records": records,
        "passed": all(r["passed"] for r in records),
    }
    if spec is not None:
        rep["spec_name"] = spec.name
    if tol is not None:
        rep["tolerance"] = tol
    if payload is not None:
        rep["payload"] = payload
    if warnings:
        rep["warnings"] = list(warnings)
    jsonschema.validate(rep, load_schema("report"))
    return rep


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def resolve_spec(file: str) -> ManifoldSpec:
    """Load a spec file, or instantiate a catalog entry with default parameters."""
    path = Path(file)
    if path.exists():
        return load_spec(path)
    if file in CATALOG:
        return spec_from_dict(instantiate(file))
    raise CliError(f"no such file or catalog entry: {file}")


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def run_validate(spec: ManifoldSpec, tol: float = 1e-10) -> list[dict]:
    recs = _Records(tol)
    recs.add("schema", "document matches the manifold schema", 0.0)
    for t in spec.transitions:
        key = f"{t.source}->{t.target}"
        src, tgt = spec.chart(t.source), spec.chart(t.target)
        inside = sum(not src.contains(s) for s in t.overlap_samples)
        images = [transition_jet(spec, t, s, 0).value for s in t.overlap_samples]
        outside = sum(not tgt.contains(v) for v in images)
        recs.add(
            f"overlap samples {key}",
            "samples lie in the source box and map into the target box",
            float(inside + outside),
            passed=inside + outside == 0,
            note=f"{inside} outside source, {outside} images outside target" if inside + outside else "",
        )
        if spec.claims_affine:
            rep = validate_affine_transition(spec, t)
            recs.add(f"affine transition {key}", "transition is affine in the fiber coordinates", rep.residual)
        if spec.bundle_type:
            rep = validate_bundle_type(spec, t)
            recs.add(f"bundle-type transition {key}", "zero section is preserved by the transition", rep.residual)
    return recs.records()


# ---------------------------------------------------------------------------
# check suites
# ---------------------------------------------------------------------------


def sample_points(spec: ManifoldSpec, points: int, seed: int) -> list[tuple[str, np.ndarray]]:
    """Seeded samples per chart; chart k draws from ``default_rng([seed, k])``."""
    out = []
    for k, cid in enumerate(spec.charts):
        if not spec.has_metric_on(cid):
            continue
        rng = np.random.default_rng([seed, k])
        for p in spec.chart(cid).sample(points, rng):
            out.append((cid, p))
    return out


def _known_tol(spec: ManifoldSpec, tol: float) -> float:
    return spec.known_tolerance if spec.known_tolerance is not None else tol


def _suite_lagrange(spec: ManifoldSpec, pts, recs: _Records, tol: float) -> None:
    ktol = _known_tol(spec, tol)
    for cid, p in pts:
        if spec.conformal and cid in spec.conformal["tau"]:
            recs.add("conformal Cartan symmetry", "C + tau (x) g is totally symmetric", conformal_cartan_residual(spec, cid, p))
        else:
            recs.add("Cartan symmetry", "C_ijk = dg_jk/dy^i is totally symmetric", cartan_tensor(spec, cid, p).symmetry_residual)
        if spec.known_det is not None:
            det = float(np.linalg.det(np.asarray(metric_jet(spec, cid, p, 0).value)))
            ref = float(spec.evaluate(spec.known_det, cid, p, 0).value)
            recs.add("det g closed form", "det g equals the known closed form", abs(det - ref) / max(1.0, abs(ref)), tol=ktol)
        th = theta_global(spec, cid, p)
        g = th.components
        recs.add(
            "Theta nondegeneracy",
            "det of the 2n x 2n form Theta equals (det g)^2",
            abs(th.det - np.linalg.det(g) ** 2) / (1.0 + np.linalg.det(g) ** 2),
        )
        if spec.lagrangians is not None:
            recs.add("energy field is second order", "Hamiltonian field of the energy is a semispray", energy_and_hamiltonian(spec, cid, p).second_order_residual)
    for t in spec.transitions:
        key = f"{t.source}->{t.target}"
        if not (spec.has_metric_on(t.source) and spec.has_metric_on(t.target)):
            continue
        for s in t.overlap_samples:
            if spec.lagrangians is not None:
                recs.add(f"Lagrangian compatibility {key}", "local Lagrangians differ by a leafwise affine function", compatibility_residual(spec, t, s))
            else:
                res = conformal_checks(spec, t, s, use_conformal_lagrangians=False)
                recs.add(f"metric cocycle {key}", "transversal metric is invariant under the transition", max(res.residual, abs(res.factor - 1.0)))
            if spec.conformal and spec.conformal["expected_factor"] is not None:
                res = conformal_checks(spec, t, s)
                want = float(spec.evaluate(spec.conformal["expected_factor"], t.source, s, 0).value)
                recs.add(f"conformal factor {key}", "local Lagrange metrics are conformal with the expected factor", max(abs(res.factor - want), res.residual), tol=ktol)


def _suite_connection(spec: ManifoldSpec, pts, recs: _Records, tol: float) -> None:
    ktol = _known_tol(spec, tol)
    for cid, p in pts:
        fg = FrameGeometry.at(spec, cid, p, r_order=0)
        n = fg.n
        h, v = slice(0, n), slice(n, 2 * n)
        recs.add("frame pairing", "adapted coframe is dual to the adapted frame", fg.pairing_residual)
        end = fg.frame_endomorphisms()
        eye = np.eye(2 * n)
        recs.add(
            "endomorphism algebra",
            "S^2 = 0, F^2 = Id, J^2 = -Id",
            max(np.abs(end["S"] @ end["S"]).max(), np.abs(end["F"] @ end["F"] - eye).max(), np.abs(end["J"] @ end["J"] + eye).max()),
        )
        recs.add("Levi-Civita torsion", "Levi-Civita connection is torsion free", np.abs(fg.torsion("LC").value).max())
        recs.add("Levi-Civita metricity", "Levi-Civita connection preserves gamma", np.abs(fg.metricity("LC").value).max())
        G = np.asarray(fg.gamma_D.value)
        recs.add("D preserves subbundles", "normal and vertical bundles are D-parallel", max(np.abs(G[v, :, h]).max(), np.abs(G[h, :, v]).max()))
        Dg = np.asarray(fg.D_gamma.value)
        recs.add("D partial metricity", "D preserves g along the matching subbundle", max(np.abs(Dg[h, h, h]).max(), np.abs(Dg[v, v, v]).max()))
        T = np.asarray(fg.torsion("D").value)
        recs.add("D torsion formula", "T_D(X,Y) = -p_T[p_N X, p_N Y]", np.abs(T - fg.torsion_closed_form).max())
        C = cartan_tensor(spec, cid, p).C
        recs.add("Cartan tensor via D", "C(X,Y,Z) = (D_SX gamma)(Y,Z)", np.abs(Dg[v, h, h] - C).max())
        Gp = np.asarray(fg.gamma_nabla_prime.value)
        recs.add("nabla' preserves subbundles", "nabla' keeps the normal and vertical bundles", max(np.abs(Gp[v, :, h]).max(), np.abs(Gp[h, :, v]).max()))
        recs.add("nabla' metricity", "nabla' preserves gamma", np.abs(fg.metricity("nabla_prime").value).max())
        if "Gamma_D" in spec.known_zero:
            recs.add("Gamma_D vanishes", "known value: D has zero coefficients", np.abs(G).max(), tol=ktol)
        if "T_D" in spec.known_zero:
            recs.add("T_D vanishes", "known value: D is torsion free", np.abs(T).max(), tol=ktol)
        for kt in spec.known_torsion:
            a, b = kt["args"]
            recs.add(
                f"T_D({a},{b}) component {kt['component']}",
                "known value of the torsion of D",
                abs(T[kt["component"], a, b] - kt["value"]),
                tol=ktol,
            )


def _suite_curvature(spec: ManifoldSpec, pts, recs: _Records, tol: float) -> None:
    ktol = _known_tol(spec, tol)
    for cid, p in pts:
        fg = FrameGeometry.at(spec, cid, p, r_order=0)
        R = np.asarray(fg.R.value)
        recs.add("curvature antisymmetry", "R(X,Y) = -R(Y,X)", np.abs(R + R.transpose(0, 1, 3, 2)).max())
        ric = ricci(fg)
        note = "" if fg.t_is_foliated else "t depends on y: Ricci formulas evaluated on frame fields"
        recs.add("Ricci vertical block", "rho_D on vertical arguments is a vertical trace", ric.ricci1_residual, note=note)
        recs.add("Ricci mixed block", "rho_D(Y, X) through projected brackets", ric.ricci2_residual, note=note)
        recs.add("Ricci horizontal block", "rho_D on normal arguments is a normal trace", ric.ricci3_residual, note=note)
        if "C" in spec.known_zero:
            recs.add("C vanishes", "known value: the metric is foliated", np.abs(cartan_tensor(spec, cid, p).C).max(), tol=ktol)
        if "R_D" in spec.known_zero:
            recs.add("R_D vanishes", "known value: D is flat", np.abs(R).max(), tol=ktol)
        if "ricci" in spec.known_zero:
            recs.add("rho_D vanishes", "known value: zero Ricci tensor", np.abs(ric.rho).max(), tol=ktol)
        if "scalar" in spec.known_zero:
            recs.add("kappa_D vanishes", "known value: zero scalar curvature (g-trace on the normal block)", abs(ric.kappa), tol=ktol)


def _suite_identities(spec: ManifoldSpec, pts, recs: _Records, tol: float) -> None:
    for cid, p in pts:
        fg = FrameGeometry.at(spec, cid, p, r_order=1)
        for rep in identity_suite(fg, tol=tol):
            recs.get(rep.name, rep.anchor).add(rep.residual, None if rep.residual is None else rep.passed, rep.note)


_SUITE_FNS: dict[str, Callable] = {
    "lagrange": _suite_lagrange,
    "connection": _suite_connection,
    "curvature": _suite_curvature,
    "identities": _suite_identities,
}


def run_check(spec: ManifoldSpec, suite: str = "all", points: int = 25, seed: int = 0, tol: float = 1e-8) -> dict:
    """Run one suite (or all) and return a schema-valid report."""
    if suite != "all" and suite not in SUITES:
        raise CliError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)} or all")
    if points < 1:
        raise CliError("--points must be positive")
    raw = sample_points(spec, points, seed)
    if not raw:
        raise CliError("spec declares no charts with a metric or Lagrangian")
    good, skipped = [], 0
    for cid, p in raw:
        try:
            g = np.asarray(metric_jet(spec, cid, p, 0).value)
        except _EVAL_ERRORS:
            skipped += 1
            continue
        if is_degenerate(g):
            skipped += 1
        else:
            good.append((cid, p))
    if not good:
        raise CliError("every sample point has a degenerate metric")
    recs = _Records(tol)
    for name in SUITES if suite == "all" else (suite,):
        _SUITE_FNS[name](spec, good, recs, tol)
    records = recs.records()
    if skipped:
        for r in records:
            r["skipped"] = skipped
    warnings = [f"{skipped} degenerate sample point(s) skipped"] if skipped else None
    return make_report(f"check --suite {suite}", spec, seed, records, tol=tol, warnings=warnings)


# ---------------------------------------------------------------------------
# tensor queries
# ---------------------------------------------------------------------------


def _labels(n: int) -> list[str]:
    return [f"X{i + 1}" for i in range(n)] + [f"Y{i + 1}" for i in range(n)]


def _tolist(a) -> Any:
    return np.asarray(a, dtype=float).tolist()


def run_tensor(spec: ManifoldSpec, chart: str, at: Sequence[float], quantity: str, direction: Sequence[float] | None = None) -> dict:
    n = spec.n
    if quantity not in QUANTITIES:
        raise CliError(f"unknown quantity {quantity!r}; choose from {', '.join(QUANTITIES)}")
    spec.chart(chart)
    if not spec.has_metric_on(chart):
        raise CliError(f"chart {chart!r} carries no metric or Lagrangian")
    p = np.asarray(at, dtype=float)
    if p.shape != (2 * n,):
        raise CliError(f"--at needs {2 * n} coordinates for n = {n}, got {p.size}")
    warnings = []
    if not spec.chart(chart).contains(p):
        warnings.append("point lies outside the chart's sample box")
    g = np.asarray(metric_jet(spec, chart, p, 0).value)
    det = float(np.linalg.det(g))
    degenerate = is_degenerate(g)
    if degenerate:
        warnings.append("metric is degenerate at this point")
    if degenerate and quantity not in ("g", "C", "theta", "omega"):
        raise DegenerateMetricError(f"metric is degenerate (det g = {det:.3e}); quantity {quantity!r} needs g^-1")

    records: list[dict] = []
    payload: dict[str, Any] = {"quantity": quantity, "chart": chart, "at": _tolist(p)}
    frame_labels = _labels(n)

    if quantity == "g":
        payload.update(value=_tolist(g), det=det, indices=["i", "j"])
        if spec.known_det is not None:
            ref = float(spec.evaluate(spec.known_det, chart, p, 0).value)
            tol = _known_tol(spec, 1e-9)
            res = abs(det - ref) / max(1.0, abs(ref))
            payload["det_closed_form"] = ref
            records.append({"name": "det g closed form", "anchor": "det g equals the known closed form", "points": 1, "max_residual": res, "tolerance": tol, "passed": res <= tol})
    elif quantity == "C":
        cr = cartan_tensor(spec, chart, p)
        payload.update(value=_tolist(cr.C), indices=["i", "j", "k"], symmetry_residual=cr.symmetry_residual)
    elif quantity == "theta":
        th = theta_global(spec, chart, p)
        payload.update(value=_tolist(th.matrix), components=_tolist(th.components), det=th.det, nondegenerate=th.nondegenerate)
    elif quantity == "omega":
        if spec.lagrangians is None:
            raise CliError("omega needs a Lagrangian spec")
        om = omega_form(spec, chart, p)
        payload.update(value=_tolist(om.omega), det=om.det, metric_residual=om.metric_residual)
    else:
        fg = FrameGeometry.at(spec, chart, p, r_order=0)
        payload["frame_labels"] = frame_labels
        if quantity == "gamma":
            payload.update(value=_tolist(fg.gamma_coordinates), basis="coordinate")
        elif quantity == "frame":
            payload.update(E=_tolist(fg.E.value), W=_tolist(fg.W.value), pairing_residual=fg.pairing_residual)
        elif quantity in ("D", "LC"):
            which = "canonical_D" if quantity == "D" else "levi_civita"
            payload.update(value=_tolist(fg.connection(which).value), indices=["c", "a", "b"], convention="nabla_{e_a} e_b = Gamma[c, a, b] e_c")
        elif quantity == "T":
            T = np.asarray(fg.torsion("D").value)
            res = float(np.abs(T - fg.torsion_closed_form).max())
            payload.update(value=_tolist(T), indices=["c", "a", "b"])
            records.append({"name": "D torsion formula", "anchor": "T_D(X,Y) = -p_T[p_N X, p_N Y]", "points": 1, "max_residual": res, "tolerance": 1e-10, "passed": res <= 1e-10})
        elif quantity == "R":
            payload.update(value=_tolist(fg.R.value), indices=["d", "g", "a", "b"], convention="R(e_a, e_b) e_g = R[d, g, a, b] e_d")
        elif quantity in ("ricci", "scalar"):
            ric = ricci(fg)
            if quantity == "ricci":
                payload.update(value=_tolist(ric.rho), indices=["A", "B"])
            else:
                payload.update(value=ric.kappa, convention="g-trace of rho_D over the normal block")
        elif quantity == "flag":
            if direction is None:
                raise CliError("--quantity flag needs --direction with n components")
            X = np.asarray(direction, dtype=float)
            if X.shape != (n,):
                raise CliError(f"--direction needs {n} components, got {X.size}")
            try:
                payload.update(value=flag_curvature(fg, X), degenerate=False)
            except DegenerateDenominatorError as exc:
                payload.update(value=None, degenerate=True)
                warnings.append(str(exc))
        elif quantity == "energy":
            if spec.lagrangians is None:
                raise CliError("energy needs a Lagrangian spec")
            en = energy_and_hamiltonian(spec, chart, p)
            payload.update(value=en.energy, field=_tolist(en.field), second_order_residual=en.second_order_residual)
            records.append({"name": "energy field is second order", "anchor": "Hamiltonian field of the energy is a semispray", "points": 1, "max_residual": en.second_order_residual, "tolerance": 1e-10, "passed": en.second_order_residual <= 1e-10})
    return make_report(f"tensor --quantity {quantity}", spec, 0, records, payload=payload, warnings=warnings)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _default_seed() -> int:
    raw = os.environ.get("TANGENTLAB_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"TANGENTLAB_SEED must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tangentlab", description="Pointwise Lagrange geometry on tangent manifolds.")
    ap.add_argument("--version", action="version", version=f"tangentlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="schema and transition checks")
    v.add_argument("file", help="spec file, or a catalog entry name")
    v.add_argument("--json", action="store_true")

    c = sub.add_parser("check", help="run identity and tensor suites at seeded points")
    c.add_argument("file")
    c.add_argument("--suite", default="all", choices=[*SUITES, "all"])
    c.add_argument("--points", type=int, default=25)
    c.add_argument("--seed", type=int, default=None, help="default: $TANGENTLAB_SEED or 0")
    c.add_argument("--tol", type=float, default=1e-8)
    c.add_argument("--json", action="store_true")

    t = sub.add_parser("tensor", help="evaluate one quantity at a point")
    t.add_argument("file")
    t.add_argument("--chart", required=True)
    t.add_argument("--at", type=_floats, required=True, help="c1,...,c2n")
    t.add_argument("--quantity", required=True, choices=QUANTITIES)
    t.add_argument("--direction", type=_floats, default=None, help="horizontal components for --quantity flag")
    t.add_argument("--json", action="store_true")

    k = sub.add_parser("catalog", help="list or instantiate built-in manifolds")
    ks = k.add_subparsers(dest="action", required=True)
    ks.add_parser("list")
    ki = ks.add_parser("instantiate")
    ki.add_argument("name")
    ki.add_argument("--n", type=int, default=None)
    ki.add_argument("--lambda", dest="lam", type=float, default=None)
    ki.add_argument("--p", type=int, default=None)
    ki.add_argument("-o", "--output", required=True)
    return ap


def _print_report(rep: dict, as_json: bool, out) -> None:
    if as_json:
        out.write(json.dumps(rep, indent=2) + "\n")
        return
    title = rep.get("spec_name", "")
    out.write(f"{rep['command']} {title}\n")
    for w in rep.get("warnings", []):
        out.write(f"warning: {w}\n")
    for r in rep["records"]:
        mr = "n/a" if r["max_residual"] is None else f"{r['max_residual']:.3e}"
        status = "PASS" if r["passed"] else "FAIL"
        out.write(f"  {status}  {r['name']:<40} max={mr}  tol={r['tolerance']:.1e}  points={r['points']}\n")
    if "payload" in rep:
        out.write(json.dumps(rep["payload"], indent=2) + "\n")
    out.write(("PASS" if rep["passed"] else "FAIL") + "\n")


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_ERROR
    try:
        if args.command == "catalog":
            if args.action == "list":
                for e in list_catalog():
                    defaults = ", ".join(f"{k}={v}" for k, v in e["defaults"].items())
                    out.write(f"{e['name']:<24} {e['summary']}" + (f"  [{defaults}]" if defaults else "") + "\n")
                return EXIT_PASS
            params = {"n": args.n, "lambda": args.lam, "p": args.p}
            doc = instantiate(args.name, **params)
            Path(args.output).write_text(json.dumps(doc, indent=2) + "\n")
            out.write(f"wrote {args.output}\n")
            return EXIT_PASS
        spec = resolve_spec(args.file)
        if args.command == "validate":
            rep = make_report("validate", spec, 0, run_validate(spec))
        elif args.command == "check":
            seed = _default_seed() if args.seed is None else args.seed
            rep = run_check(spec, args.suite, args.points, seed, args.tol)
        else:
            rep = run_tensor(spec, args.chart, args.at, args.quantity, args.direction)
        _print_report(rep, args.json, out)
        return EXIT_PASS if rep["passed"] else EXIT_FAIL
    except (CliError, SpecError, PreconditionError, OSError, *_EVAL_ERRORS) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
