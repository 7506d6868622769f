"""Run configuration, pipeline drivers and report serialization.

A report is a plain dict with top-level keys schemaVersion, toolVersion,
config, sections and status. JSON output uses sorted keys, fixed separators
and no timing data, so it is byte-stable for a fixed configuration.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__, catalog
from .flatness import FLATNESS_GATE, flatness_residual, point_plan
from .identities import identity_battery
from .immersion import DifferentiationConfig, Immersion, ImmersionError, load_immersion, validate_immersion
from .integration import (
    CoveringError,
    build_um_plan,
    check_phase_invariance,
    balance_curvature_term,
    balance_nabla_term,
    closed_form_volume,
    integrate,
    second_covariant_T,
)
from .pinching import PAR_TOL, PINCH_TOL, SearchPlan, VerdictConfig, min_hol, pinching_verdict
from .residuals import submanifold_suite

SCHEMA_VERSION = 1

EXIT_CODES = {"pass": 0, "fail": 1, "hypothesis-not-met": 2, "inconclusive": 3}
EXIT_CONFIG = 64
EXIT_CATALOG = 65

COMMANDS = ("verify", "identities", "catalog", "integrate")
FORMATS = ("json", "csv", "text")

BALANCE_TOL = 0.02
VOLUME_TOL = 1e-3


class ConfigError(ValueError):
    """Malformed configuration (exit 64)."""


@dataclass(frozen=True)
class RunConfig:
    command: str = "verify"
    immersion: str | None = None     # catalog id with params, or path to a JSON immersion
    seed: int = 0
    # min Hol search
    grid: int = 15
    fiber: int = 16
    refine: int = 10
    # point sampling for flatness, parallelism and pointwise identities
    density: int = 3
    directions: int = 4
    identity_samples: int = 20
    submanifold_samples: int = 20
    # UM quadrature
    integrate: bool = True
    base_density: int = 8
    fiber_samples: int = 2
    replicates: int = 6
    # differentiation
    diff_mode: str = "jet"
    fd_step: float = 1e-5
    second_order_step: float = 1e-4
    # gates
    pinch_tol: float = PINCH_TOL
    par_tol: float = PAR_TOL
    flat_gate: float = FLATNESS_GATE
    second_covariant_tol: float = 1e-3
    # identity battery
    n: int = 4
    p: int = 2
    draws: int = 100
    # output
    format: str = "text"
    out: str | None = None
    hol_csv: str | None = None
    um_csv: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        for name in ("pinch_tol", "par_tol", "flat_gate", "second_covariant_tol", "fd_step", "second_order_step"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        for name in ("grid", "fiber", "density", "directions", "identity_samples", "submanifold_samples",
                     "base_density", "fiber_samples", "replicates", "n", "p", "draws"):
            v = getattr(self, name)
            if not (isinstance(v, int) and not isinstance(v, bool) and v >= 1):
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.grid < 2 or self.replicates < 2:
            raise ConfigError("grid and replicates must be at least 2")
        if not 0 < self.p < self.n:
            raise ConfigError(f"identity battery needs 0 < p < n, got p={self.p}, n={self.n}")
        if self.n > 12:
            raise ConfigError("identity battery supports n <= 12")

    def diff(self) -> DifferentiationConfig:
        try:
            return DifferentiationConfig(self.diff_mode, self.fd_step, self.second_order_step)
        except (ValueError, ImmersionError) as exc:
            raise ConfigError(str(exc)) from None

    def verdict_config(self) -> VerdictConfig:
        return VerdictConfig(
            search=SearchPlan(self.grid, self.fiber, self.refine, seed=self.seed),
            density=self.density, directions=self.directions, identity_samples=self.identity_samples,
            pinch_tol=self.pinch_tol, par_tol=self.par_tol, flat_gate=self.flat_gate,
            second_covariant_tol=self.second_covariant_tol, seed=self.seed, diff=self.diff(),
        )

    def echo(self) -> dict:
        # output destinations do not change the result, keep them out of the echo
        d = asdict(self)
        for k in ("out", "hol_csv", "um_csv", "format"):
            d.pop(k)
        return d


CONFIG_KEYS = frozenset(f.name for f in fields(RunConfig))


def config_from_mapping(data: dict, base: RunConfig | None = None) -> RunConfig:
    """Overlay ``data`` on ``base``; unknown keys are an error."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    base = base if base is not None else RunConfig()
    try:
        return replace(base, **data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | os.PathLike, base: RunConfig | None = None) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_mapping(data, base)


def resolve_immersion(ident: str | None) -> Immersion:
    """Catalog id or path to a user JSON immersion.

    Raises CatalogMiss for unknown catalog members and ConfigError for
    unreadable or malformed user files.
    """
    if not ident:
        raise ConfigError("an immersion is required (--immersion ID[:params] or path to JSON)")
    if ident.endswith(".json") or os.path.sep in ident:
        try:
            return load_immersion(ident)
        except (OSError, json.JSONDecodeError, ImmersionError, ValueError) as exc:
            raise ConfigError(f"cannot load immersion {ident}: {exc}") from None
    try:
        return catalog.get(ident)
    except (ImmersionError, TypeError) as exc:
        raise catalog.CatalogMiss(f"{ident}: {exc}") from None


# --------------------------------------------------------------------------
# JSON handling
# --------------------------------------------------------------------------

def jsonable(obj):
    """Plain-JSON copy: numpy scalars to Python, complex to [re, im], non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(float(obj.real)), jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2, separators=(",", ": "), allow_nan=False) + "\n"


def make_report(config: RunConfig, sections: dict, status: str) -> dict:
    return {
        "schemaVersion": SCHEMA_VERSION,
        "toolVersion": __version__,
        "config": config.echo(),
        "sections": sections,
        "status": status,
    }


# --------------------------------------------------------------------------
# pipeline stages
# --------------------------------------------------------------------------

def validation_section(f: Immersion) -> dict:
    try:
        v = validate_immersion(f)
    except ImmersionError as exc:
        return {"passed": False, "error": str(exc)}
    return {
        "passed": bool(v["min_metric_eigenvalue"] > 0),
        "holomorphyResidual": v["holomorphy_residual"],
        "minMetricEigenvalue": v["min_metric_eigenvalue"],
        "points": v["points"],
    }


def integration_section(f: Immersion, config: RunConfig, flat: bool) -> tuple[dict, str, object]:
    """Vanishing integral, balance terms and volume; returns (section, status, plan)."""
    diff = config.diff()
    try:
        plan = build_um_plan(f, config.base_density, config.fiber_samples, config.seed, config.replicates, diff)
    except CoveringError as exc:
        return {"skipped": f"chart atlas does not cover the image: {exc}"}, "inconclusive", None
    evals = {"secondCovariantT": second_covariant_T}
    if flat:
        evals.update(curvatureTerm=balance_curvature_term, nablaSigmaTerm=balance_nabla_term)
    phase = max(check_phase_invariance(f, fn, plan, diff) for fn in evals.values())
    res = integrate(f, evals, plan, diff)
    vol, vol_se = plan.volume()
    sec = {
        "samples": len(plan.samples),
        "replicates": plan.replicates,
        "phaseInvarianceResidual": phase,
        "integrals": {k: v.to_dict() for k, v in res.items()},
        "volume": {"estimate": vol, "standardError": vol_se},
    }
    status = "pass"
    if not res["secondCovariantT"].consistent_with_zero():
        status = "fail"
    closed = closed_form_volume(f)
    if closed is not None:
        # fibers carry unit mass, so the bundle volume equals the volume of M
        rel = abs(vol - closed) / closed
        sec["volume"].update(closedForm=closed, relativeError=rel)
    if flat:
        c, n = res["curvatureTerm"], res["nablaSigmaTerm"]
        big = max(abs(c.estimate), abs(n.estimate))
        if big < 1e-6:
            sec["balance"] = {"trivial": True, "residual": 0.0}
        else:
            resid = float(abs(c.estimate + n.estimate) / big)
            resolved = all(t.standard_error * 10 < abs(t.estimate) for t in (c, n))
            sec["balance"] = {"trivial": False, "residual": resid, "resolved": resolved}
            if not resolved:
                status = "inconclusive" if status == "pass" else status
            elif resid >= BALANCE_TOL:
                status = "fail"
    sec["passed"] = status == "pass"
    return sec, status, plan


def hol_samples_csv(f: Immersion, config: RunConfig) -> str:
    """Columns: chart, z (re/im per coordinate), fiber coefficients (re/im), hol."""
    res = min_hol(f, SearchPlan(config.grid, config.fiber, 0, seed=config.seed), config.diff(), keep_samples=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["chart"] + [f"z{a}_{c}" for a in range(f.m) for c in ("re", "im")]
    if f.m > 1:
        head += [f"c{a}_{c}" for a in range(f.m) for c in ("re", "im")]
    w.writerow(head + ["hol"])
    for chart, z, c, h in res.samples:
        row = [chart] + [repr(float(x)) for zz in z for x in (zz.real, zz.imag)]
        if f.m > 1:
            row += [repr(float(x)) for cc in c for x in (np.real(cc), np.imag(cc))]
        w.writerow(row + [repr(float(h))])
    return buf.getvalue()


def um_samples_csv(f: Immersion, plan) -> str:
    """Columns: replicate, chart, weight, z (re/im), u (re/im)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replicate", "chart", "weight"]
               + [f"z{a}_{c}" for a in range(f.m) for c in ("re", "im")]
               + [f"u{a}_{c}" for a in range(f.m) for c in ("re", "im")])
    for s in plan.samples:
        w.writerow([s.replicate, s.chart, repr(s.weight)]
                   + [repr(float(x)) for zz in s.z for x in (zz.real, zz.imag)]
                   + [repr(float(x)) for uu in s.u for x in (uu.real, uu.imag)])
    return buf.getvalue()


@dataclass
class RunResult:
    report: dict
    summary: list = field(default_factory=list)   # text lines
    tables: dict = field(default_factory=dict)    # name -> csv text

    @property
    def status(self) -> str:
        return self.report["status"]

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]


def run_verify(config: RunConfig) -> RunResult:
    f = resolve_immersion(config.immersion)
    sections = {"immersion": catalog.describe(f), "validation": validation_section(f)}
    verdict = pinching_verdict(f, config.verdict_config())
    sections["flatness"] = verdict.flatness.to_dict()
    sections["pinching"] = verdict.to_dict()
    flat = verdict.flatness.flat
    sub = submanifold_suite(f, config.submanifold_samples, config.seed, flat=flat, diff=config.diff())
    sections["submanifold"] = sub.to_dict()
    lines = [verdict.headline()]
    plan = None
    status = verdict.status
    if status != "hypothesis-not-met":
        if not sections["validation"]["passed"] or not sub.passed:
            status = "fail"
        if config.integrate:
            sec, istatus, plan = integration_section(f, config, flat)
            sections["integration"] = sec
            if status == "pass" and istatus != "pass":
                status = istatus
    if status == "pass" and verdict.min_hol is not None and not verdict.min_hol.converged:
        status = "inconclusive"
    lines += _verify_tables(f, sections)
    tables = {}
    if verdict.min_hol is not None:
        tables["hol"] = hol_samples_csv(f, config) if (config.format == "csv" or config.hol_csv) else None
    if plan is not None and config.um_csv:
        tables["um"] = um_samples_csv(f, plan)
    lines.append(f"status: {status}")
    return RunResult(make_report(config, sections, status), lines, {k: v for k, v in tables.items() if v})


def _fmt(x) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _integration_lines(ig: dict) -> list:
    out = ["", "unit sphere bundle integrals"]
    if "skipped" in ig:
        return out + [f"  skipped: {ig['skipped']}"]
    for k, v in ig["integrals"].items():
        out.append(f"  {k:<22}{_fmt(v['estimate'][0])} +/- {_fmt(v['standardError'])}")
    vol = ig["volume"]
    line = f"  {'volume':<22}{_fmt(vol['estimate'])} +/- {_fmt(vol['standardError'])}"
    if "closedForm" in vol:
        line += f"  (closed form {_fmt(vol['closedForm'])}, rel. error {_fmt(vol['relativeError'])})"
    out.append(line)
    if "balance" in ig:
        out.append(f"  {'balance residual':<22}{_fmt(ig['balance']['residual'])}")
    return out


def _verify_tables(f: Immersion, sections: dict) -> list:
    d = catalog.describe(f)
    out = ["", f"immersion {d['id']}: n={d['n']} p={d['p']} q={d['q']} m={d['m']} charts={d['charts']}"]
    fl = sections["flatness"]
    out.append(f"  flatness residual     {_fmt(fl['maxResidual'])}  (gate {_fmt(fl['gate'])})")
    out.append(f"  rank check p >= q     {_fmt(fl['rankCheckPassed'])}")
    if fl["pullbackHolMaxDeviation"] is not None:
        out.append(f"  |Hol^Gr - 2/q| max    {_fmt(fl['pullbackHolMaxDeviation'])}")
        out.append(f"  |H_sigma K| max       {_fmt(fl['compositionMaxNorm'])}")
    pv = sections.get("pinching")
    if pv and pv["minHol"] is not None:
        out.append(f"  min Hol               {_fmt(pv['minHol']['minHol'])}  (threshold {_fmt(pv['threshold'])})")
        out.append(f"  max |nabla sigma|     {_fmt(pv['parallelism']['maxNablaSigma'])}")
        out.append(f"  second-covariant id.  {_fmt(pv['secondCovariantMaxResidual'])}")
        out.append(f"  trace bound residual  {_fmt(pv['sigmaShapeMaxResidual'])}")
        out.append(f"  eigenvalue chain      {_fmt(pv['lambdaChainWorstSlack'])}")
    if "submanifold" in sections:
        out += ["", "submanifold residuals"]
        for k, v in sections["submanifold"]["residuals"].items():
            out.append(f"  {k:<22}{_fmt(v)}")
    if "integration" in sections:
        out += _integration_lines(sections["integration"])
    return out


def run_identities(config: RunConfig) -> RunResult:
    main = identity_battery(config.n, config.p, config.draws, config.seed)
    sections = {"identities": main.to_dict()}
    # hyperplane model: Hol is identically 2 on CP^1
    line = identity_battery(2, 1, config.draws, config.seed)
    sections["projectiveLine"] = line.to_dict()
    status = "pass" if (main.passed and line.passed) else "fail"
    lines = [f"identities on Gr_{config.p}(C^{config.n}): {'all residuals within tolerance' if main.passed else 'FAILED: ' + ', '.join(main.failures)}"]
    for k, v in sorted(main.residuals.items()):
        lines.append(f"  {k:<22}{v:.3e}  (tol {main.to_dict()['tolerances'][k]:.0e})")
    lines.append(f"Hol = 2 on Gr_1(C^2): max |Hol - 2| = {line.residuals['holHyperplane']:.3e}")
    lines.append(f"status: {status}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["grassmannian", "identity", "residual", "tolerance", "passed"])
    for name, rep in (("main", main), ("projectiveLine", line)):
        d = rep.to_dict()
        for k, v in d["residuals"].items():
            w.writerow([f"Gr_{rep.p}(C^{rep.n})", k, repr(v), d["tolerances"][k], v < d["tolerances"][k]])
    return RunResult(make_report(config, sections, status), lines, {"identities": buf.getvalue()})


def run_catalog(config: RunConfig) -> RunResult:
    rows = []
    for mid in catalog.LISTED:
        d = catalog.describe(catalog.get(mid))
        d["member"] = mid
        rows.append(d)
    lines = [f"{'member':<28}{'n':>3}{'p':>3}{'q':>3}{'m':>3}  {'1/q':>7}  {'minHol':>7}  parallel  flat"]
    for d in rows:
        mh = "?" if d["expectedMinHol"] is None else f"{d['expectedMinHol']:.4f}"
        lines.append(f"{d['id']:<28}{d['n']:>3}{d['p']:>3}{d['q']:>3}{d['m']:>3}  {d['threshold']:>7.4f}  {mh:>7}  "
                     f"{_fmt(d['expectedParallel']):<8}  {_fmt(d['expectedFlat'])}")
    buf = io.StringIO()
    cols = ["id", "member", "n", "p", "q", "m", "charts", "threshold", "expectedMinHol", "expectedParallel",
            "expectedFlat", "homogeneous"]
    w = csv.DictWriter(buf, cols, lineterminator="\n")
    w.writeheader()
    for d in rows:
        w.writerow({k: d[k] for k in cols})
    return RunResult(make_report(config, {"catalog": rows}, "pass"), lines, {"catalog": buf.getvalue()})


def run_integrate(config: RunConfig) -> RunResult:
    f = resolve_immersion(config.immersion)
    fl = flatness_residual(f, point_plan(f, config.density, config.directions, config.seed), config.diff(),
                           gate=config.flat_gate)
    sec, status, plan = integration_section(f, config, fl.flat)
    sections = {"immersion": catalog.describe(f), "flatness": fl.to_dict(), "integration": sec}
    lines = [f"integration over the unit sphere bundle of {f.catalog_id}: {status}"]
    lines += _verify_tables(f, sections)[1:]
    lines.append(f"status: {status}")
    tables = {"um": um_samples_csv(f, plan)} if plan is not None else {}
    return RunResult(make_report(config, sections, status), lines, tables)


RUNNERS = {"verify": run_verify, "identities": run_identities, "catalog": run_catalog, "integrate": run_integrate}


def run(config: RunConfig) -> RunResult:
    return RUNNERS[config.command](config)
