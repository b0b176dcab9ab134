"""Command-line front end: ``ksafe <command> SPEC [options]``.

Exit codes: 0 on success, 1 on usage or spec errors, 2 when the analysis ran
but flagged its result (failed safeness, non-ellipticity, unresolved index
gap, failed preconditions).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .catalog import EPSILON_MS, SMOOTHING_CUTOFFS, SWEEP_NS
from .coefficients import GradeError
from .grades import INF
from .grid import TorusGrid, random_field
from .operators import DiffOp, compose, formal_adjoint, is_elliptic, is_safe
from .parametrix import build_partition, parametrix_sweep, splitting_check
from .spectral import (
    difference_norm,
    elliptic_constant_probe,
    index_report,
    operator_norm_estimate,
    smooth_approximation,
)
from .specfile import SpecError, load_spec, spec_to_json

SCHEMA_VERSION = 1
COMMANDS = ("check", "adjoint", "compose", "ellipticity", "index", "estimate", "parametrix", "sweep")


class UsageError(Exception):
    pass


@dataclass
class Report:
    command: str
    config: dict
    results: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    flagged: bool = False
    rows: list = field(default_factory=list)
    columns: tuple = ()

    def flag(self, message: str):
        self.flagged = True
        self.warnings.append(message)

    def to_dict(self, timestamp: bool = True) -> dict:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "tool": {"name": "ksafe", "version": __version__},
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "warnings": self.warnings,
            "flagged": self.flagged,
        }
        if timestamp:
            doc["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return _clean(doc)


def _clean(v):
    """Make values JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def render_text(doc: dict) -> str:
    lines = []

    def walk(v, indent, key=None):
        pad = "  " * indent
        head = f"{pad}{key}:" if key is not None else None
        if isinstance(v, dict):
            if head:
                lines.append(head)
            for k, x in v.items():
                walk(x, indent + (head is not None), k)
        elif isinstance(v, list) and v and all(isinstance(x, dict) for x in v):
            lines.append(head or pad)
            for x in v:
                lines.append(f"{pad}  - " + ", ".join(f"{k}={_short(y)}" for k, y in x.items()))
        else:
            lines.append(f"{head} {_short(v)}" if head else f"{pad}{_short(v)}")

    walk(doc, 0)
    return "\n".join(lines) + "\n"


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


# -- analyses ----------------------------------------------------------------


def _grid(P: DiffOp, N: int | None, default_1d: int, default_2d: int = 16) -> TorusGrid:
    return TorusGrid(P.n, N if N is not None else (default_1d if P.n == 1 else default_2d))


def _order(value, P: DiffOp):
    return P.s if value is None else value


def _describe(P: DiffOp) -> dict:
    out = {
        "n": P.n,
        "q": P.q,
        "s": P.s,
        "coefficients": [{"index": list(i), "grade": c.grade} for i, c in P.coeffs],
    }
    try:
        out["spec"] = spec_to_json(P)["operator"]
    except SpecError:
        out["spec"] = None
    return out


def _safeness(report: Report, P: DiffOp, k, label: str = "safeness"):
    res = is_safe(P, k)
    report.results[label] = res.to_dict()
    report.warnings.extend(res.notes)
    if not res.overall:
        failing = ", ".join(str(list(r.index)) for r in res.failing())
        report.flag(f"operator is not {k}-safe; failing indices {failing}")


def run_check(args, spec, report):
    if args.k is None:
        raise UsageError("check needs --k")
    _safeness(report, spec.operator, args.k)


def run_adjoint(args, spec, report):
    P = spec.operator
    adj = formal_adjoint(P, spec.metric, spec.density)
    report.results["adjoint"] = _describe(adj)
    if args.k is not None:
        _safeness(report, adj, args.k - P.s)


def run_compose(args, spec, report):
    if not args.other:
        raise UsageError("compose needs a second spec file")
    other = load_spec(args.other).operator
    C = compose(spec.operator, other)
    report.results["composition"] = _describe(C)
    if args.k is not None:
        _safeness(report, C, args.k)


def run_ellipticity(args, spec, report):
    res = is_elliptic(spec.operator, args.samples, args.seed, args.margin)
    report.results["ellipticity"] = {"elliptic": res.elliptic, "worst_margin": res.worst_margin,
                                     "sample_budget": args.samples}
    if not res.elliptic:
        report.flag("operator is not elliptic at the sampled covectors")


def run_index(args, spec, report):
    P = spec.operator
    l = _order(args.l, P)
    grid = _grid(P, args.N, 64)
    res = index_report(P, l, grid, args.svd_threshold, args.gap_threshold)
    report.results["index"] = res.to_dict()
    for f in res.flags:
        report.flag(f)


def run_estimate(args, spec, report):
    P = spec.operator
    l = _order(args.l, P)
    grid = _grid(P, args.N, 256)
    est = operator_norm_estimate(P, grid, l, seed=args.seed)
    report.results["operator_norm"] = {"l": l, "N": grid.N, "value": est.value,
                                       "iterations": est.iterations, "converged": est.converged}
    if not is_elliptic(P, margin_tolerance=args.margin).elliptic:
        report.flag("operator is not elliptic; elliptic constant not probed")
        return
    c = elliptic_constant_probe(P, args.p, grid, seed=args.seed)
    report.results["garding"] = {"p": args.p, "N": grid.N, "C_est": c}


def _probe_field(P: DiffOp, grid: TorusGrid, l: float, seed: int):
    return random_field(grid, np.random.default_rng(seed), q=P.q, decay=l)


def run_parametrix(args, spec, report):
    P = spec.operator
    if P.n != 1:
        raise UsageError("the parametrix command supports n = 1 only")
    l = _order(args.l, P)
    grid = _grid(P, args.N, 512)
    u = _probe_field(P, grid, l, args.seed)
    res = splitting_check(P, u, build_partition(args.m), args.Kc, l)
    report.results["splitting"] = {"m": args.m, "K_c": args.Kc, "l": l, "N": grid.N, **res.to_dict()}
    if res.relative_residual > 1e-6:
        report.flag(f"splitting residual {res.relative_residual:.3g} exceeds 1e-6 relative")
    report.columns = ("epsilon", "A_eps", "ER_coefficient", "residual")
    report.rows = parametrix_sweep(P, u, EPSILON_MS, args.Kc, l)
    report.results["table"] = report.rows


def run_sweep(args, spec, report):
    P = spec.operator
    l = _order(args.l, P)
    values = args.values
    if args.kind == "norm":
        values = values or list(SWEEP_NS)
        report.columns = ("N", "operator_norm")
        for N in values:
            est = operator_norm_estimate(P, TorusGrid(P.n, N), l, seed=args.seed)
            report.rows.append({"N": N, "operator_norm": est.value})
    elif args.kind == "cutoff":
        values = values or list(SMOOTHING_CUTOFFS)
        # the truncated series must fit below the Nyquist mode
        grid = _grid(P, args.N, max(64, 1 << (2 * max(values) + 1).bit_length()))
        report.columns = ("cutoff", "difference_norm")
        for c in values:
            d = difference_norm(P, smooth_approximation(P, c), grid, l, seed=args.seed)
            report.rows.append({"cutoff": c, "difference_norm": d})
    else:
        if P.n != 1:
            raise UsageError("the eps sweep supports n = 1 only")
        grid = _grid(P, args.N, 512)
        u = _probe_field(P, grid, l, args.seed)
        report.columns = ("epsilon", "A_eps", "ER_coefficient", "residual")
        report.rows = parametrix_sweep(P, u, values or EPSILON_MS, args.Kc, l)
    report.results["sweep"] = {"kind": args.kind, "l": l, "rows": report.rows}


RUNNERS = {
    "check": run_check,
    "adjoint": run_adjoint,
    "compose": run_compose,
    "ellipticity": run_ellipticity,
    "index": run_index,
    "estimate": run_estimate,
    "parametrix": run_parametrix,
    "sweep": run_sweep,
}


# -- argument handling -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _regularity(text: str):
    if text.lower() in ("inf", "infinity"):
        return INF
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'inf', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ksafe", description="Safeness, adjoints and spectral checks for graded differential operators.")
    p.add_argument("--version", action="version", version=f"ksafe {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("spec", help="operator spec file (JSON)")
    p.add_argument("other", nargs="?", help="second spec file for compose")
    p.add_argument("--k", type=_regularity, help="safeness order")
    p.add_argument("--l", type=int, help="domain Sobolev order (default: operator order)")
    p.add_argument("--p", type=int, default=0, help="Garding estimate order")
    p.add_argument("--N", type=int, help="modes per dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=16, help="parametrix lattice size")
    p.add_argument("--Kc", type=float, default=2.0, help="near-inverse cutoff radius")
    p.add_argument("--kind", choices=("norm", "cutoff", "eps"), default="norm", help="sweep kind")
    p.add_argument("--values", type=_int_list, help="sweep values (N, cutoff or m), comma-separated")
    p.add_argument("--samples", type=int, default=256, help="ellipticity sample budget")
    p.add_argument("--svd-threshold", type=float, default=1e-7)
    p.add_argument("--gap-threshold", type=float, default=1e3)
    p.add_argument("--margin", type=float, default=1e-8, help="ellipticity margin tolerance")
    p.add_argument("--json", action="store_true", help="emit JSON instead of text")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--csv", help="write sweep rows to this CSV file")
    p.add_argument("--no-timestamp", action="store_true")
    return p


def _config(args) -> dict:
    keys = ("spec", "other", "k", "l", "p", "N", "seed", "m", "Kc", "kind", "values",
            "samples", "svd_threshold", "gap_threshold", "margin")
    return {k: getattr(args, k) for k in keys}


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        spec = load_spec(args.spec)
        report = Report(args.command, _config(args))
        RUNNERS[args.command](args, spec, report)
    except UsageError as exc:
        print(f"ksafe: usage error: {exc}", file=sys.stderr)
        return 1
    except (SpecError, GradeError, OSError) as exc:
        print(f"ksafe: {exc}", file=sys.stderr)
        return 1
    except (ValueError, NotImplementedError) as exc:
        print(f"ksafe: cannot run {args.command}: {exc}", file=sys.stderr)
        return 1

    doc = report.to_dict(timestamp=not args.no_timestamp)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n" if args.json else render_text(doc)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if args.csv:
        if not report.rows:
            print("ksafe: this command produces no CSV rows", file=sys.stderr)
            return 1
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(report.columns), extrasaction="ignore")
            writer.writeheader()
            writer.writerows(_clean(report.rows))
    return 2 if report.flagged else 0


def main(argv=None):
    sys.exit(run(argv))
