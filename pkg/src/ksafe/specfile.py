"""JSON operator spec files.

Schema (all keys required unless noted, unknown keys rejected)::

    {
      "operator": {
        "n": 1, "q": 1, "s": 2,
        "terms": [
          {"index": [2], "coeff": [[ [ {"tag": "const", "value": 1.0} ] ]]}
        ]
      },
      "metric": null,     # optional q x q coefficient matrix
      "density": null     # optional 1 x 1 coefficient matrix
    }

A coefficient matrix is a list of rows; each entry is a list of terms that
are summed.  Term tags:

* ``{"tag": "const", "value": c}``
* ``{"tag": "trig", "freqs": [[xi_1, ...], ...], "amps": [...], "phases": [...]}``
  for ``sum amp * cos(xi . x + phase)``
* ``{"tag": "powerlaw", "n": n, "beta": "5/2", "K": K, "seed": s, "amp": a}``
  (``amp`` optional, default 1; ``beta`` a number or a fraction string)
"""

from __future__ import annotations

import json
import json.decoder
import json.scanner
from dataclasses import dataclass
from fractions import Fraction

from .coefficients import Coefficient, Const, PowerLaw, Scaled, Sum, Trig, is_zero
from .operators import DiffOp


class SpecError(ValueError):
    """Malformed spec file; ``field`` is a dotted path, ``line`` when known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.message = message
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(field)
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class OperatorSpec:
    operator: DiffOp
    metric: Coefficient | None = None
    density: Coefficient | None = None


_TERM_KEYS = {
    "const": ({"value"}, set()),
    "trig": ({"freqs", "amps", "phases"}, set()),
    "powerlaw": ({"n", "beta", "K", "seed"}, {"amp"}),
}


class _Node(dict):
    """A decoded JSON object that remembers the line it starts on."""

    line: int | None = None


class _LineDecoder(json.JSONDecoder):
    def __init__(self):
        super().__init__()
        self.parse_object = self._parse_object
        self.scan_once = json.scanner.py_make_scanner(self)

    def _parse_object(self, s_and_end, *args):
        s, end = s_and_end
        obj, stop = json.decoder.JSONObject(s_and_end, *args)
        node = _Node(obj)
        node.line = s.count("\n", 0, end) + 1
        return node, stop


def _expect(cond: bool, message: str, path: str, node=None):
    if not cond:
        raise SpecError(message, path, getattr(node, "line", None))


def _keys(obj, required: set, optional: set, path: str):
    _expect(isinstance(obj, dict), "expected an object", path)
    for key in sorted(required):
        _expect(key in obj, f"missing field '{key}'", path, obj)
    extra = set(obj) - required - optional
    _expect(not extra, f"unknown field(s) {sorted(extra)}", path, obj)


def _integer(v, path: str, minimum: int | None = None) -> int:
    _expect(isinstance(v, int) and not isinstance(v, bool), "expected an integer", path)
    if minimum is not None:
        _expect(v >= minimum, f"must be >= {minimum}", path)
    return v


def _number(v, path: str) -> float:
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool), "expected a number", path)
    return float(v)


def _number_list(v, path: str) -> list[float]:
    _expect(isinstance(v, list), "expected a list", path)
    return [_number(x, f"{path}[{k}]") for k, x in enumerate(v)]


def _at_line(node, fn, *args):
    """Run ``fn``; errors without a line number inherit the line of ``node``."""
    try:
        return fn(*args)
    except SpecError as exc:
        line = getattr(node, "line", None)
        if exc.line is None and line is not None:
            raise SpecError(exc.message, exc.field, line) from None
        raise


def _parse_term(obj, n: int, path: str):
    return _at_line(obj, _parse_term_body, obj, n, path)


def _parse_term_body(obj, n: int, path: str):
    _expect(isinstance(obj, dict) and "tag" in obj, "term needs a 'tag'", path)
    tag = obj["tag"]
    _expect(tag in _TERM_KEYS, f"unknown term tag {tag!r}", f"{path}.tag")
    required, optional = _TERM_KEYS[tag]
    _keys(obj, required | {"tag"}, optional, path)
    if tag == "const":
        return Const(_number(obj["value"], f"{path}.value"))
    if tag == "trig":
        freqs = obj["freqs"]
        _expect(isinstance(freqs, list), "expected a list", f"{path}.freqs")
        vecs = []
        for k, f in enumerate(freqs):
            p = f"{path}.freqs[{k}]"
            _expect(isinstance(f, list) and len(f) == n, f"frequency must have {n} entries", p)
            vecs.append(tuple(_integer(c, p) for c in f))
        amps = _number_list(obj["amps"], f"{path}.amps")
        phases = _number_list(obj["phases"], f"{path}.phases")
        _expect(len(amps) == len(vecs) == len(phases), "freqs, amps and phases differ in length", path)
        return Trig(tuple(vecs), tuple(amps), tuple(phases))
    pn = _integer(obj["n"], f"{path}.n")
    _expect(pn == n, f"power law dimension {pn} differs from operator dimension {n}", f"{path}.n")
    beta = obj["beta"]
    try:
        _expect(not isinstance(beta, bool), "bad beta", f"{path}.beta")
        beta = Fraction(str(beta))
    except (ValueError, ZeroDivisionError):
        raise SpecError(f"cannot read beta {obj['beta']!r} as a rational number", f"{path}.beta") from None
    amp = _number(obj.get("amp", 1.0), f"{path}.amp")
    try:
        return PowerLaw(n, beta, _integer(obj["K"], f"{path}.K"), _integer(obj["seed"], f"{path}.seed", 0), amp)
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(str(exc), path) from None


def _parse_matrix(obj, n: int, path: str, shape: tuple[int, int] | None = None) -> Coefficient:
    _expect(isinstance(obj, list) and obj, "expected a non-empty matrix of term lists", path)
    rows = []
    for r, row in enumerate(obj):
        _expect(isinstance(row, list) and row, "expected a non-empty row", f"{path}[{r}]")
        entries = []
        for c, cell in enumerate(row):
            p = f"{path}[{r}][{c}]"
            _expect(isinstance(cell, list), "expected a list of terms", p)
            terms = [_parse_term(t, n, f"{p}[{k}]") for k, t in enumerate(cell)]
            if not terms:
                entries.append(Const(0.0))
            elif len(terms) == 1:
                entries.append(terms[0])
            else:
                entries.append(Sum(tuple(terms)))
        rows.append(tuple(entries))
    _expect(len({len(r) for r in rows}) == 1, "rows differ in length", path)
    if shape is not None:
        _expect((len(rows), len(rows[0])) == shape, f"expected a {shape[0]}x{shape[1]} matrix", path)
    try:
        return Coefficient(n, tuple(rows))
    except ValueError as exc:
        raise SpecError(str(exc), path) from None


def _parse_operator(obj) -> DiffOp:
    _keys(obj, {"n", "q", "s", "terms"}, set(), "operator")
    n = _integer(obj["n"], "operator.n", 1)
    _expect(n in (1, 2), "only n = 1 or 2 is supported", "operator.n")
    q = _integer(obj["q"], "operator.q", 1)
    s = _integer(obj["s"], "operator.s", 0)
    terms = obj["terms"]
    _expect(isinstance(terms, list), "expected a list", "operator.terms")
    coeffs = {}
    for k, item in enumerate(terms):
        p = f"operator.terms[{k}]"
        _keys(item, {"index", "coeff"}, set(), p)
        idx = item["index"]
        _expect(isinstance(idx, list) and len(idx) == n, f"multiindex must have {n} entries", f"{p}.index", item)
        idx = tuple(_integer(c, f"{p}.index", 0) for c in idx)
        _expect(idx not in coeffs, f"duplicate multiindex {list(idx)}", f"{p}.index", item)
        _expect(sum(idx) <= s, f"multiindex {list(idx)} has order {sum(idx)} > s={s}", f"{p}.index", item)
        coeffs[idx] = _at_line(item, _parse_matrix, item["coeff"], n, f"{p}.coeff", (q, q))
    try:
        return DiffOp(n, q, s, coeffs)
    except ValueError as exc:
        raise SpecError(str(exc), "operator") from None


def parse_spec(text: str) -> OperatorSpec:
    """Parse and validate a spec document."""
    try:
        doc = json.loads(text, cls=_LineDecoder)
    except json.JSONDecodeError as exc:
        raise SpecError(exc.msg, line=exc.lineno) from None
    _keys(doc, {"operator"}, {"metric", "density"}, "<root>")
    P = _at_line(doc["operator"], _parse_operator, doc["operator"])
    metric = density = None
    if doc.get("metric") is not None:
        metric = _parse_matrix(doc["metric"], P.n, "metric", (P.q, P.q))
    if doc.get("density") is not None:
        density = _parse_matrix(doc["density"], P.n, "density", (1, 1))
    return OperatorSpec(P, metric, density)


def load_spec(path) -> OperatorSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


# -- serialization -----------------------------------------------------------


def _leaves(t, factor: float = 1.0):
    if isinstance(t, Sum):
        for u in t.terms:
            yield from _leaves(u, factor)
    elif isinstance(t, Scaled):
        yield from _leaves(t.term, factor * t.factor)
    elif isinstance(t, Const):
        yield {"tag": "const", "value": factor * t.value}
    elif isinstance(t, Trig):
        yield {
            "tag": "trig",
            "freqs": [list(f) for f in t.freqs],
            "amps": [factor * a for a in t.amps],
            "phases": list(t.phases),
        }
    elif isinstance(t, PowerLaw):
        yield {"tag": "powerlaw", "n": t.n, "beta": str(t.beta), "K": t.K, "seed": t.seed, "amp": factor * t.amp}
    else:
        raise SpecError(f"{type(t).__name__} terms have no spec-file representation")


def coefficient_to_json(c: Coefficient) -> list:
    return [[[] if is_zero(t) else list(_leaves(t)) for t in row] for row in c.entries]


def spec_to_json(spec: OperatorSpec | DiffOp) -> dict:
    if isinstance(spec, DiffOp):
        spec = OperatorSpec(spec)
    P = spec.operator
    return {
        "operator": {
            "n": P.n,
            "q": P.q,
            "s": P.s,
            "terms": [{"index": list(i), "coeff": coefficient_to_json(c)} for i, c in P.coeffs],
        },
        "metric": None if spec.metric is None else coefficient_to_json(spec.metric),
        "density": None if spec.density is None else coefficient_to_json(spec.density),
    }


def serialize(spec: OperatorSpec | DiffOp) -> str:
    """Canonical text: graded-lex term order, fixed key order, one term per line."""
    doc = spec_to_json(spec)
    op = doc["operator"]

    def flat(v):
        return json.dumps(v, separators=(", ", ": "))

    terms = ",\n".join(f"      {flat(t)}" for t in op["terms"])
    return (
        "{\n"
        '  "operator": {\n'
        f'    "n": {op["n"]},\n'
        f'    "q": {op["q"]},\n'
        f'    "s": {op["s"]},\n'
        f'    "terms": [\n{terms}\n    ]\n'
        "  },\n"
        f'  "metric": {flat(doc["metric"])},\n'
        f'  "density": {flat(doc["density"])}\n'
        "}\n"
    )
