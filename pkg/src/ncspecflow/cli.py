"""Command-line driver: read a problem file, run one task, write a result file.

Exit codes: 0 success, 2 validation refusal, 3 schema error, 4 internal
cross-check failure.  Complex arrays are ``{"re": [...], "im": [...]}``
(``"im"`` may be omitted); plain nested lists are read as real arrays.
"""

import argparse
import csv
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import jsonschema
import numpy as np

from . import _signs, __version__
from .algebra import AElement, AlgebraShape
from .errors import CrossCheckFailed, InconsistentConventions, InvalidPath, ShapeMismatch, ValidationError
from .oppath import DEFAULT_GAP_MIN, DEFAULT_REFINE_MAX, HermPath, validate_path

EXIT_OK, EXIT_REFUSED, EXIT_SCHEMA, EXIT_CROSSCHECK = 0, 2, 3, 4

TASKS = ("validate", "spectral-flow", "relative-index", "maslov", "maslov-triple",
         "odd-spectral-flow", "odd-relative-index", "suspend-check", "oracle-interval",
         "axiom-suite")

_CARRAY = {
    "oneOf": [
        {"type": "array"},
        {"type": "object", "required": ["re"], "additionalProperties": False,
         "properties": {"re": {"type": "array"}, "im": {"type": "array"}}},
    ]
}

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "algebra", "task", "payload"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": "1"},
        "algebra": {
            "type": "object", "required": ["blocks"], "additionalProperties": False,
            "properties": {"blocks": {"type": "array", "minItems": 1, "items": {
                "type": "object", "required": ["kind", "dim"], "additionalProperties": False,
                "properties": {"kind": {"enum": ["scalar", "loop"]},
                               "dim": {"type": "integer", "minimum": 1},
                               "theta_samples": {"type": "integer", "minimum": 8}}}}},
        },
        "rank": {"type": "integer", "minimum": 1},
        "task": {"enum": list(TASKS)},
        "payload": {"type": "object"},
        "config": {"type": "object"},
    },
}

PATH_SCHEMA = {
    "type": "object", "required": ["t", "samples"],
    "properties": {"t": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                   "samples": _CARRAY},
}

PAYLOAD_SCHEMAS = {
    "validate": {"type": "object", "required": ["path"], "properties": {"path": PATH_SCHEMA}},
    "spectral-flow": {"type": "object", "required": ["path"], "properties": {
        "path": PATH_SCHEMA, "route": {"enum": ["winding", "sections", "crossings", "all"]}}},
    "relative-index": {"type": "object", "required": ["P", "Q"],
                       "properties": {"P": _CARRAY, "Q": _CARRAY}},
    "maslov": {"type": "object", "required": ["t", "u0", "u1"], "properties": {
        "t": {"type": "array", "items": {"type": "number"}}, "u0": _CARRAY, "u1": _CARRAY}},
    "maslov-triple": {"type": "object", "required": ["u0", "u1", "u2"],
                      "properties": {"u0": _CARRAY, "u1": _CARRAY, "u2": _CARRAY}},
    "odd-spectral-flow": {"type": "object", "required": ["path"], "properties": {"path": PATH_SCHEMA}},
    "odd-relative-index": {"type": "object", "required": ["P", "Q"],
                           "properties": {"P": _CARRAY, "Q": _CARRAY}},
    "suspend-check": {"type": "object", "required": ["path", "direction"], "properties": {
        "path": PATH_SCHEMA, "direction": {"enum": ["even-to-odd", "odd-to-even"]}}},
    "oracle-interval": {"type": "object", "required": ["u0", "u1", "window"], "properties": {
        "u0": _CARRAY, "u1": _CARRAY,
        "window": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}}},
    "axiom-suite": {"type": "object", "required": ["suite"], "properties": {
        "suite": {"enum": ["flow", "relative-index"]},
        "trials": {"type": "integer", "minimum": 1}}},
}


class SchemaError(Exception):
    pass


# ------------------------------------------------------------ conversion

def decode_array(obj):
    """Ragged nested ``{"re", "im"}`` data to nested lists of complex numbers."""
    if isinstance(obj, dict):
        return _zip(obj["re"], obj.get("im"))
    return _zip(obj, None)


def _zip(re, im):
    if isinstance(re, list):
        if im is None:
            return [_zip(r, None) for r in re]
        if not isinstance(im, list) or len(im) != len(re):
            raise SchemaError("re and im parts have different shapes")
        return [_zip(r, i) for r, i in zip(re, im)]
    if isinstance(im, list):
        raise SchemaError("re and im parts have different shapes")
    for x in (re, im):
        if x is not None and (isinstance(x, bool) or not isinstance(x, (int, float))):
            raise SchemaError("array entries must be numbers")
    return complex(re, 0.0 if im is None else im)


def encode_array(A):
    A = np.asarray(A)
    return {"re": np.real(A).tolist(), "im": np.imag(A).tolist()}


def _as_block(x, spec, m, what):
    try:
        B = np.array(x, dtype=complex)
    except ValueError:
        raise SchemaError(f"{what}: ragged array") from None
    want = (spec.theta_samples, m, m) if spec.is_loop else (m, m)
    if B.shape != want:
        raise SchemaError(f"{what}: shape {B.shape}, expected {want}")
    return B if spec.is_loop else B[None]


def element_from_json(obj, shape, rank, what="element"):
    """Element indexed ``[block][theta?][row][col]``."""
    data = decode_array(obj)
    if len(data) != len(shape):
        raise SchemaError(f"{what}: {len(data)} blocks, expected {len(shape)}")
    blocks = [_as_block(x, spec, m, f"{what} block {b}")
              for b, (x, spec, m) in enumerate(zip(data, shape, shape.sizes(rank)))]
    return AElement(shape, rank, tuple(blocks))


def _path_blocks(t, samples, shape, rank, what):
    data = decode_array(samples)
    if len(data) != len(t):
        raise SchemaError(f"{what}: {len(data)} samples for {len(t)} grid points")
    blocks = [[] for _ in shape]
    for i, row in enumerate(data):
        if len(row) != len(shape):
            raise SchemaError(f"{what} sample {i}: {len(row)} blocks, expected {len(shape)}")
        for b, (x, spec, m) in enumerate(zip(row, shape, shape.sizes(rank))):
            blocks[b].append(_as_block(x, spec, m, f"{what} sample {i} block {b}"))
    return [np.array(bl) for bl in blocks]


def path_from_json(obj, shape, rank) -> HermPath:
    """Path with samples indexed ``[t][block][theta?][row][col]``."""
    t = np.asarray(obj["t"], dtype=float)
    return HermPath(shape, rank, t, _path_blocks(t, obj["samples"], shape, rank, "path"))


def path_to_json(p: HermPath) -> dict:
    samples = []
    for i in range(len(p.t)):
        samples.append([B[i] if spec.is_loop else B[i, 0] for spec, B in zip(p.shape, p.blocks)])
    re = [[np.real(x).tolist() for x in row] for row in samples]
    im = [[np.imag(x).tolist() for x in row] for row in samples]
    return {"t": p.t.tolist(), "samples": {"re": re, "im": im}}


def element_to_json(x: AElement) -> dict:
    blocks = [B if spec.is_loop else B[0] for spec, B in zip(x.shape, x.blocks)]
    return {"re": [np.real(B).tolist() for B in blocks], "im": [np.imag(B).tolist() for B in blocks]}


def jsonable(x):
    """Recursively convert results to JSON-ready builtins."""
    if hasattr(x, "to_dict"):
        return jsonable(x.to_dict())
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return jsonable(dataclasses.asdict(x))
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.complexfloating, complex)):
        return {"re": float(x.real), "im": float(x.imag)}
    return x


def ordered_map(fn, items, threads=1):
    """``map`` with an optional thread pool; results keep input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def sign_record():
    from .oracle import SIGN_NAMES

    return {k: getattr(_signs, k) for k in SIGN_NAMES}


# ---------------------------------------------------------------- tasks

def _cfg(problem, args):
    cfg = dict(problem.get("config", {}))
    if args.gap_min is not None:
        cfg["gap_min"] = args.gap_min
    if args.tol_zero is not None:
        cfg["tol_zero"] = args.tol_zero
    if args.refine_max is not None:
        cfg["refine_max"] = args.refine_max
    cfg.setdefault("gap_min", DEFAULT_GAP_MIN)
    cfg.setdefault("refine_max", DEFAULT_REFINE_MAX)
    cfg.setdefault("tol_zero", 1e-8)
    return cfg


def _refuse(validity, message):
    raise InvalidPath(message, validity)


def task_validate(ctx):
    p = path_from_json(ctx.payload["path"], ctx.shape, ctx.rank)
    ctx.curves_path = p
    v = validate_path(p, ctx.cfg["gap_min"])
    ctx.result["diagnostics"]["validity"] = v.to_dict()
    ctx.result["verdict"] = v.verdict
    if v.verdict != "valid":
        _refuse(v, f"path verdict is {v.verdict}")


def task_spectral_flow(ctx):
    from .specflow import spectral_flow_crossings, spectral_flow_sections, spectral_flow_winding

    p = path_from_json(ctx.payload["path"], ctx.shape, ctx.rank)
    ctx.curves_path = p
    cfg = ctx.cfg
    route = ctx.payload.get("route", "all")
    runners = {
        "winding": lambda: spectral_flow_winding(p, cfg["gap_min"], cfg["refine_max"]),
        "sections": lambda: spectral_flow_sections(p, cfg["gap_min"]),
        "crossings": lambda: spectral_flow_crossings(p, cfg["gap_min"], cfg["refine_max"], cfg["tol_zero"]),
    }
    names = list(runners) if route == "all" else [route]
    v = validate_path(p, cfg["gap_min"])
    ctx.result["diagnostics"]["validity"] = v.to_dict()
    ctx.result["verdict"] = v.verdict
    if v.verdict != "valid":
        _refuse(v, f"path verdict is {v.verdict}")
    # eigen-decompositions are cached on the path; fill the cache before threading
    for b in range(len(p.shape)):
        p.eigenvalues(b)
        p.step_permutations(b)
    results = ordered_map(lambda n: runners[n](), names, ctx.threads)
    values = {n: list(r.value.components) for n, r in zip(names, results)}
    if len({tuple(x) for x in values.values()}) != 1:
        raise CrossCheckFailed(f"spectral flow routes disagree: {values}")
    ctx.result["k0"] = values[names[0]]
    ctx.result["diagnostics"]["routes"] = {n: {"k0": values[n], "diagnostics": r.diagnostics}
                                           for n, r in zip(names, results)}


def task_relative_index(ctx):
    from .relindex import ProjectionPair, rel_index_crossing, rel_index_fredholm

    pp = ProjectionPair(element_from_json(ctx.payload["P"], ctx.shape, ctx.rank, "P"),
                        element_from_json(ctx.payload["Q"], ctx.shape, ctx.rank, "Q"))
    a, b = ordered_map(lambda f: f(pp), [rel_index_fredholm, rel_index_crossing], ctx.threads)
    if a != b:
        raise CrossCheckFailed(f"relative index constructions disagree: {a.components} vs {b.components}")
    ctx.result["k0"] = list(a.components)
    ctx.result["diagnostics"]["constructions"] = {"fredholm": list(a.components),
                                                  "crossing": list(b.components)}


def _unitary_path(ctx, key):
    t = np.asarray(ctx.payload["t"], dtype=float)
    return t, _path_blocks(t, ctx.payload[key], ctx.shape, ctx.rank, key)


def task_maslov(ctx):
    from .maslov import LagrangianPath, maslov_pair

    t, u0 = _unitary_path(ctx, "u0")
    _, u1 = _unitary_path(ctx, "u1")
    lp = LagrangianPath(ctx.shape, ctx.rank, t, u0, u1)
    mu, diag = maslov_pair(lp, ctx.cfg["gap_min"], ctx.cfg["refine_max"], ctx.cfg["tol_zero"])
    ctx.result["k0"] = list(mu.components)
    ctx.result["diagnostics"].update(diag)


def task_maslov_triple(ctx):
    from .maslov import Lagrangian, maslov_triple

    Ls = [Lagrangian(element_from_json(ctx.payload[k], ctx.shape, ctx.rank, k)) for k in ("u0", "u1", "u2")]
    tau, diag = maslov_triple(*Ls, margin=ctx.cfg["gap_min"])
    ctx.result["k0"] = list(tau.components)
    ctx.result["diagnostics"].update(diag)


def task_odd_spectral_flow(ctx):
    from .oddflow import GradedHermPath, odd_spectral_flow

    p = path_from_json(ctx.payload["path"], ctx.shape, ctx.rank)
    ctx.curves_path = p
    g = GradedHermPath(p)
    ctx.result["k1"] = list(odd_spectral_flow(g, ctx.cfg["gap_min"]).components)


def task_odd_relative_index(ctx):
    from .oddflow import LagrangianProjection, odd_rel_index

    P = LagrangianProjection(element_from_json(ctx.payload["P"], ctx.shape, ctx.rank, "P"))
    Q = LagrangianProjection(element_from_json(ctx.payload["Q"], ctx.shape, ctx.rank, "Q"))
    ctx.result["k1"] = list(odd_rel_index(P, Q).components)


def task_suspend_check(ctx):
    from .oddflow import GradedHermPath, suspend_even_to_odd, suspend_odd_to_even

    p = path_from_json(ctx.payload["path"], ctx.shape, ctx.rank)
    ctx.curves_path = p
    x_samples = int(ctx.cfg.get("x_samples", 64))
    if ctx.payload["direction"] == "even-to-odd":
        rep = suspend_even_to_odd(p, x_samples, ctx.cfg["gap_min"])
        ctx.result["k0"] = rep["spectral_flow"]
    else:
        rep = suspend_odd_to_even(GradedHermPath(p), x_samples, ctx.cfg["gap_min"])
        ctx.result["k1"] = rep["odd_flow"]
    ctx.result["diagnostics"].update(rep)


def task_oracle_interval(ctx):
    from . import matfun
    from .maslov import interval_spectrum
    from .oracle import ShootingConfig, shooting_spectrum

    u0 = np.array(decode_array(ctx.payload["u0"]), dtype=complex)
    u1 = np.array(decode_array(ctx.payload["u1"]), dtype=complex)
    if u0.ndim != 2 or u0.shape != u1.shape or u0.shape[0] != u0.shape[1]:
        raise SchemaError("u0 and u1 must be square matrices of equal size")
    window = tuple(float(x) for x in ctx.payload["window"])
    dips = shooting_spectrum(u0, u1, ShootingConfig(window=window))
    closed = interval_spectrum(matfun.as_matrix(u0).conj().T @ u1, window)
    agree = len(dips) == len(closed) and bool(np.all(np.abs(dips - closed) <= 1e-8))
    ctx.result["diagnostics"].update({"shooting": dips, "closed_form": closed, "agree": agree})
    if not agree:
        raise CrossCheckFailed("shooting spectrum disagrees with the closed form")


def task_axiom_suite(ctx):
    from .relindex import AxiomReport, rel_index_axiom_suite
    from .specflow import flow_axiom_suite

    suite = ctx.payload["suite"]
    trials = int(ctx.payload.get("trials", 10))
    fn = flow_axiom_suite if suite == "flow" else rel_index_axiom_suite
    # one trial per work item, merged in seed order
    reports = ordered_map(lambda s: fn(ctx.shape, trials=1, seed=s, rank=ctx.rank),
                          range(ctx.seed, ctx.seed + trials), ctx.threads)
    total = AxiomReport()
    for r in reports:
        total.merge(r)
    ctx.result["diagnostics"]["report"] = total.to_dict()
    if not total.ok:
        raise CrossCheckFailed(f"{len(total.failures)} axiom checks failed")


DISPATCH = {
    "validate": task_validate,
    "spectral-flow": task_spectral_flow,
    "relative-index": task_relative_index,
    "maslov": task_maslov,
    "maslov-triple": task_maslov_triple,
    "odd-spectral-flow": task_odd_spectral_flow,
    "odd-relative-index": task_odd_relative_index,
    "suspend-check": task_suspend_check,
    "oracle-interval": task_oracle_interval,
    "axiom-suite": task_axiom_suite,
}


@dataclasses.dataclass
class _Context:
    shape: AlgebraShape
    rank: int
    payload: dict
    cfg: dict
    threads: int
    seed: int
    result: dict
    curves_path: HermPath = None


def write_curves(path, p: HermPath):
    """CSV with columns ``t, block, curve_index, eigenvalue``.

    On loop blocks ``curve_index = theta_index * m + j``.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "block", "curve_index", "eigenvalue"])
        for b in range(len(p.shape)):
            curves = p.eigen_curves(b)             # (T, S, m)
            T, S, m = curves.shape
            for s in range(S):
                for j in range(m):
                    for i in range(T):
                        w.writerow([repr(float(p.t[i])), b, s * m + j, repr(float(curves[i, s, j]))])


def load_problem(text):
    try:
        problem = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    try:
        jsonschema.validate(problem, PROBLEM_SCHEMA)
        jsonschema.validate(problem["payload"], PAYLOAD_SCHEMAS[problem["task"]])
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"schema: {exc.message}") from None
    return problem


def solve(problem: dict, args) -> tuple:
    """Run one problem; returns ``(exit_code, result_dict, curves_path)``."""
    result = {"version": "1", "task": problem.get("task"), "status": "ok", "k0": None, "k1": None,
              "diagnostics": {}, "signs": sign_record(), "error": None}
    ctx = None
    try:
        try:
            shape = AlgebraShape.from_dict(problem["algebra"])
        except (ValueError, KeyError) as exc:
            raise SchemaError(f"algebra: {exc}") from None
        result["algebra"] = shape.to_dict()
        ctx = _Context(shape, int(problem.get("rank", 1)), problem["payload"], _cfg(problem, args),
                       max(1, int(args.threads)), int(args.seed), result)
        DISPATCH[problem["task"]](ctx)
        code = EXIT_OK
    except (SchemaError, ShapeMismatch) as exc:
        code = EXIT_SCHEMA
        result["error"] = {"type": "SchemaError" if isinstance(exc, SchemaError) else type(exc).__name__,
                           "message": str(exc)}
    except InvalidPath as exc:
        code = EXIT_REFUSED
        result["error"] = {"type": type(exc).__name__, "message": str(exc)}
        if exc.validity is not None:
            result["verdict"] = exc.validity.verdict
            result["diagnostics"]["validity"] = exc.validity.to_dict()
    except ValidationError as exc:
        code = EXIT_REFUSED
        result["error"] = {"type": type(exc).__name__, "message": str(exc)}
    except (CrossCheckFailed, InconsistentConventions) as exc:
        code = EXIT_CROSSCHECK
        result["error"] = {"type": type(exc).__name__, "message": str(exc)}
    if code != EXIT_OK:
        result["status"] = "error"
    return code, jsonable(result), (ctx.curves_path if ctx else None)


def build_parser():
    ap = argparse.ArgumentParser(prog="ncspecflow", description=__doc__.splitlines()[0])
    ap.add_argument("--input", required=True, help="problem file (JSON)")
    ap.add_argument("--output", default="-", help="result file (default stdout)")
    ap.add_argument("--emit-curves", metavar="PATH", help="write eigenvalue curves as CSV")
    ap.add_argument("--tol-zero", type=float)
    ap.add_argument("--gap-min", type=float)
    ap.add_argument("--refine-max", type=int)
    ap.add_argument("--seed", type=int, default=0, help="base seed for axiom-suite")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def run(args) -> int:
    try:
        with open(args.input) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"ncspecflow: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        problem = load_problem(text)
    except SchemaError as exc:
        code, result, curves = EXIT_SCHEMA, {
            "version": "1", "task": None, "status": "error", "k0": None, "k1": None,
            "diagnostics": {}, "signs": sign_record(),
            "error": {"type": "SchemaError", "message": str(exc)}}, None
    else:
        code, result, curves = solve(problem, args)
    out = json.dumps(result, sort_keys=True, indent=2) + "\n"
    if args.output == "-":
        sys.stdout.write(out)
    else:
        with open(args.output, "w") as fh:
            fh.write(out)
    if args.emit_curves and curves is not None:
        write_curves(args.emit_curves, curves)
    return code


def main(argv=None) -> int:
    return run(build_parser().parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
