"""Batch experiment runner: one JSON config in, JSON + CSV reports out.

Config layout::

    {
      "schema_version": 1,
      "seed": 0,
      "model": {"name": "weighted_shift", "truncation": 8, "levels": 4, "params": {}},
      "pipeline": ["axioms", {"op": "A1", "params": {"trials": 100}}],
      "output": {"name": "report"},
      "tolerances": {"expansion": 1e-8}
    }

Instead of ``model`` a config may give ``ladders`` (list of ladder JSON
documents) and ``frame`` ({label, rows, x_ladder, theta_ladder}) where the
frame names its ladders by label.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import constructions as cons
from . import frames as fr
from . import kernel
from .ladder import check_ladder_axioms, ladder_from_dict
from .models import MODEL_NAMES, load_model
from .tolerances import resolve

__all__ = ["run", "main", "RunReport", "ConfigError", "StepError", "emit_decay_curves",
           "PRESETS", "preset_config", "SCHEMA_VERSION", "OPERATIONS", "report_json"]

SCHEMA_VERSION = 1
log = logging.getLogger("fframes")


class ConfigError(ValueError):
    """The config cannot be parsed or refers to something undefined."""

    def __init__(self, message, step=None):
        self.step = step
        prefix = "" if step is None else f"step {step}: "
        super().__init__(prefix + message)


class StepError(RuntimeError):
    """A pipeline step's precondition failed."""

    def __init__(self, step, op, message):
        self.step = step
        self.op = op
        super().__init__(f"step {step} ({op}): {message}")


@dataclass
class RunReport:
    config: dict
    model: dict | None
    steps: list
    passed: bool
    wall_time_s: float

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "model": self.model,
            "steps": self.steps,
            "summary": {
                "passed": self.passed,
                "steps": len(self.steps),
                "failed_steps": [s["index"] for s in self.steps if not s["passed"]],
            },
            "wall_time_s": self.wall_time_s,
        }


# ---------------------------------------------------------------------------
# context

class _Context:
    def __init__(self, config):
        self.seed = int(config["seed"])
        self.tol = resolve(config.get("tolerances"))
        self.model = None
        self.frame = None
        self.dual = None
        self.base = None
        if "model" in config:
            m = config["model"]
            if m.get("name") not in MODEL_NAMES:
                raise ConfigError(f"unknown model {m.get('name')!r}")
            inst = load_model(m["name"], m.get("truncation"), m.get("levels"), m.get("params"))
            self.model = inst
            self.frame = inst.frame
            self.dual = inst.dual
        elif "frame" in config:
            ladders = {}
            for d in config.get("ladders", []):
                lad = ladder_from_dict(d)
                ladders[lad.label] = lad
            fd = config["frame"]
            try:
                x, t = ladders[fd["x_ladder"]], ladders[fd["theta_ladder"]]
            except KeyError as exc:
                raise ConfigError(f"frame refers to undefined ladder {exc.args[0]!r}") from None
            self.frame = fr.FrameSystem(np.array(fd["rows"], float), x, t, fd.get("label", "frame"))

    def need_frame(self, index):
        if self.frame is None:
            raise ConfigError("no frame defined (give 'model' or 'frame')", step=index)
        return self.frame

    def need_dual(self, index, op):
        if self.dual is None:
            try:
                self.dual = fr.dual_sequence(self.frame, 0, seed=self.seed)
            except fr.LowerFrameInequalityError as exc:
                raise StepError(index, op, str(exc)) from None
        return self.dual

    def describe(self):
        if self.frame is None:
            return None
        f = self.frame
        return {
            "name": None if self.model is None else self.model.name,
            "frame": f.label, "N": f.N, "M": f.M, "S": f.S,
            "x_levels": [repr(s) for s in f.x_ladder.levels],
            "theta_levels": [repr(s) for s in f.theta_ladder.levels],
            "x_notes": list(f.x_ladder.notes),
            "theta_notes": list(f.theta_ladder.notes),
        }


def _hilbert_levels(frame):
    return [s for s, spec in enumerate(frame.x_ladder.levels)
            if kernel.hilbert_factor(spec, frame.N) is not None]


def _levels(params, frame, default):
    lv = params.get("levels", params.get("level"))
    if lv is None:
        return default
    lv = [lv] if isinstance(lv, int) else list(lv)
    for s in lv:
        if not 0 <= s <= frame.S:
            raise ValueError(f"level {s} outside 0..{frame.S}")
    return lv


# ---------------------------------------------------------------------------
# operations: each returns (passed, result)

def _op_axioms(ctx, p, i):
    frame = ctx.need_frame(i)
    which = p.get("ladder", "both")
    out = {}
    for name, lad in (("x", frame.x_ladder), ("theta", frame.theta_ladder)):
        if which in (name, "both"):
            out[name] = check_ladder_axioms(lad, p.get("samples", 500), ctx.seed,
                                            p.get("lambda_samples", 50),
                                            tol=ctx.tol["monotonicity"]).to_dict()
    return all(r["passed"] for r in out.values()), out


def _bounds(ctx, frame, p):
    return [fr.estimate_frame_bounds(frame, s, p.get("method", "auto"), p.get("samples", 200),
                                     ctx.seed, tol=ctx.tol["tight"]).to_dict()
            for s in range(frame.S + 1)]


def _op_bounds(ctx, p, i):
    frame = ctx.need_frame(i)
    b = _bounds(ctx, frame, p)
    return all(x["A"] > 0 for x in b), {"bounds": b}


def _op_dual(ctx, p, i):
    frame = ctx.need_frame(i)
    try:
        ctx.dual = fr.dual_sequence(frame, p.get("level", 0), p.get("force", False), ctx.seed)
    except fr.LowerFrameInequalityError as exc:
        raise StepError(i, "dual", str(exc)) from None
    return True, ctx.dual.to_dict()


def _op_expansions(ctx, p, i):
    frame = ctx.need_frame(i)
    dual = ctx.need_dual(i, "expansions")
    rep = fr.verify_expansions(frame, dual, count=p.get("count", 20), seed=ctx.seed,
                               tol=ctx.tol["expansion"])
    return rep.passed, rep.to_dict()


def _op_range(ctx, p, i):
    frame = ctx.need_frame(i)
    rep = fr.check_range_closed(frame, p.get("samples", 200), ctx.seed)
    return rep.rank == frame.N, rep.to_dict()


def _conditions(ctx, p, i, fn, **kw):
    frame = ctx.need_frame(i)
    reports = [fn(frame, s, seed=ctx.seed, **kw).to_dict()
               for s in _levels(p, frame, _hilbert_levels(frame))]
    return all(r["verdict"] in ("pass", "sampled-pass") for r in reports), {"reports": reports}


def _op_a1(ctx, p, i):
    return _conditions(ctx, p, i, cons.check_A1, trials=p.get("trials", 1000),
                       tol=ctx.tol["compare"])


def _op_a2(ctx, p, i):
    return _conditions(ctx, p, i, cons.check_A2, trials=p.get("trials", 20),
                       tol=ctx.tol["compare"])


def _op_a3(ctx, p, i):
    return _conditions(ctx, p, i, cons.check_A3, trials=p.get("trials", 200),
                       floor=ctx.tol["a3_floor"])


def _op_dominance(ctx, p, i):
    return _conditions(ctx, p, i, cons.check_dominance, samples=p.get("samples", 500),
                       tol=ctx.tol["compare"])


def _op_solidity(ctx, p, i):
    return _conditions(ctx, p, i, cons.check_solidity, samples=p.get("samples", 500),
                       tol=ctx.tol["compare"])


def _op_tilde(ctx, p, i):
    frame = ctx.need_frame(i)
    if "c" not in p:
        raise ConfigError("tilde needs params.c", step=i)
    cs = cons.ConstraintSet(np.array(p["c"], float), frame.rows,
                            frame.x_ladder.levels[p.get("level", 0)])
    res = cons.tilde_norm(cs, p.get("method", "auto"), tie=ctx.tol["tie"],
                          feas_tol=ctx.tol["feasibility"])
    return res.status == "optimal", res.to_dict()


def _op_construct_x(ctx, p, i):
    frame = ctx.need_frame(i)
    try:
        x = cons.construct_x_ladder(frame.theta_ladder, frame, seed=ctx.seed)
    except fr.LowerFrameInequalityError as exc:
        raise StepError(i, "construct_x", str(exc)) from None
    new = fr.FrameSystem(frame.rows, x, frame.theta_ladder, frame.label)
    b = _bounds(ctx, new, p)
    axioms = check_ladder_axioms(x, p.get("samples", 500), ctx.seed, tol=ctx.tol["monotonicity"])
    ok = axioms.passed and all(abs(e["A"] - 1) <= ctx.tol["tight"] and abs(e["B"] - 1) <= ctx.tol["tight"]
                               for e in b[1:])
    return ok, {"ladder": x.to_dict(), "bounds": b, "axioms_passed": axioms.passed}


def _op_construct_theta(ctx, p, i):
    frame = ctx.need_frame(i)
    try:
        t = cons.construct_theta_ladder(frame.x_ladder, frame, seed=ctx.seed)
    except fr.LowerFrameInequalityError as exc:
        raise StepError(i, "construct_theta", str(exc)) from None
    new = fr.FrameSystem(frame.rows, frame.x_ladder, t, frame.label)
    b = _bounds(ctx, new, p)
    ok = all(abs(e["A"] - 1) <= ctx.tol["tight"] and abs(e["B"] - 1) <= ctx.tol["tight"] for e in b)
    return ok, {"ladder": t.to_dict(), "bounds": b}


def _op_cb_test(ctx, p, i):
    frame = ctx.need_frame(i)
    dual = ctx.need_dual(i, "cb_test")
    try:
        reps = cons.cb_test_via_biorthogonal(frame, dual, samples=p.get("samples", 50),
                                             seed=ctx.seed, tol=ctx.tol["expansion"])
    except cons.BiorthogonalityError as exc:
        raise StepError(i, "cb_test", str(exc)) from None
    reps = [r.to_dict() for r in reps]
    return all(r["verdict"] == "pass" for r in reps), {"reports": reps}


def _op_theta_from_expansion(ctx, p, i):
    frame = ctx.need_frame(i)
    dual = ctx.need_dual(i, "theta_from_expansion")
    try:
        t = cons.construct_theta_from_expansion(frame.x_ladder, frame, dual, seed=ctx.seed)
    except cons.ExpansionError as exc:
        raise StepError(i, "theta_from_expansion", str(exc)) from None
    axioms = check_ladder_axioms(t, p.get("samples", 200), ctx.seed, tol=ctx.tol["monotonicity"])
    return axioms.passed, {"ladder": t.to_dict(), "axioms": axioms.to_dict()}


OPERATIONS = {
    "axioms": _op_axioms,
    "bounds": _op_bounds,
    "dual": _op_dual,
    "expansions": _op_expansions,
    "range": _op_range,
    "A1": _op_a1,
    "A2": _op_a2,
    "A3": _op_a3,
    "dominance": _op_dominance,
    "solidity": _op_solidity,
    "tilde": _op_tilde,
    "construct_x": _op_construct_x,
    "construct_theta": _op_construct_theta,
    "cb_test": _op_cb_test,
    "theta_from_expansion": _op_theta_from_expansion,
}


# ---------------------------------------------------------------------------
# config handling

def _normalize_config(config):
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    config = copy.deepcopy(config)
    if "seed" not in config:
        raise ConfigError("config needs a 'seed'")
    if not isinstance(config["seed"], int) or isinstance(config["seed"], bool):
        raise ConfigError("'seed' must be an integer")
    version = config.setdefault("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}")
    if "model" in config and "frame" in config:
        raise ConfigError("give either 'model' or 'frame', not both")
    steps = []
    for k, step in enumerate(config.get("pipeline", [])):
        if isinstance(step, str):
            step = {"op": step, "params": {}}
        if not isinstance(step, dict) or "op" not in step:
            raise ConfigError("pipeline entries need an 'op'", step=k)
        if step["op"] not in OPERATIONS:
            raise ConfigError(f"unknown operation {step['op']!r}", step=k)
        steps.append({"op": step["op"], "params": dict(step.get("params", {}))})
    config["pipeline"] = steps
    try:
        resolve(config.get("tolerances"))
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    return config


def run(config):
    """Execute a config and return a :class:`RunReport`.

    Raises
    ------
    ConfigError
        Malformed config, unknown operation, or a step that needs an
        undefined frame.
    StepError
        A step's precondition failed (for example no reconstruction
        operator exists).
    """
    start = time.perf_counter()
    config = _normalize_config(config)
    try:
        ctx = _Context(config)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot build the model: {exc}") from None
    steps = []
    for i, step in enumerate(config["pipeline"]):
        op, params = step["op"], step["params"]
        log.info("step %d: %s", i, op)
        try:
            passed, result = OPERATIONS[op](ctx, params, i)
        except (ConfigError, StepError):
            raise
        except (ValueError, NotImplementedError, kernel.SolverError) as exc:
            raise StepError(i, op, str(exc)) from None
        steps.append({"index": i, "op": op, "params": params, "passed": bool(passed),
                      "result": _plain(result)})
    passed = all(s["passed"] for s in steps)
    return RunReport(config, _plain(ctx.describe()), steps, passed,
                     round(time.perf_counter() - start, 6))


def _plain(obj):
    """Convert numpy scalars/arrays so the report is plain JSON."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def report_json(report):
    d = report.to_dict() if isinstance(report, RunReport) else report
    return json.dumps(d, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv_text(rows, header):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def summary_csv(report):
    """Flat per-level table: level, A, B, tight, residual_primal, residual_dual."""
    d = report.to_dict() if isinstance(report, RunReport) else report
    table = {}
    for step in d["steps"]:
        if step["op"] == "bounds":
            for b in step["result"]["bounds"]:
                table.setdefault(b["level"], {}).update(A=b["A"], B=b["B"], tight=b["tight"])
        elif step["op"] == "expansions":
            r = step["result"]
            for s, rp, rd in zip(r["levels"], r["residual_primal"], r["residual_dual"]):
                table.setdefault(s, {}).update(residual_primal=rp, residual_dual=rd)
    cols = ("A", "B", "tight", "residual_primal", "residual_dual")
    rows = [[s] + [table[s].get(c, "") for c in cols] for s in sorted(table)]
    return _csv_text(rows, ("level",) + cols)


def emit_decay_curves(report, path):
    """Write the partial-sum residual curves as CSV (n, level, residual).

    Raises
    ------
    ValueError
        The report contains no expansion step ("nothing to emit").
    """
    d = report.to_dict() if isinstance(report, RunReport) else report
    rows = []
    for step in d["steps"]:
        if step["op"] != "expansions":
            continue
        r = step["result"]
        for s, curve in zip(r["levels"], r["partial_sums"]):
            rows.extend([n + 1, s, v] for n, v in enumerate(curve))
    if not rows:
        raise ValueError("nothing to emit")
    path = Path(path)
    path.write_text(_csv_text(rows, ("n", "level", "residual")), encoding="utf-8", newline="")
    return path


def write_outputs(report, out_dir, name="report"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{name}.json", out / f"{name}.csv"]
    paths[0].write_text(report_json(report), encoding="utf-8")
    paths[1].write_text(summary_csv(report), encoding="utf-8", newline="")
    try:
        paths.append(emit_decay_curves(report, out / f"{name}_decay.csv"))
    except ValueError:
        pass
    return paths


# ---------------------------------------------------------------------------
# presets

_PRESET_PIPELINES = {
    "weighted_shift": ["axioms", "bounds", "dual", "expansions", "A1", "A2", "A3"],
    "hermite": ["axioms", "bounds", "construct_theta", "expansions", "cb_test",
                "dominance", "solidity"],
    "lp_shift_invariant": ["axioms", "bounds", "expansions", "range", "construct_x",
                           "dominance", "solidity"],
    "coordinate": ["axioms", "bounds", "construct_x", "expansions", "A1", "A3",
                   "theta_from_expansion"],
}
PRESETS = tuple(_PRESET_PIPELINES)


def preset_config(name, seed=0):
    if name not in _PRESET_PIPELINES:
        raise ConfigError(f"unknown preset {name!r}; expected one of {PRESETS}")
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "model": {"name": name, "truncation": 8, "levels": 4, "params": {}},
        "pipeline": list(_PRESET_PIPELINES[name]),
        "output": {"name": name},
    }


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="fframes", description="Run a frame/ladder experiment pipeline.")
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="experiment config (JSON)")
    src.add_argument("--preset", choices=PRESETS, help="built-in model and pipeline")
    parser.add_argument("--out", type=Path, help="output directory (default: print JSON)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.preset:
            config = preset_config(args.preset)
        else:
            config = json.loads(args.config.read_text(encoding="utf-8"))
        if args.seed is not None:
            config["seed"] = args.seed
        report = run(config)
    except (ConfigError, StepError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        name = report.config.get("output", {}).get("name", "report")
        for p in write_outputs(report, args.out, name):
            log.info("wrote %s", p)
    else:
        sys.stdout.write(report_json(report))
    print("summary: " + ("pass" if report.passed else "fail"), file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
