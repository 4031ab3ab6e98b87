"""JSON file formats and their validation.

Floats are written with 17 significant digits so every double round-trips
exactly; tables keep one row per line to stay diffable.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .algorithm import Config, Problem, RunResult
from .combinatorics import dim_D, slot_keys
from .errors import ValidationError
from .jets import Domain, JetFunction, k_of_gamma
from .problems import AnalyticFamily, Gaussian, Monomial

FORMAT_VERSION = 1
DATASET_FORMAT = "holgrim-dataset"
POINTS_FORMAT = "holgrim-points"
RESULT_FORMAT = "holgrim-result"


# -- emitting ---------------------------------------------------------------

def _scalar(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"cannot serialise non-finite number {x}")
        text = format(x, ".17g")
        if not any(ch in text for ch in ".en"):
            text += ".0"
        return text
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _is_flat(seq) -> bool:
    return all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in seq)


def _emit(obj, indent: int) -> str:
    pad = "  " * indent
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {_emit(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if _is_flat(obj):
            return "[" + ", ".join(_scalar(v) for v in obj) + "]"
        items = [f"{pad}  {_emit(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _scalar(obj)


def dumps(obj) -> str:
    return _emit(obj, 0) + "\n"


def write(path, obj) -> None:
    Path(path).write_text(dumps(obj))


# -- parsing helpers --------------------------------------------------------

def read(path, expected_format: str) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValidationError("parse", f"{path}: line {err.lineno} column {err.colno}: {err.msg}") from None
    if not isinstance(data, dict):
        raise ValidationError("parse", f"{path}: top level must be an object")
    fmt = data.get("format")
    if fmt != expected_format:
        raise ValidationError("format", f"{path}: key 'format' is {fmt!r}, expected {expected_format!r}")
    if data.get("version") != FORMAT_VERSION:
        raise ValidationError("version", f"{path}: key 'version' is {data.get('version')!r}, expected {FORMAT_VERSION}")
    return data


def _get(obj: dict, key: str, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ValidationError("missing-key", f"missing key '{where}.{key}'")
    return obj[key]


def _array(value, where: str, shape=None) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError("bad-array", f"key '{where}' is not a rectangular numeric array") from None
    if shape is not None and arr.shape != shape:
        raise ValidationError("table-shape", f"key '{where}' has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("table-finite", f"key '{where}' contains non-finite values")
    return arr


def _int(value, where: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ValidationError("bad-header", f"key '{where}' must be an integer >= {minimum}, got {value!r}")
    return value


# -- datasets ---------------------------------------------------------------

def _feature_record(f) -> dict:
    if isinstance(f, Gaussian):
        return {"kind": "gaussian", "center": f.center, "width": f.width, "direction": f.direction}
    return {"kind": "monomial", "exponents": [int(e) for e in f.exponents], "direction": f.direction}


def _feature_from_record(rec: dict, where: str):
    kind = _get(rec, "kind", where)
    direction = _array(_get(rec, "direction", where), f"{where}.direction")
    if kind == "gaussian":
        return Gaussian(
            _array(_get(rec, "center", where), f"{where}.center"),
            float(_get(rec, "width", where)),
            direction,
        )
    if kind == "monomial":
        return Monomial(np.array(_get(rec, "exponents", where), dtype=int), direction)
    raise ValidationError("bad-analytic", f"key '{where}.kind' is {kind!r}")


def dataset_dict(problem: Problem) -> dict:
    d, k = problem.d, problem.k
    out = {
        "format": DATASET_FORMAT,
        "version": FORMAT_VERSION,
        "header": {
            "d": d,
            "c": problem.c,
            "gamma": problem.gamma,
            "size": problem.domain.size,
            "n": problem.n,
        },
        "points": problem.domain.points,
        "slots": [[j, list(m)] for j, m in slot_keys(d, k)],
        "features": [
            {"a": float(a), "A": float(A), "table": F.values}
            for a, A, F in zip(problem.a, problem.A, problem.features)
        ],
    }
    if problem.analytic is not None:
        out["analytic"] = {
            "box": [problem.analytic.box[0], problem.analytic.box[1]],
            "features": [_feature_record(f) for f in problem.analytic.features],
        }
    return out


def save_dataset(path, problem: Problem) -> None:
    write(path, dataset_dict(problem))


def problem_from_dict(data: dict, validate: bool = True) -> Problem:
    head = _get(data, "header", "dataset")
    d = _int(_get(head, "d", "header"), "header.d", 1)
    c = _int(_get(head, "c", "header"), "header.c", 1)
    size = _int(_get(head, "size", "header"), "header.size", 1)
    n = _int(_get(head, "n", "header"), "header.n", 1)
    gamma = _get(head, "gamma", "header")
    if isinstance(gamma, bool) or not isinstance(gamma, (int, float)) or not gamma > 0:
        raise ValidationError("bad-header", f"key 'header.gamma' must be a positive number, got {gamma!r}")
    k = k_of_gamma(gamma)
    D = dim_D(d, k)
    points = _array(_get(data, "points", "dataset"), "points", (size, d))
    slots = _get(data, "slots", "dataset")
    expected = [[j, list(m)] for j, m in slot_keys(d, k)]
    if slots != expected:
        raise ValidationError("slot-layout", f"key 'slots' does not list the {D} canonical slots for d={d}, k={k}")
    feats = _get(data, "features", "dataset")
    if not isinstance(feats, list) or len(feats) != n:
        raise ValidationError("feature-count", f"key 'features' must hold header.n = {n} entries")
    domain = Domain(points)
    jets, a, A = [], [], []
    for i, rec in enumerate(feats):
        where = f"features[{i}]"
        a.append(float(_array(_get(rec, "a", where), f"{where}.a")))
        A.append(float(_array(_get(rec, "A", where), f"{where}.A")))
        jets.append(JetFunction(domain, gamma, _array(_get(rec, "table", where), f"{where}.table", (size, D, c))))
    analytic = None
    if "analytic" in data:
        sec = data["analytic"]
        box = _array(_get(sec, "box", "analytic"), "analytic.box", (2, d))
        recs = _get(sec, "features", "analytic")
        if not isinstance(recs, list) or len(recs) != n:
            raise ValidationError("bad-analytic", f"key 'analytic.features' must hold {n} entries")
        analytic = AnalyticFamily(
            [_feature_from_record(r, f"analytic.features[{i}]") for i, r in enumerate(recs)],
            (box[0], box[1]),
        )
    return Problem(domain, jets, a, A, analytic=analytic, validate=validate)


def load_dataset(path, validate: bool = True) -> Problem:
    return problem_from_dict(read(path, DATASET_FORMAT), validate=validate)


# -- point sets -------------------------------------------------------------

def save_points(path, domain: Domain) -> None:
    write(path, {"format": POINTS_FORMAT, "version": FORMAT_VERSION, "d": domain.d, "size": domain.size, "points": domain.points})


def load_domain(path) -> Domain:
    """Domain from a point-set file or the points of a dataset file."""
    text = Path(path).read_text()
    try:
        fmt = json.loads(text).get("format")
    except (json.JSONDecodeError, AttributeError):
        fmt = None
    if fmt == DATASET_FORMAT:
        data = read(path, DATASET_FORMAT)
        head = _get(data, "header", "dataset")
        return Domain(_array(_get(data, "points", "dataset"), "points", (head.get("size"), head.get("d"))))
    data = read(path, POINTS_FORMAT)
    return Domain(_array(_get(data, "points", "points-file"), "points"))


# -- results ----------------------------------------------------------------

def config_dict(config: Config) -> dict:
    return {
        "epsilon": config.epsilon,
        "epsilon0": config.epsilon0,
        "order_level": config.q,
        "max_steps": config.max_steps,
        "shuffles": list(config.shuffles),
        "budgets": list(config.budgets),
        "seed": config.rng_seed,
    }


def result_dict(result: RunResult, config: Config, dataset: str | None = None) -> dict:
    steps = [
        {
            "index": st.index,
            "new_points": st.new_points,
            "seeds": st.seeds,
            "chosen_shuffle": st.chosen_shuffle,
            "scores": st.scores,
            "support": st.support,
            "coefficients": st.coefficients,
            "residual": st.residual,
            "achieved_residual": st.achieved_residual,
            "exceeded": st.exceeded,
            "max_lambda_q": float(st.lambda_q.max()),
            "max_lambda_k_selected": st.lambda_k_selected,
        }
        for st in result.steps
    ]
    return {
        "format": RESULT_FORMAT,
        "version": FORMAT_VERSION,
        "dataset": dataset,
        "config": config_dict(config),
        "steps_completed": result.steps_completed,
        "stop_reason": result.stop_reason,
        "criterion_met": result.criterion_met,
        "selected_points": result.selected_points,
        "support": result.support,
        "coefficients": result.coefficients,
        "certificates": {
            "C": result.C,
            "coefficient_sum": result.coefficient_sum,
            "final_residual": result.final_residual,
            "final_max_lambda_q": result.final_lambda_q,
            "min_separation": result.min_separation if math.isfinite(result.min_separation) else None,
        },
        "seeds": result.seeds,
        "reports": result.reports,
        "steps": steps,
        "timings": result.timings,
    }


def save_result(path, result: RunResult, config: Config, dataset: str | None = None) -> None:
    write(path, result_dict(result, config, dataset))


def load_result(path) -> dict:
    data = read(path, RESULT_FORMAT)
    for key in ("config", "support", "coefficients", "steps", "certificates"):
        _get(data, key, "result")
    return data


def rescore(problem: Problem, result: dict) -> dict:
    """Recompute every step's residual from its stored coefficients.

    Returns the largest absolute discrepancy against the reported values
    and the recomputed final residual.
    """
    q = _int(_get(result["config"], "order_level", "config"), "config.order_level")
    ws = problem.workspace()
    worst = 0.0
    final = None
    for i, st in enumerate(result["steps"]):
        where = f"steps[{i}]"
        support = np.array(_get(st, "support", where), dtype=np.intp)
        if len(support) and (support.min() < 0 or support.max() >= problem.n):
            raise ValidationError("support-range", f"key '{where}.support' indexes outside 0..{problem.n - 1}")
        coeffs = _array(_get(st, "coefficients", where), f"{where}.coefficients", (len(support),))
        final = ws.coefficient_score(support, coeffs, q)
        worst = max(worst, abs(final - float(_get(st, "residual", where))))
    return {"max_discrepancy": worst, "final_residual": final}
