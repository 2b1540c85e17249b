"""Problem configuration JSON and CSV artifacts.

Config schema:

    {
      "name": "my_game",                       # optional
      "diffusion": {"mu": "0", "sigma": "1", "r": 0.1,
                    "alpha": "-inf", "beta": "inf"},
      "payoffs": {"f": <fn>, "g": <fn>, "h": <fn>},
      "grid": {"n": 4001, "alpha_num": -5.0, "beta_num": 5.0}
    }

A function descriptor <fn> is either a single expression string in x or a
list of {"interval": [a, b], "expr": "..."} pieces covering the truncated
domain.  CSV floats are printed with 17 significant digits so a written value
table re-ingests bit-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .problem import ProblemConfig


def _num(raw, where: str) -> float:
    if isinstance(raw, str):
        s = raw.strip().lower()
        if s in ("-inf", "-infinity"):
            return float("-inf")
        if s in ("inf", "+inf", "infinity"):
            return float("inf")
        raise ValidationError(f"{where}: expected a number, got {raw!r}")
    if raw is None:
        raise ValidationError(f"{where}: missing value")
    try:
        return float(raw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: expected a number, got {raw!r}") from exc


def _fn(raw, where: str):
    if isinstance(raw, str):
        return raw
    if isinstance(raw, (int, float)):
        return str(raw)
    if isinstance(raw, list):
        for i, piece in enumerate(raw):
            if not isinstance(piece, dict) or "interval" not in piece \
                    or "expr" not in piece:
                raise ValidationError(
                    f"{where}[{i}]: each piece needs 'interval' and 'expr'")
            if len(piece["interval"]) != 2:
                raise ValidationError(f"{where}[{i}].interval: expected [a, b]")
        return raw
    raise ValidationError(f"{where}: expected an expression string or piece list")


def parse_config(doc: dict, name: str = "problem") -> ProblemConfig:
    if not isinstance(doc, dict):
        raise ValidationError("config root must be a JSON object")
    for key in ("diffusion", "payoffs", "grid"):
        if key not in doc:
            raise ValidationError(f"config: missing section '{key}'")
    diff = doc["diffusion"]
    pay = doc["payoffs"]
    grid = doc["grid"]
    for key in ("mu", "sigma", "r"):
        if key not in diff:
            raise ValidationError(f"diffusion: missing field '{key}'")
    for key in ("f", "g", "h"):
        if key not in pay:
            raise ValidationError(f"payoffs: missing field '{key}'")
    r = _num(diff["r"], "diffusion.r")
    if r < 0:
        raise ValidationError("diffusion.r: must be >= 0")
    alpha = _num(diff.get("alpha", "-inf"), "diffusion.alpha")
    beta = _num(diff.get("beta", "inf"), "diffusion.beta")
    n = grid.get("n", 2001)
    if not isinstance(n, int) or n < 3:
        raise ValidationError("grid.n: must be an integer >= 3")
    a_num = grid.get("alpha_num", alpha if np.isfinite(alpha) else None)
    b_num = grid.get("beta_num", beta if np.isfinite(beta) else None)
    if a_num is not None:
        a_num = _num(a_num, "grid.alpha_num")
    if b_num is not None:
        b_num = _num(b_num, "grid.beta_num")
    if a_num is not None and b_num is not None and not a_num < b_num:
        raise ValidationError("grid: need alpha_num < beta_num")
    return ProblemConfig(
        mu=_fn(diff["mu"], "diffusion.mu"), sigma=_fn(diff["sigma"], "diffusion.sigma"),
        r=r, alpha=alpha, beta=beta,
        f=_fn(pay["f"], "payoffs.f"), g=_fn(pay["g"], "payoffs.g"),
        h=_fn(pay["h"], "payoffs.h"),
        grid_n=n, alpha_num=a_num, beta_num=b_num,
        name=doc.get("name", name))


def load_config(path) -> ProblemConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno}, "
                              f"column {exc.colno}: {exc.msg}") from exc
    return parse_config(doc, name=path.stem)


VALUE_COLUMNS = ("x", "f", "g", "h", "f_tilde", "g_tilde", "v",
                 "in_d1", "in_d2", "residual")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_value_csv(path, sol, payoffs) -> None:
    grid = sol.grid
    fv, gv, hv = payoffs.values(grid)
    cols = (grid, fv, gv, hv, sol.f_tilde, sol.g_tilde, sol.v,
            sol.d1_mask.astype(int), sol.d2_mask.astype(int), sol.residual)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(VALUE_COLUMNS) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) if i not in (7, 8) else str(int(v))
                              for i, v in enumerate(row)) + "\n")


def read_value_csv(path) -> dict:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    out = {}
    for j, name in enumerate(header):
        if name in ("in_d1", "in_d2"):
            out[name] = np.array([int(r[j]) for r in rows], dtype=bool)
        else:
            out[name] = np.array([float(r[j]) for r in rows])
    return out


def write_json(path, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
