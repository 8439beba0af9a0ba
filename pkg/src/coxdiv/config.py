"""Experiment configuration: one JSON document per experiment.

Numeric fields accept integers, floats, or exact fractions written as
strings ("141/700", "23/240"); fractions are parsed exactly because the
benchmark parameter sets are specified as rationals and the derived
premium must reproduce them bit for bit.
"""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .distributions import Distribution, distribution_from_dict
from .grid import StateGrid
from .model import ModelParams

__all__ = ["ConfigError", "MCSettings", "ExperimentConfig", "load_config", "config_from_dict", "parse_number"]


class ConfigError(ValueError):
    pass


def parse_number(value, where: str):
    """ints and fraction strings parse exactly; floats pass through."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a bool")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{where}: cannot parse {value!r} as a rational") from exc
    raise ConfigError(f"{where}: expected a number or fraction string, got {type(value).__name__}")


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return mapping[key]


def _parse_distribution(d, where: str) -> Distribution:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping")
    kind = _require(d, "kind", where)
    try:
        if kind == "exponential":
            return distribution_from_dict({"kind": kind, "rate": parse_number(_require(d, "rate", where), where)})
        if kind == "erlang":
            shape = _require(d, "shape", where)
            if not isinstance(shape, int) or isinstance(shape, bool):
                raise ConfigError(f"{where}: shape must be an integer")
            return distribution_from_dict({"kind": kind, "shape": shape, "rate": parse_number(_require(d, "rate", where), where)})
        if kind == "deterministic":
            return distribution_from_dict({"kind": kind, "value": parse_number(_require(d, "value", where), where)})
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: unknown kind {kind!r} (expected exponential, erlang or deterministic)")


@dataclass(frozen=True)
class MCSettings:
    n_paths: int = 100_000
    seed: int = 20240901
    probe_cells: tuple = ()
    horizon: float | None = None  # None: derived from the truncation bound
    rel_tail: float = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    params: ModelParams
    delta: numbers.Real
    delta_lambda: numbers.Real
    m_max: int
    tol: float = 1e-8
    max_iter: int = 200_000
    quad_order: int = 16
    refine_tol_rel: float = 0.02
    m_top_tol_rel: float = 0.01
    mc: MCSettings = field(default_factory=MCSettings)
    outdir: str = "out"

    def grid(self) -> StateGrid:
        return StateGrid.for_model(self.params, self.delta, self.delta_lambda, self.m_max)

    def resolved(self) -> dict:
        """Fully-resolved settings for report provenance (fractions as strings)."""

        def num(v):
            return str(v) if isinstance(v, Fraction) else v

        g = self.grid()
        return {
            "name": self.name,
            "model": {
                "lambda_floor": num(self.params.lambda_floor),
                "beta": num(self.params.beta),
                "decay": num(self.params.decay),
                "discount": num(self.params.discount),
                "loading": num(self.params.loading),
                "claim_law": self.params.claim_law.to_dict(),
                "jump_law": self.params.jump_law.to_dict(),
                "premium": num(self.params.premium),
                "lambda_av": num(self.params.lambda_av),
            },
            "grid": {
                "delta": num(self.delta),
                "delta_lambda": num(self.delta_lambda),
                "m_max": self.m_max,
                "step": g.surplus.step,
                "n_max": g.surplus.n_max,
            },
            "solver": {
                "tol": self.tol,
                "max_iter": self.max_iter,
                "quad_order": self.quad_order,
                "refine_tol_rel": self.refine_tol_rel,
                "m_top_tol_rel": self.m_top_tol_rel,
            },
            "mc": {
                "n_paths": self.mc.n_paths,
                "seed": self.mc.seed,
                "probe_cells": [list(c) for c in self.mc.probe_cells],
                "horizon": self.mc.horizon,
                "rel_tail": self.mc.rel_tail,
            },
            "output": {"directory": self.outdir},
        }


def _positive(v, where):
    if v <= 0:
        raise ConfigError(f"{where}: must be > 0")
    return v


def config_from_dict(doc: dict, name: str = "experiment") -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    model = _require(doc, "model", "config")
    if not isinstance(model, dict):
        raise ConfigError("config.model: expected a mapping")
    lam_floor = parse_number(_require(model, "lambda_floor", "model.lambda_floor"), "model.lambda_floor")
    beta = parse_number(_require(model, "beta", "model.beta"), "model.beta")
    decay = parse_number(_require(model, "decay", "model.decay"), "model.decay")
    discount = parse_number(_require(model, "discount", "model.discount"), "model.discount")
    loading = parse_number(_require(model, "loading", "model.loading"), "model.loading")
    claim_law = _parse_distribution(_require(model, "claim_law", "model.claim_law"), "model.claim_law")
    jump_law = _parse_distribution(_require(model, "jump_law", "model.jump_law"), "model.jump_law")
    if lam_floor < 0:
        raise ConfigError("model.lambda_floor: must be >= 0")
    if beta < 0:
        raise ConfigError("model.beta: must be >= 0")
    _positive(decay, "model.decay")
    _positive(discount, "model.discount")
    if loading <= -1:
        raise ConfigError("model.loading: must be > -1")
    try:
        params = ModelParams(
            lambda_floor=lam_floor,
            beta=beta,
            decay=decay,
            discount=discount,
            loading=loading,
            claim_law=claim_law,
            jump_law=jump_law,
        )
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc

    grid = _require(doc, "grid", "config")
    if not isinstance(grid, dict):
        raise ConfigError("config.grid: expected a mapping")
    delta = _positive(parse_number(_require(grid, "delta", "grid.delta"), "grid.delta"), "grid.delta")
    delta_lambda = _positive(
        parse_number(_require(grid, "delta_lambda", "grid.delta_lambda"), "grid.delta_lambda"), "grid.delta_lambda"
    )
    m_max = _require(grid, "m_max", "grid.m_max")
    if not isinstance(m_max, int) or isinstance(m_max, bool) or m_max < 0:
        raise ConfigError("grid.m_max: must be a non-negative integer")
    if lam_floor == 0 and m_max == 0:
        raise ConfigError("grid.m_max: a zero floor intensity needs at least one intensity row")

    solver = doc.get("solver", {})
    if not isinstance(solver, dict):
        raise ConfigError("config.solver: expected a mapping")
    tol = float(solver.get("tol", 1e-8))
    max_iter = int(solver.get("max_iter", 200_000))
    quad_order = int(solver.get("quad_order", 16))
    refine_tol_rel = float(solver.get("refine_tol_rel", 0.02))
    m_top_tol_rel = float(solver.get("m_top_tol_rel", 0.01))
    if tol <= 0 or max_iter < 1 or quad_order < 2:
        raise ConfigError("config.solver: tol > 0, max_iter >= 1, quad_order >= 2 required")

    mc_doc = doc.get("mc", {})
    if not isinstance(mc_doc, dict):
        raise ConfigError("config.mc: expected a mapping")
    probe_cells = []
    for cell in mc_doc.get("probe_cells", []):
        if not (isinstance(cell, (list, tuple)) and len(cell) == 2 and all(isinstance(c, int) for c in cell)):
            raise ConfigError("mc.probe_cells: entries must be [n, m] integer pairs")
        probe_cells.append((cell[0], cell[1]))
    mc = MCSettings(
        n_paths=int(mc_doc.get("n_paths", 100_000)),
        seed=int(mc_doc.get("seed", 20240901)),
        probe_cells=tuple(probe_cells),
        horizon=(float(mc_doc["horizon"]) if mc_doc.get("horizon") is not None else None),
        rel_tail=float(mc_doc.get("rel_tail", 1e-3)),
    )
    if mc.n_paths < 2:
        raise ConfigError("mc.n_paths: must be >= 2")

    output = doc.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("config.output: expected a mapping")
    outdir = str(output.get("directory", f"out/{name}"))

    cfg = ExperimentConfig(
        name=name,
        params=params,
        delta=delta,
        delta_lambda=delta_lambda,
        m_max=m_max,
        tol=tol,
        max_iter=max_iter,
        quad_order=quad_order,
        refine_tol_rel=refine_tol_rel,
        m_top_tol_rel=m_top_tol_rel,
        mc=mc,
        outdir=outdir,
    )
    g = cfg.grid()
    for n, m in cfg.mc.probe_cells:
        if not (0 <= n <= g.surplus.n_max and 0 <= m <= g.intensity.m_max):
            raise ConfigError(f"mc.probe_cells: cell ({n}, {m}) is outside the grid")
    return cfg


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {p}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
    return config_from_dict(doc, name=doc.get("name", p.stem))
