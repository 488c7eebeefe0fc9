"""Run configuration and the documents produced by each subcommand.

Functions here return plain dicts and CSV rows; :mod:`cpve.cli` writes them.
Nothing that depends on the worker count or output location enters a
document, so identical configurations give byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from . import criteria, martingale
from .exact import (DEFAULT_STATE_CAP, BudgetError, exact_moments,
                    extinction_bounds, propagate)
from .model import ModelSpec
from .simulate import DEFAULT_POP_CAP, monte_carlo

SUBCOMMANDS = ("simulate", "exact", "criteria", "martingale", "report")
STOCHASTIC = ("simulate", "martingale", "report")


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        from . import __version__
        return __version__


@dataclass
class RunConfig:
    model_path: str
    subcommand: str
    horizon: int = 50
    replications: int = 10_000
    seed: int | None = None
    eps: float = 1e-12
    band: int = 20
    pop_cap: int = DEFAULT_POP_CAP
    state_cap: int = DEFAULT_STATE_CAP
    absorb_above: int | None = None
    exact_horizon: int | None = None
    martingale_horizon: int = 12
    k_max: int = criteria.K_MAX
    n_max: int = criteria.N_MAX
    s_grid: tuple[float, ...] = criteria.S_GRID
    delta: float | None = None
    delta_prime: float | None = None
    matrix_n: int = 20
    matrix_k: int = 50
    workers: int = field(default=1, metadata={"document": False})
    output_dir: str = field(default=".", metadata={"document": False})
    pmf_json: bool = field(default=False, metadata={"document": False})

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {self.subcommand!r}")
        if self.subcommand in STOCHASTIC and self.seed is None:
            raise ValueError(f"--seed is required for '{self.subcommand}'")
        if self.seed is not None and self.seed < 0:
            raise ValueError("--seed must be a non-negative integer")
        for name in ("horizon", "replications", "band", "pop_cap", "state_cap", "martingale_horizon",
                     "k_max", "n_max", "matrix_n", "matrix_k", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"--{name.replace('_', '-')} must be positive, got {getattr(self, name)}")
        for name in ("absorb_above", "exact_horizon"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"--{name.replace('_', '-')} must be positive, got {v}")
        if not (self.eps > 0 and self.eps < 1):
            raise ValueError(f"--eps must lie in (0, 1), got {self.eps}")
        if any(not 0 <= s < 1 for s in self.s_grid):
            raise ValueError("--s-grid points must lie in [0, 1)")

    def document(self) -> dict:
        keep = {f for f, spec in self.__dataclass_fields__.items() if spec.metadata.get("document", True)}
        d = {k: v for k, v in asdict(self).items() if k in keep}
        d["s_grid"] = list(d["s_grid"])
        return d


# --------------------------------------------------------------------------
# JSON helpers


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "unbounded" if x > 0 else "-unbounded"
        return x
    return obj


def dumps(doc) -> str:
    return json.dumps(to_jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def load_schema(name: str) -> dict:
    return json.loads(resources.files("cpve").joinpath("schemas", f"{name}.schema.json").read_text())


# --------------------------------------------------------------------------
# per-subcommand documents


def mc_rows(rep) -> list[list]:
    return [[n, rep.extinct_by_gen[n], rep.mean_z[n], rep.mid_band_by_gen[n]] for n in range(rep.horizon + 1)]


MC_HEADER = ["n", "extinct_freq", "mean_z", "mid_band_freq"]
EXACT_HEADER = ["n", "q_low", "q_high", "mean_low", "mean_high"]
MARTINGALE_HEADER = ["n", "ew_low", "ew_high", "ew2_low", "ew2_high", "p_w_positive"]


def run_simulate(model: ModelSpec, cfg: RunConfig):
    return monte_carlo(model, cfg.horizon, cfg.replications, cfg.seed, band=cfg.band,
                       pop_cap=cfg.pop_cap, workers=cfg.workers)


def run_exact(model: ModelSpec, cfg: RunConfig):
    """``(pmfs, rows)`` for the exact engine; raises BudgetError."""
    horizon = cfg.exact_horizon or cfg.horizon
    pmfs = propagate(model, horizon, cfg.eps, state_cap=cfg.state_cap, absorb_above=cfg.absorb_above)
    q = extinction_bounds(pmfs)
    mom = exact_moments(pmfs, cfg.state_cap)
    rows = [[n, q[n][0], q[n][1], mom[n][0][0], mom[n][0][1]] for n in range(len(pmfs))]
    return pmfs, rows


def run_criteria(model: ModelSpec, cfg: RunConfig):
    bundle = criteria.criteria_bundle(model, k_max=cfg.k_max, n_max=cfg.n_max, s_grid=cfg.s_grid,
                                      delta=cfg.delta, delta_prime=cfg.delta_prime, eps=cfg.eps)
    mat = criteria.growth_rate_matrix(model, cfg.matrix_n, cfg.matrix_k)
    return bundle, mat


def matrix_rows(mat: np.ndarray):
    header = ["n"] + [f"k={k}" for k in range(1, mat.shape[1] + 1)]
    return header, [[n] + row.tolist() for n, row in enumerate(mat)]


def run_martingale(model: ModelSpec, cfg: RunConfig, mc=None):
    """MC-based W statistics, CSV rows and the W_H histogram."""
    norm = martingale.build_normalizer(model, cfg.horizon)
    mc = mc if mc is not None else run_simulate(model, cfg)
    ws = martingale.w_statistics(mc, norm)
    rows = [[n, ws.mean_w_ci[n][0], ws.mean_w_ci[n][1], ws.second_w_ci[n][0], ws.second_w_ci[n][1],
             ws.p_w_positive_by_gen[n]] for n in range(cfg.horizon + 1)]
    hist = martingale.w_histogram(mc.w_samples_at_horizon)
    hist.update({"horizon": cfg.horizon, "seed": cfg.seed, "replications": cfg.replications,
                 "exploded": ws.exploded})
    return ws, rows, hist, norm


def _exact_martingale(model: ModelSpec, cfg: RunConfig) -> dict:
    H = cfg.martingale_horizon
    out = {"horizon": H}
    try:
        sm = martingale.supermartingale_check(model, H, cfg.eps, cfg.state_cap)
        out["mean_w"] = {"intervals": sm.intervals, "non_increasing": sm.non_increasing}
    except BudgetError as exc:
        out["mean_w"] = {"status": f"budget exceeded: {exc}"}
    except ValueError as exc:
        out["mean_w"] = {"status": f"not applicable: {exc}"}
    try:
        sr = martingale.second_moment_recursion(model, H, cfg.eps, cfg.state_cap)
        out["second_moment"] = {
            "direct": [r.direct for r in sr.rows], "recursive": [r.recursive for r in sr.rows],
            "max_rel_err": sr.max_rel_err, "non_decreasing": sr.non_decreasing, "bounded": sr.bounded,
            "increment_ratio": sr.increment_ratio}
    except BudgetError as exc:
        out["second_moment"] = {"status": f"budget exceeded: {exc}"}
    try:
        out["initial_size_profile"] = martingale.prop1_profile(model, min(H, 8), eps=cfg.eps,
                                                               state_cap=cfg.state_cap)
    except ValueError as exc:
        out["initial_size_profile"] = {"status": f"not applicable: {exc}"}
    return out


def run_report(model: ModelSpec, cfg: RunConfig) -> dict:
    """Combined document: criteria, growth matrix, exact brackets, MC and W statistics."""
    bundle, mat = run_criteria(model, cfg)
    doc = {
        "tool": {"name": "cpve", "version": tool_version()},
        "config": cfg.document(),
        "model": model.to_dict(),
        "criteria": bundle,
        "growth_rate_matrix": {"rows": "n = 0..n-1", "columns": "k = 1..k_max", "values": mat},
    }
    ecfg = RunConfig(**{**asdict(cfg), "exact_horizon": cfg.exact_horizon or min(cfg.horizon, 60),
                        "absorb_above": cfg.absorb_above or min(2**18, cfg.state_cap)})
    try:
        pmfs, rows = run_exact(model, ecfg)
        doc["exact"] = {"status": "ok", "horizon": len(pmfs) - 1, "absorb_above": ecfg.absorb_above,
                        "columns": EXACT_HEADER, "rows": rows, "leaked": pmfs[-1].leaked,
                        "escaped": pmfs[-1].escaped, "escape_bound": pmfs[-1].escape_bound}
    except BudgetError as exc:
        doc["exact"] = {"status": f"budget exceeded: {exc}"}
    mc = run_simulate(model, cfg)
    try:
        ws, _, hist, norm = run_martingale(model, cfg, mc)
        doc["martingale"] = {"status": "ok", "tau": norm.tau, "log_r": norm.log_r,
                             "first_index_tau_m_ge_eta": norm.first_index,
                             "monotone_ratio_ok": norm.monotone_ratio_ok,
                             "w_statistics": ws.to_dict(), "w_histogram": hist,
                             "exact": _exact_martingale(model, cfg)}
    except martingale.NormalizerError as exc:
        doc["martingale"] = {"status": f"not applicable: {exc}"}
    doc["monte_carlo"] = {k: v for k, v in mc.to_dict().items() if k != "w_samples_at_horizon"}
    return doc
