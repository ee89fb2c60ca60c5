"""Monte Carlo sweeps over (r, t) grids and result persistence."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
import csv
import json
import logging
import math
import os
import time

import numpy as np

from . import __version__
from .bounds import (
    DEFAULT_N_MATRICES,
    BoundCurve,
    BoundKind,
    RiskStats,
    bistochastic_mc_curve,
    bound_curve,
)
from .errors import ConfigInvalid, InvalidArgs
from .learning import METHODS, PERFECT, OptimizerConfig, perfect_learner, risk, variational_learner
from .sampling import GENERIC, ORTHONORMAL, STYLES, SeedSpec, haar_unitary, training_set

log = logging.getLogger(__name__)

# stream indices: one per kind of random object, so changing n_sets never
# shifts the sequence of target unitaries
UNITARY_STREAM = 0
SET_STREAM = 1
LEARNER_STREAM = 2
BOUNDS_STREAM = 3

GRID_HEADER = ["d", "r", "t", "n_unitaries", "n_sets", "mean_risk", "sample_std", "stderr", "learner"]
BOUNDS_HEADER = ["kind", "d", "r", "t", "value", "stderr"]


@dataclass
class ExperimentConfig:
    d: int
    r_values: list
    t_values: list
    n_unitaries: int = 10
    n_sets: int = 100
    learner: str = PERFECT
    set_style: str = GENERIC
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    master_seed: int = 0
    bounds_requested: list = field(default_factory=lambda: [BoundKind.quantum_nfl])
    output_path: str = "results"

    def __post_init__(self):
        self.validate()

    def validate(self):
        def need(ok, name, msg):
            if not ok:
                raise ConfigInvalid(name, msg)

        need(isinstance(self.d, int) and self.d >= 2, "d", "must be an integer >= 2")
        for name in ("r_values", "t_values"):
            vals = getattr(self, name)
            need(isinstance(vals, list) and all(isinstance(v, int) for v in vals), name, "must be a list of integers")
        need(all(1 <= r <= self.d for r in self.r_values), "r_values", f"ranks must lie in [1, {self.d}]")
        need(all(t >= 0 for t in self.t_values), "t_values", "must be non-negative")
        for name in ("n_unitaries", "n_sets"):
            v = getattr(self, name)
            need(isinstance(v, int) and v >= 1, name, "must be an integer >= 1")
        need(self.learner in METHODS, "learner", f"must be one of {', '.join(METHODS)}")
        need(self.set_style in STYLES, "set_style", f"must be one of {', '.join(STYLES)}")
        need(isinstance(self.optimizer, OptimizerConfig), "optimizer", "must be an optimizer config")
        if self.learner == "variational_shots":
            need(self.optimizer.shots is not None, "optimizer", "variational_shots needs optimizer.shots")
        need(isinstance(self.master_seed, int) and 0 <= self.master_seed < 1 << 64,
             "master_seed", "must be an unsigned 64-bit integer")
        try:
            self.bounds_requested = [BoundKind(k) for k in self.bounds_requested]
        except ValueError as exc:
            raise ConfigInvalid("bounds_requested", str(exc)) from None
        need(isinstance(self.output_path, str) and self.output_path, "output_path", "must be a non-empty string")

    def grid_points(self):
        """Valid (r, t) pairs in sweep order; pairs with r*t > d are skipped."""
        points = []
        for r in self.r_values:
            for t in self.t_values:
                if r * t > self.d:
                    if self.set_style == ORTHONORMAL:
                        log.info("skipping r=%d t=%d: r*t exceeds d=%d for orthonormal sets", r, t, self.d)
                    else:
                        log.info("skipping r=%d t=%d: r*t exceeds d=%d", r, t, self.d)
                    continue
                points.append((r, t))
        return points

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "optimizer":
                v = asdict(v)
            elif f.name == "bounds_requested":
                v = [k.value for k in v]
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigInvalid("<root>", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigInvalid(key, "unknown key")
        for key in ("d", "r_values", "t_values"):
            if key not in data:
                raise ConfigInvalid(key, "missing required key")
        data = dict(data)
        if "optimizer" in data:
            opt = data["optimizer"]
            if not isinstance(opt, dict):
                raise ConfigInvalid("optimizer", "must be an object")
            opt_known = {f.name for f in fields(OptimizerConfig)}
            for key in opt:
                if key not in opt_known:
                    raise ConfigInvalid(f"optimizer.{key}", "unknown key")
            try:
                data["optimizer"] = OptimizerConfig(**opt)
            except (InvalidArgs, TypeError) as exc:
                raise ConfigInvalid("optimizer", str(exc)) from None
        return cls(**data)


def load_config(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid("<file>", f"invalid JSON: {exc}") from None
    return ExperimentConfig.from_dict(data)


@dataclass
class ExperimentResult:
    config_echo: ExperimentConfig
    grid: list
    curves: list
    wall_time_seconds: float = 0.0
    code_version: str = __version__

    def to_dict(self):
        """JSON-ready document. Wall time is left out so reruns are byte-identical."""
        return {
            "config_echo": self.config_echo.to_dict(),
            "grid": [asdict(g) for g in self.grid],
            "curves": [
                {"kind": c.kind.value, "d": c.d, "r": c.r,
                 "points": [[t, v] for t, v in c.points], "mc_stderr": c.mc_stderr}
                for c in self.curves
            ],
            "code_version": self.code_version,
        }

    @classmethod
    def from_dict(cls, data):
        cfg = ExperimentConfig.from_dict(data["config_echo"])
        grid = [RiskStats(**g) for g in data["grid"]]
        curves = [
            BoundCurve(BoundKind(c["kind"]), c["d"], c["r"], [(t, v) for t, v in c["points"]], c["mc_stderr"])
            for c in data["curves"]
        ]
        return cls(cfg, grid, curves, 0.0, data["code_version"])


def _trial_block(cfg, r, t, i):
    """Run the n_sets trials that share target unitary number ``i`` at (r, t)."""
    d = cfg.d
    u = haar_unitary(d, SeedSpec(cfg.master_seed, UNITARY_STREAM, (r, t, i)))
    risks = np.empty(cfg.n_sets)
    non_converged = 0
    for j in range(cfg.n_sets):
        s = training_set(u, r, r, t, cfg.set_style, SeedSpec(cfg.master_seed, SET_STREAM, (r, t, i, j)))
        lseed = SeedSpec(cfg.master_seed, LEARNER_STREAM, (r, t, i, j))
        if cfg.learner == PERFECT:
            h = perfect_learner(u, s, lseed)
        else:
            h = variational_learner(u, s, cfg.optimizer, lseed)
            non_converged += not h.converged
        risks[j] = risk(u, h.v)
    return risks, non_converged


def _run_item(args):
    return _trial_block(*args)


def summarize(d, r, t, n_unitaries, n_sets, risks, non_converged=0):
    risks = np.asarray(risks, dtype=float)
    n = risks.size
    std = float(np.std(risks, ddof=1)) if n > 1 else 0.0
    extra = {"min_risk": float(risks.min()), "max_risk": float(risks.max())}
    return RiskStats(d, r, t, n_unitaries, n_sets, float(np.mean(risks)), std, std / math.sqrt(n),
                     non_converged, extra)


def _curves(cfg):
    curves = []
    for kind in cfg.bounds_requested:
        if kind is BoundKind.quantum_nfl:
            curves.extend(bound_curve(kind, cfg.d, cfg.t_values, r=r) for r in cfg.r_values)
        elif kind is BoundKind.classical_bistochastic_mc:
            curves.append(bistochastic_mc_curve(cfg.d, cfg.t_values, DEFAULT_N_MATRICES,
                                                SeedSpec(cfg.master_seed, BOUNDS_STREAM)))
        else:
            curves.append(bound_curve(kind, cfg.d, cfg.t_values))
    return curves


def run_sweep(cfg, threads=1, progress=None):
    """Run every (r, t) grid point of ``cfg`` and attach the requested bounds.

    Work is split into one item per (grid point, target unitary). Items are
    independent and seeded by their coordinates, and results are collected in
    submission order, so the output does not depend on ``threads``.
    """
    cfg.validate()
    start = time.perf_counter()
    points = cfg.grid_points()
    items = [(cfg, r, t, i) for r, t in points for i in range(cfg.n_unitaries)]
    if threads is None:
        threads = os.cpu_count() or 1
    if threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(_run_item, items, chunksize=max(1, len(items) // (4 * threads))))
    else:
        blocks = []
        for k, item in enumerate(items):
            blocks.append(_run_item(item))
            if progress:
                progress(k + 1, len(items))
    grid = []
    for p, (r, t) in enumerate(points):
        chunk = blocks[p * cfg.n_unitaries:(p + 1) * cfg.n_unitaries]
        risks = np.concatenate([b[0] for b in chunk])
        grid.append(summarize(cfg.d, r, t, cfg.n_unitaries, cfg.n_sets, risks, sum(b[1] for b in chunk)))
    curves = _curves(cfg)
    return ExperimentResult(cfg, grid, curves, time.perf_counter() - start)


def run_classical_mc(kind, d, t_values, n_matrices=DEFAULT_N_MATRICES, seed=0):
    """Monte Carlo bound curve; only the bistochastic bound needs sampling."""
    if BoundKind(kind) is not BoundKind.classical_bistochastic_mc:
        raise InvalidArgs("only classical_bistochastic_mc is computed by Monte Carlo")
    if not isinstance(seed, SeedSpec):
        seed = SeedSpec(int(seed))
    return bistochastic_mc_curve(d, t_values, n_matrices, seed)


# serialisation

def fmt_float(x):
    """17 significant digits; round-trips every double exactly."""
    return "%.17g" % x


def dump_json(obj, indent=0):
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("cannot serialise non-finite float")
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(x, (list, tuple, dict)) for x in obj):
            return "[" + ", ".join(dump_json(x) for x in obj) + "]"
        return "[\n" + ",\n".join(pad + dump_json(x, indent + 1) for x in obj) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (pad + json.dumps(str(k)) + ": " + dump_json(v, indent + 1) for k, v in obj.items())
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (np.floating, np.integer)):
        return dump_json(obj.item(), indent)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_result(res):
    return dump_json(res.to_dict()) + "\n"


def _csv_value(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return fmt_float(x)
    return str(x)


def write_result(res, format="json", out_dir=None):
    """Write ``res`` under ``out_dir`` (default: the config's output_path).

    ``json`` writes ``result.json`` plus a ``timing.json`` sidecar holding the
    wall time; ``csv`` writes ``grid.csv`` and ``bounds.csv``. Returns the
    list of files written.
    """
    out_dir = out_dir or res.config_echo.output_path
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if format == "json":
        path = os.path.join(out_dir, "result.json")
        with open(path, "w", newline="\n") as fh:
            fh.write(dumps_result(res))
        timing = os.path.join(out_dir, "timing.json")
        with open(timing, "w") as fh:
            fh.write(dump_json({"wall_time_seconds": float(res.wall_time_seconds)}) + "\n")
        written += [path, timing]
    elif format == "csv":
        path = os.path.join(out_dir, "grid.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(GRID_HEADER)
            for g in res.grid:
                w.writerow([_csv_value(x) for x in (g.d, g.r, g.t, g.n_unitaries, g.n_sets,
                                                    g.mean_risk, g.sample_std, g.stderr)]
                           + [res.config_echo.learner])
        written.append(path)
        written.append(write_bounds_csv(res.curves, os.path.join(out_dir, "bounds.csv")))
    else:
        raise ValueError(f"unknown format {format!r}")
    return written


def write_bounds_csv(curves, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BOUNDS_HEADER)
        for c in curves:
            errs = c.mc_stderr or [None] * len(c.points)
            for (t, v), e in zip(c.points, errs):
                w.writerow([c.kind.value, c.d, c.r, t, _csv_value(float(v)), _csv_value(e)])
    return path


def read_result(path):
    with open(path) as fh:
        return ExperimentResult.from_dict(json.load(fh))
