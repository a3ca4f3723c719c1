"""Monte-Carlo recovery harness: seeded sweeps over factor conditioning.

A sweep generates, for every (kappa_tilde, trial) pair, a conditioned CP
model, a fresh sensing operator, and a recovery run, then records per-trial
rows and per-grid-point summaries.  Every random stream is derived from the
config's base seed, so a config file fully determines the output.
"""

from __future__ import annotations

import csv
import math
import statistics
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .conditioning import generate_conditioned_model, kappa
from .recovery import RecoveryConfig, recover, residual_jacobian
from .seeding import mix
from .sensing import GAUSSIAN, create_operator
from .sensing import apply as sense_apply
from .tensor_core import (
    CpModel,
    check_shape,
    khatri_rao_chain,
    param_count,
    reconstruct,
    spectral_norm,
)

_OP_STREAM = 0x5E
_MODEL_STREAM = 0xA7
_SOLVER_STREAM = 0xC3

# Protocol constants used by the paper-fig1 preset: 100 trials, rank 3,
# success iff MSE < 1e-10, gaussian entries with variance 1/M (alpha = 1).
PAPER_FIG1_PRESET = {
    "trials": 100,
    "rank": 3,
    "success_mse_threshold": 1e-10,
    "distribution": GAUSSIAN,
    "alpha": 1.0,
}

PRESETS = {"paper-fig1": PAPER_FIG1_PRESET}

ROWS_HEADER = ["kappa_tilde", "m", "trial", "seed", "mse", "success",
               "iterations", "wall_time_s"]
SUMMARY_HEADER = ["kappa_tilde", "m", "trials", "successes", "success_rate",
                  "median_mse", "mean_iterations"]


@dataclass(frozen=True)
class ExperimentConfig:
    dims: tuple[int, ...]
    rank: int
    kappa_grid: tuple[float, ...]
    trials: int = 100
    m: tuple[int, ...] | None = None  # explicit M per grid point (or one for all)
    m_factor: float = 1.5             # used when m is None: M = ceil(m_factor * sum(I_n) * F)
    alpha: float = 1.0
    distribution: str = GAUSSIAN
    success_mse_threshold: float = 1e-10
    base_seed: int = 0
    restarts: int = 5
    max_iters: int = 500

    def __post_init__(self):
        object.__setattr__(self, "dims", check_shape(self.dims))
        object.__setattr__(self, "kappa_grid", tuple(float(k) for k in self.kappa_grid))
        if not self.kappa_grid:
            raise ValueError("kappa grid must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.success_mse_threshold <= 0:
            raise ValueError("success threshold must be > 0")
        if self.m is not None:
            m = tuple(int(v) for v in self.m)
            if len(m) not in (1, len(self.kappa_grid)):
                raise ValueError(
                    "explicit m list must have 1 entry or one per grid point")
            object.__setattr__(self, "m", m)

    def m_for(self, grid_index: int) -> int:
        if self.m is not None:
            return self.m[0] if len(self.m) == 1 else self.m[grid_index]
        return int(math.ceil(self.m_factor * param_count(self.dims, self.rank)))


@dataclass(frozen=True)
class ExperimentRow:
    kappa_tilde: float
    m: int
    trial_index: int
    seed_used: int
    mse: float
    success: bool
    iterations: int
    wall_time_seconds: float


@dataclass(frozen=True)
class GridSummary:
    kappa_tilde: float
    m: int
    trials: int
    success_count: int
    success_rate: float
    median_mse: float
    mean_iterations: float


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat `key = value` config format (lists comma-separated)."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()

    fields: dict = {}
    preset_name = raw.pop("preset", None)
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ValueError(f"unknown preset {preset_name!r}")
        fields.update(PRESETS[preset_name])

    def ints(s): return tuple(int(v) for v in s.split(","))
    def floats(s): return tuple(float(v) for v in s.split(","))

    converters = {
        "dims": ints,
        "rank": int,
        "kappa_grid": floats,
        "trials": int,
        "m": ints,
        "m_factor": float,
        "alpha": float,
        "distribution": str,
        "success_mse_threshold": float,
        "base_seed": int,
        "restarts": int,
        "max_iters": int,
    }
    for key, value in raw.items():
        if key not in converters:
            raise ValueError(f"unknown config key {key!r}")
        fields[key] = converters[key](value)

    for required in ("dims", "rank", "kappa_grid"):
        if required not in fields:
            raise ValueError(f"config is missing required key {required!r}")
    return ExperimentConfig(**fields)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def run_trial(config: ExperimentConfig, grid_index: int, trial_index: int) -> ExperimentRow:
    kappa_tilde = config.kappa_grid[grid_index]
    m = config.m_for(grid_index)
    trial_seed = mix(mix(config.base_seed, grid_index), trial_index)
    start = time.perf_counter()
    try:
        model = generate_conditioned_model(config.dims, config.rank, kappa_tilde,
                                           mix(trial_seed, _MODEL_STREAM))
        truth = reconstruct(model)
        op = create_operator(m, config.dims, config.distribution, config.alpha,
                             mix(trial_seed, _OP_STREAM))
        y = sense_apply(op, truth)
        report = recover(op, y, RecoveryConfig(
            rank=config.rank, max_iters=config.max_iters,
            restarts=config.restarts, seed=mix(trial_seed, _SOLVER_STREAM)),
            ground_truth=truth)
        trial_mse = report.mse if report.mse is not None else math.inf
        iterations = report.iterations
    except Exception:
        trial_mse = math.inf
        iterations = 0
    elapsed = time.perf_counter() - start
    return ExperimentRow(
        kappa_tilde=kappa_tilde, m=m, trial_index=trial_index,
        seed_used=trial_seed, mse=trial_mse,
        success=trial_mse < config.success_mse_threshold,
        iterations=iterations, wall_time_seconds=elapsed)


def summarize(config: ExperimentConfig, rows: list[ExperimentRow]) -> list[GridSummary]:
    out = []
    for gi, kt in enumerate(config.kappa_grid):
        m = config.m_for(gi)
        grid_rows = [r for r in rows if r.kappa_tilde == kt and r.m == m]
        successes = sum(r.success for r in grid_rows)
        out.append(GridSummary(
            kappa_tilde=kt, m=m, trials=len(grid_rows),
            success_count=successes,
            success_rate=successes / len(grid_rows),
            median_mse=statistics.median(r.mse for r in grid_rows),
            mean_iterations=statistics.fmean(r.iterations for r in grid_rows)))
    return out


def run_experiment(config: ExperimentConfig,
                   progress=None) -> tuple[list[ExperimentRow], list[GridSummary]]:
    rows = []
    for gi in range(len(config.kappa_grid)):
        for ti in range(config.trials):
            rows.append(run_trial(config, gi, ti))
            if progress is not None:
                progress(rows[-1])
    return rows, summarize(config, rows)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_csv(rows: list[ExperimentRow], summary: list[GridSummary],
              path_prefix: str) -> tuple[str, str]:
    if not rows:
        raise ValueError("no rows to write")
    rows_path = f"{path_prefix}_rows.csv"
    summary_path = f"{path_prefix}_summary.csv"
    with open(rows_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROWS_HEADER)
        for r in rows:
            writer.writerow([_fmt(r.kappa_tilde), r.m, r.trial_index, r.seed_used,
                             _fmt(r.mse), "true" if r.success else "false",
                             r.iterations, _fmt(r.wall_time_seconds)])
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for s in summary:
            writer.writerow([_fmt(s.kappa_tilde), s.m, s.trials, s.success_count,
                             _fmt(s.success_rate), _fmt(s.median_mse),
                             _fmt(s.mean_iterations)])
    return rows_path, summary_path


def read_summary_csv(path) -> list[GridSummary]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != SUMMARY_HEADER:
            raise ValueError(f"unexpected summary header {header}")
        for rec in reader:
            out.append(GridSummary(
                kappa_tilde=float(rec[0]), m=int(rec[1]), trials=int(rec[2]),
                success_count=int(rec[3]), success_rate=float(rec[4]),
                median_mse=float(rec[5]), mean_iterations=float(rec[6])))
    return out


def emit_plot_script(summary_csv_path: str, out_path: str) -> None:
    """Write a standalone gnuplot script: success count vs conditioning."""
    import os
    if not os.path.exists(summary_csv_path):
        raise FileNotFoundError(summary_csv_path)
    script = f"""\
set datafile separator ','
set key autotitle columnhead
set logscale x
set xlabel 'factor condition number'
set ylabel 'successful recoveries'
set terminal pngcairo size 800,600
set output 'recovery_success.png'
plot '{summary_csv_path}' using 1:4 with linespoints lw 2 pt 7 \
title 'success count'
"""
    with open(out_path, "w") as fh:
        fh.write(script)


def selftest(corrupt_adjoint: bool = False) -> dict[str, bool]:
    """Fast invariant suite; returns check name -> pass.

    corrupt_adjoint is a fault-injection hook that negates one operator row
    on the adjoint side only, so the adjoint check must fail while the
    others still pass.
    """
    results: dict[str, bool] = {}
    rng = np.random.default_rng(20240817)

    # adjoint identity <Phi x, y> == <x, Phi^T y>
    op = create_operator(20, (3, 3, 3), seed=11)
    phi_t = op.matrix.T.copy()
    if corrupt_adjoint:
        phi_t[:, 0] = -phi_t[:, 0]
    ok = True
    for _ in range(20):
        x = rng.standard_normal(op.shape)
        yv = rng.standard_normal(op.m)
        lhs = float(np.dot(sense_apply(op, x), yv))
        rhs = float(np.dot(x.ravel(), phi_t @ yv))
        if abs(lhs - rhs) > 1e-10 * max(1.0, abs(lhs)):
            ok = False
    results["adjoint"] = ok

    # Jacobian vs central finite differences on a 3x3x3 / rank-2 instance
    model = CpModel(tuple(rng.standard_normal((3, 2)) for _ in range(3)))
    yv = rng.standard_normal(op.m)
    _, jac = residual_jacobian(model, op, yv)
    from .recovery import _pack, _unpack
    x0 = _pack(model.factors)
    step = 1e-6
    ok = True
    for j in range(x0.size):
        xp, xm = x0.copy(), x0.copy()
        xp[j] += step
        xm[j] -= step
        rp = yv - sense_apply(op, reconstruct(_unpack(xp, op.shape, 2)))
        rm = yv - sense_apply(op, reconstruct(_unpack(xm, op.shape, 2)))
        fd = (rp - rm) / (2 * step)
        if not np.allclose(jac[:, j], fd, rtol=1e-5, atol=1e-8):
            ok = False
    results["jacobian_fd"] = ok

    # Khatri-Rao spectral bound: inserting U among unit-norm factors
    ok = True
    for _ in range(20):
        length = int(rng.integers(1, 4))
        mats = []
        for _ in range(length):
            a = rng.standard_normal((int(rng.integers(2, 5)), 3))
            mats.append(a / spectral_norm(a))
        u = rng.standard_normal((int(rng.integers(2, 5)), 3))
        pos = int(rng.integers(0, length + 1))
        w = khatri_rao_chain(mats[:pos] + [u] + mats[pos:])
        if spectral_norm(w) > spectral_norm(u) + 1e-10:
            ok = False
    results["spectral_bound"] = ok

    # condition number vs from-scratch SVD oracle
    ok = True
    for _ in range(10):
        model = generate_conditioned_model((4, 5, 4), 2, 7.0,
                                           int(rng.integers(0, 2**32)))
        rep = kappa(model)
        chain = khatri_rao_chain(model.factors)
        smax = float(np.prod([np.linalg.svd(a, compute_uv=False)[0]
                              for a in model.factors]))
        oracle = smax / float(np.linalg.svd(chain, compute_uv=False)[-1])
        if abs(rep.kappa - oracle) > 1e-8 * oracle:
            ok = False
    results["kappa_oracle"] = ok

    return results
