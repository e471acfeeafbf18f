"""Grid-based Picard iteration and the mesh-refinement rate study.

Each iteration draws fresh samples at every extended-grid node, averages
the single-draw estimator applied to the interpolated previous iterate,
and (optionally) applies growth truncation.  Errors are reported on the
inner nodes only, unweighted, against the analytic solution when known.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .fixedpoint import NonFiniteValue, r_sample_batch, truncate_growth
from .grid import Grid, GridFunction, truncated_nodes
from .model import Problem, SchemeParams, problem_by_name
from .simulate import RngStream, sample_fk_batch


class FitUnderdetermined(ValueError):
    """Too few mesh sizes to fit a convergence slope."""


def _worker_count() -> int:
    raw = os.environ.get("BSDE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSolveConfig:
    """Configuration of one grid Picard run.

    ``half_width`` is the half side of the inner reporting box; the mesh is
    ``half_width / n_half`` and the grid extends ``pad`` extra layers.
    ``truncation`` is an optional (bound, growth degree) pair; it is off by
    default.  ``dt`` only matters for non-Brownian dynamics.
    """

    problem: str
    dim: int = 1
    overrides: Optional[dict] = None
    params: SchemeParams = field(default_factory=SchemeParams)
    n_half: int = 10
    pad: int = 0
    half_width: float = 3.0
    m_samples: int = 40000
    n_iters: int = 10
    truncation: Optional[Tuple[float, float]] = None
    dt: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.m_samples < 2:
            raise ValueError("m_samples must be at least 2")
        if self.n_iters < 1:
            raise ValueError("n_iters must be at least 1")

    @property
    def mesh(self) -> float:
        return self.half_width / self.n_half

    def build_problem(self) -> Problem:
        return problem_by_name(self.problem, self.dim, self.overrides)

    def build_grid(self) -> Grid:
        return Grid(self.dim, self.n_half, self.mesh, self.pad)


@dataclass(frozen=True)
class IterationReport:
    n: int
    sup_err_u: Optional[float]
    sup_err_ubar: Optional[float]
    seconds: float


def picard_step(v: GridFunction, cfg: GridSolveConfig, rng: RngStream,
                problem: Optional[Problem] = None) -> GridFunction:
    """One Picard update: fresh per-node samples against the interpolant of ``v``."""
    if problem is None:
        problem = cfg.build_problem()
    grid = v.grid
    interpolant = v.as_candidate()
    dim_y = problem.gen.dim_y
    u_new = np.empty((grid.n_nodes, dim_y))
    ubar_new = np.empty((grid.n_nodes, dim_y, grid.dim))
    nodes = grid.nodes

    def update(node: int) -> None:
        gen = rng.substream(node).generator()
        fk = sample_fk_batch(problem, cfg.params, nodes[node], cfg.m_samples,
                             cfg.dt, gen)
        comp1, comp2 = r_sample_batch(problem, cfg.params, interpolant, fk)
        mean1 = comp1.mean(axis=0)
        mean2 = comp2.mean(axis=0)
        if not (np.isfinite(mean1).all() and np.isfinite(mean2).all()):
            raise NonFiniteValue(f"non-finite update at node {node}")
        u_new[node] = mean1
        ubar_new[node] = mean2

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(update, range(grid.n_nodes)))
    else:
        for node in range(grid.n_nodes):
            update(node)

    if cfg.truncation is not None:
        bound, degree = cfg.truncation
        u_new, ubar_new = truncate_growth((u_new, ubar_new), nodes, bound, degree)
    return GridFunction(grid, u_new, ubar_new)


@dataclass
class GridSolveResult:
    final: GridFunction
    reports: list
    node_err_u: Optional[np.ndarray]
    node_err_ubar: Optional[np.ndarray]
    problem: Problem

    @property
    def sup_err_u(self) -> Optional[float]:
        return self.reports[-1].sup_err_u

    @property
    def sup_err_ubar(self) -> Optional[float]:
        return self.reports[-1].sup_err_ubar


def _node_errors(v: GridFunction, problem: Problem):
    sol = problem.analytic
    nodes = v.grid.nodes
    err_u = np.linalg.norm(v.u - sol.u(nodes), axis=1)
    err_ubar = np.sqrt(np.sum((v.ubar - sol.ubar(nodes)) ** 2, axis=(1, 2)))
    return err_u, err_ubar


def solve(cfg: GridSolveConfig,
          base_stream: Optional[RngStream] = None) -> GridSolveResult:
    """Run the Picard iteration from the zero grid function."""
    problem = cfg.build_problem()
    grid = cfg.build_grid()
    v = GridFunction.zero(grid, problem.gen.dim_y)
    inner = truncated_nodes(grid)
    if base_stream is None:
        base_stream = RngStream(cfg.seed)

    reports = []
    for n in range(1, cfg.n_iters + 1):
        start = time.perf_counter()
        v = picard_step(v, cfg, base_stream.substream(n), problem)
        elapsed = time.perf_counter() - start
        if problem.analytic is not None:
            err_u, err_ubar = _node_errors(v, problem)
            reports.append(IterationReport(
                n, float(err_u[inner].max()), float(err_ubar[inner].max()), elapsed
            ))
        else:
            reports.append(IterationReport(n, None, None, elapsed))

    if problem.analytic is not None:
        node_err_u, node_err_ubar = _node_errors(v, problem)
    else:
        node_err_u = node_err_ubar = None
    return GridSolveResult(v, reports, node_err_u, node_err_ubar, problem)


def fit_rate_slope(n_half_values: Sequence[int],
                   errors: Sequence[float]) -> Tuple[float, float]:
    """Least-squares slope of log error against log(2 + n_half)."""
    if len(n_half_values) < 3:
        raise FitUnderdetermined("need at least 3 mesh sizes to fit a slope")
    if len(n_half_values) != len(errors):
        raise ValueError("mismatched inputs")
    x = np.log(2.0 + np.asarray(n_half_values, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


@dataclass
class RateStudyResult:
    n_half: np.ndarray
    m_samples: np.ndarray
    sup_err_u: np.ndarray
    sup_err_ubar: np.ndarray
    slope: float
    intercept: float


def rate_study(cfg_template: GridSolveConfig, n_half_values: Sequence[int],
               k: float) -> RateStudyResult:
    """Refinement study at fixed box size: mesh shrinks, samples grow.

    For each value the mesh is ``half_width / n_half`` and the per-node
    sample count is ``round(k * n_half^4 / half_width^4)``, then the sup
    error over the inner nodes at the final iterate is recorded.  The
    fitted slope uses the larger of the two component errors.
    """
    if len(n_half_values) < 3:
        raise FitUnderdetermined("need at least 3 mesh sizes to fit a slope")
    r4 = cfg_template.half_width**4
    sup_u, sup_ubar, samples = [], [], []
    for run, nh in enumerate(n_half_values):
        m = max(2, int(round(k * nh**4 / r4)))
        cfg = replace(cfg_template, n_half=int(nh), m_samples=m)
        result = solve(cfg, base_stream=RngStream(cfg.seed, stream_id=run + 1))
        if result.sup_err_u is None:
            raise ValueError("rate study requires an analytic solution")
        samples.append(m)
        sup_u.append(result.sup_err_u)
        sup_ubar.append(result.sup_err_ubar)
    worst = np.maximum(sup_u, sup_ubar)
    slope, intercept = fit_rate_slope(list(n_half_values), worst)
    return RateStudyResult(
        np.asarray(list(n_half_values)), np.asarray(samples),
        np.asarray(sup_u), np.asarray(sup_ubar), slope, intercept,
    )
