"""Neural solvers: contraction-based Picard training and the direct scheme.

The Picard variant trains a fresh regression per outer iteration onto
one-draw targets of the fixed-point map applied to the previous (frozen)
net.  The direct variant keeps one net and one optimiser and descends the
sampled fixed-point residual itself, differentiating through the driver,
so it does not need the map to contract.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .fixedpoint import (CandidatePair, as_candidate, one_draw_weights,
                         r_sample_batch)
from .grid import GridFunction
from .model import Problem, SchemeParams, problem_by_name
from .neural import AdamState, Mlp, adam_step
from .simulate import FkBatch, RngLike, RngStream, _as_generator, sample_fk_batch


class NonFiniteLoss(ArithmeticError):
    """Training loss became NaN or infinite."""


class MissingAnalyticSolution(ValueError):
    """The requested error metric needs a known solution."""


class MissingDriverDerivatives(ValueError):
    """The direct scheme differentiates the driver; it needs f_y and f_z."""


@dataclass(frozen=True)
class NnPicardConfig:
    """Contraction-based scheme: one regression problem per Picard iteration."""

    problem: str
    dim: int = 1
    overrides: Optional[dict] = None
    params: SchemeParams = field(default_factory=SchemeParams)
    n_iters: int = 5
    m_samples: int = 512
    train_steps: int = 3000
    hidden: Optional[Tuple[int, ...]] = None
    mu0_std: Optional[float] = None
    warm_start: bool = True
    base_lr: float = 5e-4
    lr_decay: float = 0.9
    lr_decay_period: int = 1000
    dt: Optional[float] = None
    m_err: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.m_samples < 1:
            raise ValueError("m_samples must be at least 1")
        if self.n_iters < 1:
            raise ValueError("n_iters must be at least 1")

    def build_problem(self) -> Problem:
        return problem_by_name(self.problem, self.dim, self.overrides)

    def hidden_widths(self) -> Tuple[int, ...]:
        return self.hidden if self.hidden is not None else (20 + self.dim,) * 2


@dataclass(frozen=True)
class DirectConfig:
    """Direct scheme: a single net trained across epochs of fresh data.

    The residual landscape is noisy and, for strongly z-dependent drivers,
    slow to traverse; the learning-rate schedule therefore starts higher
    and decays faster than the Picard regression's.
    """

    problem: str
    dim: int = 1
    overrides: Optional[dict] = None
    params: SchemeParams = field(default_factory=SchemeParams)
    n_epochs: int = 30
    steps_per_epoch: int = 75
    m_starts: int = 512
    m_inner: int = 100
    hidden: Optional[Tuple[int, ...]] = None
    mu0_std: Optional[float] = None
    base_lr: float = 2e-3
    lr_decay: float = 0.8
    lr_decay_period: int = 300
    dt: Optional[float] = None
    m_err: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.m_starts < 1:
            raise ValueError("m_starts must be at least 1")
        if self.m_inner < 2:
            raise ValueError("m_inner must be at least 2 (paired halves)")
        if self.n_epochs < 1:
            raise ValueError("n_epochs must be at least 1")
        if self.steps_per_epoch < 0:
            raise ValueError("steps_per_epoch must be non-negative")

    def build_problem(self) -> Problem:
        return problem_by_name(self.problem, self.dim, self.overrides)

    def hidden_widths(self) -> Tuple[int, ...]:
        return self.hidden if self.hidden is not None else (20 + self.dim,) * 2


@dataclass(frozen=True)
class TraceRow:
    n: int
    loss: float
    rel_err_u: float
    rel_err_ubar: float
    seconds: float


@dataclass
class NnSolveResult:
    net: Mlp
    trace: List[TraceRow]
    nets: Optional[List[Mlp]] = None


def _sample_mu0(gen, m: int, dim: int, std: float) -> np.ndarray:
    return gen.normal(0.0, std, size=(m, dim))


def _ratio(num_sq: float, den_sq: float) -> float:
    if den_sq == 0.0:
        return 0.0 if num_sq == 0.0 else np.inf
    return float(np.sqrt(num_sq / den_sq))


def _rel_errors_at(candidate, problem: Problem,
                   x: np.ndarray) -> Tuple[float, float]:
    w = as_candidate(candidate, problem)
    u_hat, ubar_hat = w(x)
    u_ref = problem.analytic.u(x)
    ubar_ref = problem.analytic.ubar(x)
    du = _ratio(np.mean(np.sum((u_hat - u_ref) ** 2, axis=1)),
                np.mean(np.sum(u_ref**2, axis=1)))
    dubar = _ratio(np.mean(np.sum((ubar_hat - ubar_ref) ** 2, axis=(1, 2))),
                   np.mean(np.sum(ubar_ref**2, axis=(1, 2))))
    return du, dubar


def relative_l2_errors(candidate: Union[Mlp, GridFunction, CandidatePair],
                       problem: Problem, m_err: int = 1000,
                       mu0_err_std: Optional[float] = None,
                       rng: RngLike = 0) -> Tuple[float, float]:
    """Relative L2 errors of the value and gradient blocks under mu0.

    A zero-norm reference component yields 0 when the candidate matches it
    exactly and inf otherwise.
    """
    if problem.analytic is None:
        raise MissingAnalyticSolution(problem.name)
    if mu0_err_std is None:
        mu0_err_std = problem.mu0_std
    gen = _as_generator(rng)
    x = _sample_mu0(gen, m_err, problem.sde.dim, mu0_err_std)
    return _rel_errors_at(candidate, problem, x)


def _train_regression(net: Mlp, x: np.ndarray, target_u: np.ndarray,
                      target_ubar: np.ndarray, state: AdamState,
                      steps: int) -> float:
    """Full-batch ADAM on the empirical MSE; returns the last loss seen."""
    loss = net.mse_loss(x, target_u, target_ubar)
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"loss {loss} before training")
    for _ in range(steps):
        loss, grads = net.mse_grad(x, target_u, target_ubar)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss {loss} at step {state.step}")
        adam_step(net, grads, state)
    return loss


def _trace_errors(net: Mlp, problem: Problem, eval_points) -> Tuple[float, float]:
    if problem.analytic is None:
        return np.nan, np.nan
    return _rel_errors_at(net, problem, eval_points)


def contraction_nn_solve(cfg: NnPicardConfig,
                         keep_nets: bool = False) -> NnSolveResult:
    """Picard iteration in network space: regress onto one-draw targets of
    the map applied to the previous net, starting from the zero candidate."""
    problem = cfg.build_problem()
    dim, dim_y = problem.sde.dim, problem.gen.dim_y
    mu0_std = cfg.mu0_std if cfg.mu0_std is not None else problem.mu0_std
    base = RngStream(cfg.seed)
    eval_gen = RngStream(cfg.seed, stream_id=1).generator()
    eval_points = _sample_mu0(eval_gen, cfg.m_err, dim, mu0_std)

    previous = CandidatePair.zero(dim, dim_y)
    net = Mlp.init(dim, dim_y, cfg.hidden_widths(), base.substream(0))
    trace: List[TraceRow] = []
    nets: List[Mlp] = []
    for n in range(1, cfg.n_iters + 1):
        start_time = time.perf_counter()
        iter_stream = base.substream(n)
        gen = iter_stream.substream(0).generator()
        x0 = _sample_mu0(gen, cfg.m_samples, dim, mu0_std)
        fk = sample_fk_batch(problem, cfg.params, x0, cfg.m_samples, cfg.dt,
                             iter_stream.substream(1))
        target_u, target_ubar = r_sample_batch(problem, cfg.params, previous, fk)
        if not (np.isfinite(target_u).all() and np.isfinite(target_ubar).all()):
            raise NonFiniteLoss(f"non-finite regression target at iteration {n}")

        if n > 1 and not cfg.warm_start:
            net = Mlp.init(dim, dim_y, cfg.hidden_widths(),
                           base.substream(0).substream(n))
        state = AdamState.init(net, cfg.base_lr, cfg.lr_decay,
                               cfg.lr_decay_period)
        loss = _train_regression(net, x0, target_u, target_ubar, state,
                                 cfg.train_steps)
        previous = as_candidate(net.copy(), problem)
        if keep_nets:
            nets.append(net.copy())
        du, dubar = _trace_errors(net, problem, eval_points)
        trace.append(TraceRow(n, loss, du, dubar,
                              time.perf_counter() - start_time))
    return NnSolveResult(net, trace, nets if keep_nets else None)


def _half_residuals(value: np.ndarray, phi: np.ndarray, m_starts: int,
                    m_inner: int) -> Tuple[np.ndarray, np.ndarray]:
    """Residuals of ``value`` against the two half-sample averages of phi."""
    split = m_inner // 2
    grouped = phi.reshape(m_starts, m_inner, -1)
    flat = value.reshape(m_starts, -1)
    return (flat - grouped[:, :split].mean(axis=1),
            flat - grouped[:, split:].mean(axis=1))


def _half_upstream(r_a: np.ndarray, r_b: np.ndarray, m_starts: int,
                   m_inner: int) -> np.ndarray:
    """Per-draw upstream gradient on phi for the cross-residual loss.

    Each half's draws receive the opposite half's residual, scaled by its
    own average length, so the pairing of the loss is preserved.
    """
    split = m_inner // 2
    width = r_a.shape[1]
    q = np.empty((m_starts, m_inner, width))
    q[:, :split] = (-r_b / (m_starts * split))[:, None, :]
    q[:, split:] = (-r_a / (m_starts * (m_inner - split)))[:, None, :]
    return q.reshape(m_starts * m_inner, width)


def _residual_loss_grads(net: Mlp, problem: Problem, params: SchemeParams,
                         x0: np.ndarray, fk: FkBatch, weight_e: np.ndarray,
                         weight_g: np.ndarray, m_starts: int,
                         m_inner: int) -> Tuple[float, List[np.ndarray]]:
    """Sampled fixed-point residual and its full parameter gradient.

    The loss pairs, per starting point, the residuals of the net against
    two independent half-sample averages of the one-draw map applied to
    the same net; the product's expectation is the squared gap to the
    exact map, with no inner-sample variance term.  Gradients flow through
    both occurrences of the net, so the inner evaluations at the two
    horizon states are backpropagated through the driver Jacobians.  The
    cross form can make an individual loss value negative.
    """
    gen = problem.gen
    a, a_z = params.discount_y, params.discount_z
    dy, d = net.dim_y, net.dim_x
    m_total = m_starts * m_inner

    acts0, pre0 = net._forward_cached(x0)
    u0, ubar0 = net._split(acts0[-1])

    # value-component branch; chain rule through f and the a*u shift
    acts_e, pre_e = net._forward_cached(fk.x_at_e)
    u_e, z_e = net._split(acts_e[-1])
    f_e = gen.f(fk.x_at_e, u_e, z_e)
    phi1 = (f_e + a * u_e) * weight_e[:, None]
    r1_a, r1_b = _half_residuals(u0, phi1, m_starts, m_inner)
    q1 = _half_upstream(r1_a, r1_b, m_starts, m_inner)
    q1 *= weight_e[:, None]
    d_u = np.einsum("mi,mij->mj", q1, gen.f_y(fk.x_at_e, u_e, z_e)) + a * q1
    d_ubar = np.einsum("mi,mijk->mjk", q1, gen.f_z(fk.x_at_e, u_e, z_e))
    delta_e = np.concatenate([d_u, d_ubar.reshape(m_total, dy * d)], axis=1)
    grads = net.backprop(acts_e, pre_e, delta_e)
    del acts_e, pre_e, q1, d_u, d_ubar, delta_e

    # gradient-component branch; the Malliavin factor contracts first
    acts_g, pre_g = net._forward_cached(fk.x_at_g)
    u_g, z_g = net._split(acts_g[-1])
    f_g = gen.f(fk.x_at_g, u_g, z_g)
    scaled = (f_g + a_z * u_g) * weight_g[:, None]
    phi2 = scaled[:, :, None] * fk.malliavin_at_g[:, None, :]
    r2_a, r2_b = _half_residuals(ubar0, phi2, m_starts, m_inner)
    q2 = _half_upstream(r2_a, r2_b, m_starts, m_inner)
    q2 = np.einsum("mik,mk->mi", q2.reshape(m_total, dy, d),
                   fk.malliavin_at_g)
    q2 *= weight_g[:, None]
    d_u = np.einsum("mi,mij->mj", q2, gen.f_y(fk.x_at_g, u_g, z_g)) + a_z * q2
    d_ubar = np.einsum("mi,mijk->mjk", q2, gen.f_z(fk.x_at_g, u_g, z_g))
    delta_g = np.concatenate([d_u, d_ubar.reshape(m_total, dy * d)], axis=1)
    for acc, g in zip(grads, net.backprop(acts_g, pre_g, delta_g)):
        acc += g

    loss = float((np.sum(r1_a * r1_b) + np.sum(r2_a * r2_b)) / m_starts)
    delta0 = np.concatenate([r1_a + r1_b,
                             (r2_a + r2_b).reshape(m_starts, dy * d)], axis=1)
    delta0 /= m_starts
    for acc, g in zip(grads, net.backprop(acts0, pre0, delta0)):
        acc += g
    return loss, grads


def direct_nn_solve(cfg: DirectConfig) -> NnSolveResult:
    """Single-net scheme: ADAM descent on the sampled fixed-point residual.

    Each epoch redraws starting points and their inner horizon samples;
    every step then descends an unbiased estimate of the squared gap
    between the net and the map applied to that same net, built from two
    paired half-averages of the inner draws.  Nothing is frozen, so no
    contraction is needed, at the price of a driver with known y/z
    Jacobians.
    """
    problem = cfg.build_problem()
    if problem.gen.f_y is None or problem.gen.f_z is None:
        raise MissingDriverDerivatives(
            f"problem {problem.name!r} supplies no driver Jacobians")
    dim, dim_y = problem.sde.dim, problem.gen.dim_y
    mu0_std = cfg.mu0_std if cfg.mu0_std is not None else problem.mu0_std
    base = RngStream(cfg.seed)
    eval_gen = RngStream(cfg.seed, stream_id=1).generator()
    eval_points = _sample_mu0(eval_gen, cfg.m_err, dim, mu0_std)

    net = Mlp.init(dim, dim_y, cfg.hidden_widths(), base.substream(0))
    state = AdamState.init(net, cfg.base_lr, cfg.lr_decay, cfg.lr_decay_period)
    trace: List[TraceRow] = []
    for epoch in range(1, cfg.n_epochs + 1):
        start_time = time.perf_counter()
        ep_stream = base.substream(epoch)
        gen = ep_stream.substream(0).generator()
        x0 = _sample_mu0(gen, cfg.m_starts, dim, mu0_std)
        repeated = np.repeat(x0, cfg.m_inner, axis=0)
        fk = sample_fk_batch(problem, cfg.params, repeated,
                             cfg.m_starts * cfg.m_inner, cfg.dt,
                             ep_stream.substream(1))
        weight_e, weight_g = one_draw_weights(cfg.params, fk)
        loss = None
        for _ in range(cfg.steps_per_epoch):
            loss, grads = _residual_loss_grads(
                net, problem, cfg.params, x0, fk, weight_e, weight_g,
                cfg.m_starts, cfg.m_inner)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss {loss} at step {state.step}")
            adam_step(net, grads, state)
        if loss is None:  # no training steps: report the standing residual
            loss, _ = _residual_loss_grads(
                net, problem, cfg.params, x0, fk, weight_e, weight_g,
                cfg.m_starts, cfg.m_inner)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss {loss} at epoch {epoch}")
        du, dubar = _trace_errors(net, problem, eval_points)
        trace.append(TraceRow(epoch, loss, du, dubar,
                              time.perf_counter() - start_time))
    return NnSolveResult(net, trace)
