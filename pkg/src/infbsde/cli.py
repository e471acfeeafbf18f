"""Batch experiment runner.

Subcommands cover the three schemes plus the rate study, the contraction
report, and the z-Lipschitz sweep.  Settings resolve in three layers:
built-in defaults, then a JSON config file, then explicit flags.  Every
run echoes its effective config to ``config_echo.json`` so it can be
reproduced exactly; all CSV floats carry 17 significant digits.

Exit codes: 0 success, 2 config error (nothing written), 1 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from typing import Dict, List, Optional

import numpy as np

from . import _svg
from .analysis import (ConstraintViolated, ContractionInputs, InvalidP,
                       QuadratureFailure, brownian_c_infinity,
                       contraction_report, estimate_c_constants)
from .fixedpoint import NonFiniteValue
from .grid import Grid, _format, write_grid_csv
from .model import (NonPositiveRate, SchemeParams, UnknownProblem,
                    problem_by_name, validate_params)
from .neural import save_checkpoint
from .nn_schemes import (DirectConfig, MissingAnalyticSolution, NnPicardConfig,
                         NonFiniteLoss, contraction_nn_solve, direct_nn_solve)
from .picard_grid import (FitUnderdetermined, GridSolveConfig, rate_study,
                          solve)
from .simulate import DegenerateDiffusion


class ConfigParse(ValueError):
    """Invalid or incomplete run configuration."""


_PARAM_KEYS = ("discount_y", "discount_z", "exp_rate", "gamma_rate")
_OVERRIDE_KEYS = ("c", "kz", "eps", "mu", "c0", "mu0_std")

_GRID_DEFAULTS = {
    "problem": None, "dim": 1, "n_half": 10, "pad": 0, "half_width": 3.0,
    "m_samples": 40000, "n_iters": 10, "dt": None, "seed": 0,
    "discount_y": 2.0, "discount_z": 2.0, "exp_rate": 1.5, "gamma_rate": 1.5,
    "trunc_bound": None, "trunc_degree": None,
    "c": None, "kz": None, "eps": None, "mu": None, "c0": None,
    "mu0_std": None,
}
_RATE_DEFAULTS = {k: v for k, v in _GRID_DEFAULTS.items()
                  if k not in ("n_half", "m_samples")}
_RATE_DEFAULTS.update({"ntilde_list": [5, 8, 12, 16, 20], "k": 200.0})

_NN_COMMON = {
    "problem": None, "dim": 1, "dt": None, "seed": 0,
    "discount_y": 2.0, "discount_z": 2.0, "exp_rate": 1.5, "gamma_rate": 1.5,
    "hidden": None, "base_lr": 5e-4, "m_err": 1000,
    "c": None, "kz": None, "eps": None, "mu": None, "c0": None,
    "mu0_std": None,
}
_PICARD_DEFAULTS = dict(_NN_COMMON)
_PICARD_DEFAULTS.update({"n_iters": 5, "m_samples": 512, "train_steps": 3000,
                         "warm_start": True, "lr_decay": 0.9,
                         "lr_decay_period": 1000})
_DIRECT_DEFAULTS = dict(_NN_COMMON)
_DIRECT_DEFAULTS.update({"n_epochs": 30, "steps_per_epoch": 75,
                         "m_starts": 512, "m_inner": 100, "base_lr": 2e-3,
                         "lr_decay": 0.8, "lr_decay_period": 300})
_CONTRACTION_DEFAULTS = {
    "problem": None, "dim": 1, "dt": None, "seed": 0,
    "discount_y": 2.0, "discount_z": 2.0, "exp_rate": 1.5, "gamma_rate": 1.5,
    "weight_degree": 0.0, "m_samples": 100000, "probe_n_half": 5,
    "probe_half_width": 3.0, "n_mu0_probes": 16, "p": 2.0,
    "c": None, "kz": None, "eps": None, "mu": None, "c0": None,
    "mu0_std": None,
}
_SWEEP_DEFAULTS = {
    "scheme": "nn-picard", "kz_list": [0.4, 1.6, 2.8, 4.0, 5.2], "reps": 5,
}
for _k, _v in _PICARD_DEFAULTS.items():
    _SWEEP_DEFAULTS.setdefault(_k, _v)
for _k, _v in _DIRECT_DEFAULTS.items():
    _SWEEP_DEFAULTS.setdefault(_k, _v)
del _SWEEP_DEFAULTS["kz"]
# the two schemes want different schedules; None defers to each one's own
for _k in ("base_lr", "lr_decay", "lr_decay_period"):
    _SWEEP_DEFAULTS[_k] = None

_DEFAULTS = {
    "grid-solve": _GRID_DEFAULTS,
    "rate-study": _RATE_DEFAULTS,
    "nn-picard": _PICARD_DEFAULTS,
    "nn-direct": _DIRECT_DEFAULTS,
    "contraction": _CONTRACTION_DEFAULTS,
    "kz-sweep": _SWEEP_DEFAULTS,
}

_NUMERIC_ERRORS = (NonFiniteValue, NonFiniteLoss, DegenerateDiffusion,
                   QuadratureFailure, ConstraintViolated, InvalidP,
                   MissingAnalyticSolution, FitUnderdetermined,
                   ArithmeticError)


def _float_list(text: str) -> List[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str) -> List[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON file with config values")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--problem", dest="problem")
    sub.add_argument("--d", dest="dim", type=int)
    sub.add_argument("--seed", dest="seed", type=int)
    sub.add_argument("--dt", dest="dt", type=float)
    sub.add_argument("--a", dest="discount_y", type=float)
    sub.add_argument("--a-tilde", dest="discount_z", type=float)
    sub.add_argument("--theta", dest="exp_rate", type=float)
    sub.add_argument("--theta-tilde", dest="gamma_rate", type=float)
    for key in _OVERRIDE_KEYS:
        sub.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)


def _add_nn_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--hidden", dest="hidden", type=_int_list,
                     help="comma-separated hidden widths")
    sub.add_argument("--lr", dest="base_lr", type=float)
    sub.add_argument("--decay", dest="lr_decay", type=float)
    sub.add_argument("--decay-period", dest="lr_decay_period", type=int)
    sub.add_argument("--m-err", dest="m_err", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infbsde",
        description="Monte Carlo solvers for infinite-horizon BSDE systems")
    subs = parser.add_subparsers(dest="command", required=True)

    grid = subs.add_parser("grid-solve", help="grid Picard scheme")
    _add_common(grid)
    grid.add_argument("--ntilde", dest="n_half", type=int)
    grid.add_argument("--R", dest="half_width", type=float)
    grid.add_argument("--M", dest="m_samples", type=int)
    grid.add_argument("--iters", dest="n_iters", type=int)
    grid.add_argument("--p", dest="pad", type=int)
    grid.add_argument("--trunc-bound", dest="trunc_bound", type=float)
    grid.add_argument("--trunc-degree", dest="trunc_degree", type=float)

    rate = subs.add_parser("rate-study", help="mesh refinement study")
    _add_common(rate)
    rate.add_argument("--R", dest="half_width", type=float)
    rate.add_argument("--iters", dest="n_iters", type=int)
    rate.add_argument("--p", dest="pad", type=int)
    rate.add_argument("--k", dest="k", type=float)
    rate.add_argument("--ntilde-list", dest="ntilde_list", type=_int_list)
    rate.add_argument("--trunc-bound", dest="trunc_bound", type=float)
    rate.add_argument("--trunc-degree", dest="trunc_degree", type=float)

    picard = subs.add_parser("nn-picard", help="contraction-based NN scheme")
    _add_common(picard)
    _add_nn_common(picard)
    picard.add_argument("--M", dest="m_samples", type=int)
    picard.add_argument("--iters", dest="n_iters", type=int)
    picard.add_argument("--steps", dest="train_steps", type=int)
    picard.add_argument("--warm-start", dest="warm_start",
                        action="store_true", default=None)
    picard.add_argument("--no-warm-start", dest="warm_start",
                        action="store_false", default=None)

    direct = subs.add_parser("nn-direct", help="direct NN scheme")
    _add_common(direct)
    _add_nn_common(direct)
    direct.add_argument("--epochs", dest="n_epochs", type=int)
    direct.add_argument("--steps", dest="steps_per_epoch", type=int)
    direct.add_argument("--M-x", dest="m_starts", type=int)
    direct.add_argument("--M", dest="m_inner", type=int)

    contr = subs.add_parser("contraction", help="contraction constant report")
    _add_common(contr)
    contr.add_argument("--weight-degree", dest="weight_degree", type=float)
    contr.add_argument("--M", dest="m_samples", type=int)
    contr.add_argument("--probe-ntilde", dest="probe_n_half", type=int)
    contr.add_argument("--probe-R", dest="probe_half_width", type=float)
    contr.add_argument("--mu0-probes", dest="n_mu0_probes", type=int)
    contr.add_argument("--p", dest="p", type=float)

    sweep = subs.add_parser("kz-sweep", help="z-Lipschitz robustness sweep")
    _add_common(sweep)
    _add_nn_common(sweep)
    sweep.add_argument("--scheme", dest="scheme",
                       choices=["nn-picard", "nn-direct"])
    sweep.add_argument("--kz-list", dest="kz_list", type=_float_list)
    sweep.add_argument("--reps", dest="reps", type=int)
    sweep.add_argument("--M", dest="m_samples", type=int)
    sweep.add_argument("--iters", dest="n_iters", type=int)
    sweep.add_argument("--steps", dest="train_steps", type=int)
    sweep.add_argument("--epochs", dest="n_epochs", type=int)
    sweep.add_argument("--steps-per-epoch", dest="steps_per_epoch", type=int)
    sweep.add_argument("--M-x", dest="m_starts", type=int)
    sweep.add_argument("--M-inner", dest="m_inner", type=int)
    sweep.add_argument("--warm-start", dest="warm_start",
                       action="store_true", default=None)
    sweep.add_argument("--no-warm-start", dest="warm_start",
                       action="store_false", default=None)
    return parser


def _merge(command: str, args: argparse.Namespace) -> Dict:
    cfg = dict(_DEFAULTS[command])
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigParse(f"cannot read config file: {exc}") from exc
        # a config echo names its own subcommand; accept it when it matches
        echoed = data.get("command")
        if echoed is not None and echoed != command:
            raise ConfigParse(
                f"config file is for {echoed!r}, not {command!r}")
        unknown = set(data) - set(cfg) - {"out", "command"}
        if unknown:
            raise ConfigParse(f"unknown config keys: {sorted(unknown)}")
        cfg.update({k: v for k, v in data.items()
                    if k not in ("out", "command")})
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if cfg.get("problem") in (None, ""):
        raise ConfigParse("a problem name is required (--problem or config)")
    return cfg


def _params(cfg: Dict) -> SchemeParams:
    return SchemeParams(*(float(cfg[k]) for k in _PARAM_KEYS))


def _overrides(cfg: Dict) -> Optional[Dict]:
    out = {k: cfg[k] for k in _OVERRIDE_KEYS if cfg.get(k) is not None}
    return out or None


def _truncation(cfg: Dict):
    bound, degree = cfg.get("trunc_bound"), cfg.get("trunc_degree")
    if (bound is None) != (degree is None):
        raise ConfigParse("trunc_bound and trunc_degree go together")
    return None if bound is None else (float(bound), float(degree))


def _write_csv(path, header: List[str], rows: List[List]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(v) if isinstance(v, float) else v
                             for v in row])


def _echo_config(outdir: str, command: str, cfg: Dict) -> None:
    payload = {"command": command}
    payload.update(cfg)
    with open(os.path.join(outdir, "config_echo.json"), "w",
              encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _grid_config(cfg: Dict) -> GridSolveConfig:
    return GridSolveConfig(
        problem=cfg["problem"], dim=int(cfg["dim"]), overrides=_overrides(cfg),
        params=_params(cfg), n_half=int(cfg["n_half"]), pad=int(cfg["pad"]),
        half_width=float(cfg["half_width"]), m_samples=int(cfg["m_samples"]),
        n_iters=int(cfg["n_iters"]), truncation=_truncation(cfg),
        dt=None if cfg["dt"] is None else float(cfg["dt"]),
        seed=int(cfg["seed"]))


def _run_grid_solve(cfg: Dict, outdir: str) -> int:
    result = solve(_grid_config(cfg))
    _write_csv(os.path.join(outdir, "iterations.csv"),
               ["n", "sup_err_u", "sup_err_ubar", "seconds"],
               [[r.n,
                 float("nan") if r.sup_err_u is None else r.sup_err_u,
                 float("nan") if r.sup_err_ubar is None else r.sup_err_ubar,
                 r.seconds] for r in result.reports])
    write_grid_csv(result.final, os.path.join(outdir, "grid_solution.csv"),
                   analytic=result.problem.analytic)
    if result.reports[0].sup_err_u is not None:
        _svg.line_plot(
            os.path.join(outdir, "errors.svg"),
            [r.n for r in result.reports],
            {"sup err u": [r.sup_err_u for r in result.reports],
             "sup err ubar": [r.sup_err_ubar for r in result.reports]},
            "Grid Picard error by iteration", "iteration", "sup error",
            logy=True)
    return 0


def _run_rate_study(cfg: Dict, outdir: str) -> int:
    ntilde = [int(v) for v in cfg["ntilde_list"]]
    if len(ntilde) < 3:
        raise ConfigParse("ntilde_list needs at least 3 entries")
    template = GridSolveConfig(
        problem=cfg["problem"], dim=int(cfg["dim"]), overrides=_overrides(cfg),
        params=_params(cfg), n_half=ntilde[0], pad=int(cfg["pad"]),
        half_width=float(cfg["half_width"]), m_samples=2,
        n_iters=int(cfg["n_iters"]), truncation=_truncation(cfg),
        dt=None if cfg["dt"] is None else float(cfg["dt"]),
        seed=int(cfg["seed"]))
    result = rate_study(template, ntilde, float(cfg["k"]))
    _write_csv(os.path.join(outdir, "rate_study.csv"),
               ["ntilde", "M", "sup_err_u", "sup_err_ubar"],
               [[int(n), int(m), float(eu), float(eb)]
                for n, m, eu, eb in zip(result.n_half, result.m_samples,
                                        result.sup_err_u,
                                        result.sup_err_ubar)])
    with open(os.path.join(outdir, "rate_fit.json"), "w",
              encoding="utf-8") as handle:
        json.dump({"slope": result.slope, "intercept": result.intercept},
                  handle, indent=2, sort_keys=True)
        handle.write("\n")
    worst = np.maximum(result.sup_err_u, result.sup_err_ubar)
    _svg.loglog_fit_plot(
        os.path.join(outdir, "rate_fit.svg"),
        [2.0 + n for n in result.n_half], list(worst),
        result.slope, result.intercept,
        "Refinement study", "2 + ntilde", "sup error")
    print(f"fitted slope: {result.slope:.4f}")
    return 0


def _lr_kwargs(cfg: Dict) -> Dict:
    out: Dict = {}
    if cfg["base_lr"] is not None:
        out["base_lr"] = float(cfg["base_lr"])
    if cfg["lr_decay"] is not None:
        out["lr_decay"] = float(cfg["lr_decay"])
    if cfg["lr_decay_period"] is not None:
        out["lr_decay_period"] = int(cfg["lr_decay_period"])
    return out


def _picard_config(cfg: Dict, kz: Optional[float] = None) -> NnPicardConfig:
    overrides = _overrides(cfg) or {}
    if kz is not None:
        overrides["kz"] = kz
    return NnPicardConfig(
        problem=cfg["problem"], dim=int(cfg["dim"]),
        overrides=overrides or None, params=_params(cfg),
        n_iters=int(cfg["n_iters"]), m_samples=int(cfg["m_samples"]),
        train_steps=int(cfg["train_steps"]),
        hidden=None if cfg["hidden"] is None else tuple(cfg["hidden"]),
        warm_start=bool(cfg["warm_start"]),
        dt=None if cfg["dt"] is None else float(cfg["dt"]),
        m_err=int(cfg["m_err"]), seed=int(cfg["seed"]), **_lr_kwargs(cfg))


def _direct_config(cfg: Dict, kz: Optional[float] = None,
                   seed: Optional[int] = None) -> DirectConfig:
    overrides = _overrides(cfg) or {}
    if kz is not None:
        overrides["kz"] = kz
    return DirectConfig(
        problem=cfg["problem"], dim=int(cfg["dim"]),
        overrides=overrides or None, params=_params(cfg),
        n_epochs=int(cfg["n_epochs"]),
        steps_per_epoch=int(cfg["steps_per_epoch"]),
        m_starts=int(cfg["m_starts"]), m_inner=int(cfg["m_inner"]),
        hidden=None if cfg["hidden"] is None else tuple(cfg["hidden"]),
        dt=None if cfg["dt"] is None else float(cfg["dt"]),
        m_err=int(cfg["m_err"]),
        seed=int(cfg["seed"] if seed is None else seed), **_lr_kwargs(cfg))


def _write_trace(outdir: str, trace) -> None:
    _write_csv(os.path.join(outdir, "nn_trace.csv"),
               ["n", "loss", "rel_err_u", "rel_err_ubar", "seconds"],
               [[row.n, row.loss, row.rel_err_u, row.rel_err_ubar,
                 row.seconds] for row in trace])
    finite = [row for row in trace
              if np.isfinite(row.rel_err_u) and row.rel_err_u > 0]
    if finite:
        _svg.line_plot(
            os.path.join(outdir, "nn_trace.svg"),
            [row.n for row in trace],
            {"loss": [row.loss for row in trace],
             "rel err u": [row.rel_err_u for row in trace],
             "rel err ubar": [row.rel_err_ubar for row in trace]},
            "Training trace", "iteration", "value", logy=True)


def _run_nn_picard(cfg: Dict, outdir: str) -> int:
    result = contraction_nn_solve(_picard_config(cfg), keep_nets=True)
    _write_trace(outdir, result.trace)
    for n, net in enumerate(result.nets, start=1):
        save_checkpoint(os.path.join(outdir, f"net_iter_{n:02d}.npz"), net)
    return 0


def _run_nn_direct(cfg: Dict, outdir: str) -> int:
    result = direct_nn_solve(_direct_config(cfg))
    _write_trace(outdir, result.trace)
    save_checkpoint(os.path.join(outdir, "net_final.npz"), result.net)
    return 0


def _run_contraction(cfg: Dict, outdir: str) -> int:
    problem = problem_by_name(cfg["problem"], int(cfg["dim"]),
                              _overrides(cfg))
    params = _params(cfg)
    report = validate_params(params, problem.gen)
    grid = Grid(problem.sde.dim, int(cfg["probe_n_half"]),
                float(cfg["probe_half_width"]) / int(cfg["probe_n_half"]))
    mu0 = np.random.Generator(np.random.Philox(int(cfg["seed"]))) \
        .normal(0.0, problem.mu0_std,
                size=(int(cfg["n_mu0_probes"]), problem.sde.dim))
    probes = np.vstack([grid.nodes, mu0])
    estimate = estimate_c_constants(
        problem, params, float(cfg["weight_degree"]), probes,
        int(cfg["m_samples"]),
        None if cfg["dt"] is None else float(cfg["dt"]), int(cfg["seed"]))
    if problem.sde.is_brownian and float(cfg["weight_degree"]) == 0.0:
        c_inf, c_tilde = brownian_c_infinity(params.discount_y,
                                             params.discount_z,
                                             problem.sde.dim)
        c_source = "closed form"
    else:
        c_inf, c_tilde = estimate.c_inf, estimate.c_tilde_inf
        c_source = "probe-max estimate (lower bound)"
    inputs = ContractionInputs(
        lip_y=problem.gen.lip_y, lip_z=problem.gen.lip_z,
        monotonicity=problem.gen.monotonicity,
        discount_y=params.discount_y, discount_z=params.discount_z,
        exp_rate=params.exp_rate, gamma_rate=params.gamma_rate,
        c_inf=c_inf, c_tilde_inf=c_tilde,
        depends_on_z=problem.gen.depends_on_z)
    rows = [["c_inf_estimate", estimate.c_inf, f"se={_format(estimate.c_inf_se)}"],
            ["c_tilde_inf_estimate", estimate.c_tilde_inf,
             f"se={_format(estimate.c_tilde_inf_se)}"],
            ["c_source", float("nan"), c_source],
            ["monotonicity_margin", report.monotonicity_margin,
             "ok" if report.monotonicity_margin > 0 else "non-positive"]]
    rows.extend([r.name, r.value, r.status]
                for r in contraction_report(inputs, float(cfg["p"])))
    _write_csv(os.path.join(outdir, "contraction_report.csv"),
               ["name", "value", "status"], rows)
    return 0


def _sweep_seed(base_seed: int, kz_index: int, rep: int) -> int:
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(kz_index, rep))
    return int(seq.generate_state(1, np.uint64)[0])


def _run_kz_sweep(cfg: Dict, outdir: str) -> int:
    kz_values = [float(v) for v in cfg["kz_list"]]
    reps = int(cfg["reps"])
    scheme = cfg["scheme"]
    rows = []
    per_kz: List[List[float]] = []
    for i, kz in enumerate(kz_values):
        errs = []
        for rep in range(reps):
            seed = _sweep_seed(int(cfg["seed"]), i, rep)
            try:
                if scheme == "nn-picard":
                    run_cfg = _picard_config({**cfg, "seed": seed}, kz=kz)
                    result = contraction_nn_solve(run_cfg)
                else:
                    run_cfg = _direct_config(cfg, kz=kz, seed=seed)
                    result = direct_nn_solve(run_cfg)
                last = result.trace[-1]
                du, dubar = last.rel_err_u, last.rel_err_ubar
            except (NonFiniteLoss, NonFiniteValue):
                du = dubar = float("inf")
            rows.append([kz, rep, du, dubar])
            errs.append(du)
        per_kz.append(errs)
    _write_csv(os.path.join(outdir, "kz_sweep.csv"),
               ["kz", "rep", "du", "dubar"], rows)
    quantiles = []
    for errs in per_kz:
        arr = np.asarray(errs)
        quantiles.append(list(np.quantile(arr, [0.1, 0.25, 0.5, 0.75, 0.9]))
                         if np.isfinite(arr).all()
                         else [float("inf")] * 5)
    _svg.whisker_plot(os.path.join(outdir, "kz_sweep.svg"), kz_values,
                      quantiles, f"Error vs z-Lipschitz constant ({scheme})",
                      "K_z", "relative error of u", logy=True)
    return 0


_RUNNERS = {
    "grid-solve": _run_grid_solve,
    "rate-study": _run_rate_study,
    "nn-picard": _run_nn_picard,
    "nn-direct": _run_nn_direct,
    "contraction": _run_contraction,
    "kz-sweep": _run_kz_sweep,
}


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = args.command
    try:
        cfg = _merge(command, args)
        # fail fast on bad names/values before creating any output
        _DISPATCH_VALIDATE[command](cfg)
    except (ConfigParse, UnknownProblem, NonPositiveRate, ValueError,
            TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    outdir = args.out if args.out else f"runs/{command}"
    os.makedirs(outdir, exist_ok=True)
    _echo_config(outdir, command, cfg)
    try:
        return _RUNNERS[command](cfg, outdir)
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


def _validate_grid(cfg: Dict) -> None:
    _grid_config(cfg).build_problem()


def _validate_rate(cfg: Dict) -> None:
    if len(cfg["ntilde_list"]) < 3:
        raise ConfigParse("ntilde_list needs at least 3 entries")
    problem_by_name(cfg["problem"], int(cfg["dim"]), _overrides(cfg))
    _params(cfg)
    _truncation(cfg)


def _validate_picard(cfg: Dict) -> None:
    _picard_config(cfg).build_problem()


def _validate_direct(cfg: Dict) -> None:
    _direct_config(cfg).build_problem()


def _validate_contraction(cfg: Dict) -> None:
    problem_by_name(cfg["problem"], int(cfg["dim"]), _overrides(cfg))
    if int(cfg["probe_n_half"]) < 1:
        raise ConfigParse("probe_n_half must be at least 1")
    _params(cfg)


def _validate_sweep(cfg: Dict) -> None:
    if cfg["scheme"] not in ("nn-picard", "nn-direct"):
        raise ConfigParse(f"unknown scheme {cfg['scheme']!r}")
    if not cfg["kz_list"]:
        raise ConfigParse("kz_list must be non-empty")
    if int(cfg["reps"]) < 1:
        raise ConfigParse("reps must be at least 1")
    # the sweep injects kz, so the problem must accept that override
    overrides = dict(_overrides(cfg) or {})
    overrides["kz"] = float(cfg["kz_list"][0])
    problem_by_name(cfg["problem"], int(cfg["dim"]), overrides)
    _params(cfg)


_DISPATCH_VALIDATE = {
    "grid-solve": _validate_grid,
    "rate-study": _validate_rate,
    "nn-picard": _validate_picard,
    "nn-direct": _validate_direct,
    "contraction": _validate_contraction,
    "kz-sweep": _validate_sweep,
}


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
