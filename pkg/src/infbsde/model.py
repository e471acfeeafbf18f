"""Problem definitions: SDE coefficients, generators, manufactured solutions.

All coefficient callables are vectorized over a leading batch axis.  Points
are ``(m, d)`` arrays; generator values are ``(m, d')``; gradient-side values
(``ubar = grad u . sigma``) are ``(m, d', d)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np


class NonPositiveRate(ValueError):
    """A discount or horizon rate is not strictly positive."""


class InconsistentDerivatives(ValueError):
    """Supplied derivatives disagree with finite differences."""


class UnknownProblem(ValueError):
    """Requested problem name is not in the registry."""


def as_points(x, dim: int) -> np.ndarray:
    """Coerce ``x`` to a ``(m, dim)`` float array.

    A flat array of length ``dim`` is read as a single point, except in one
    dimension where a flat array is read as ``m`` separate points.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr[:, None] if dim == 1 else arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {np.shape(x)}")
    return arr


@dataclass(frozen=True)
class SdeSpec:
    """Forward dynamics dX = drift(X) dt + diffusion(X) dW.

    ``diffusion_jacobian(x)[m, i, k, j]`` is the derivative of entry (i, k)
    of the diffusion matrix in direction j; it is required whenever the
    tangent process must be simulated (non-Brownian dynamics).
    """

    dim: int
    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    inverse_diffusion: Callable[[np.ndarray], np.ndarray]
    diffusion_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    drift_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lip_drift: float = 0.0
    lip_diffusion: float = 0.0
    bound_diffusion: float = 1.0
    bound_inverse_diffusion: float = 1.0
    is_brownian: bool = False


@dataclass(frozen=True)
class GeneratorSpec:
    """Driver f(x, y, z) together with its structural constants.

    ``lip_y``/``lip_z`` are Lipschitz constants in y and z, ``monotonicity``
    is the dissipativity constant of f in y, ``growth_bound`` bounds
    |f| <= growth_bound * (1 + |x|^growth_degree + |y| + |z|).

    ``f_y(x, y, z) -> (m, d', d')`` and ``f_z(x, y, z) -> (m, d', d', d)``
    are the driver Jacobians in y and z; they are optional and only needed
    by solvers that differentiate through the driver.
    """

    dim_y: int
    f: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    lip_y: float
    lip_z: float
    monotonicity: float
    growth_bound: float
    growth_degree: float = 0.0
    depends_on_z: bool = True
    f_y: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]] = None
    f_z: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class SchemeParams:
    """Free parameters of the randomized-horizon fixed-point representation.

    The value component is discounted at ``discount_y`` over an exponential
    horizon of rate ``exp_rate``; the gradient component is discounted at
    ``discount_z`` over a Gamma(1/2, gamma_rate) horizon.
    """

    discount_y: float = 2.0
    discount_z: float = 2.0
    exp_rate: float = 1.5
    gamma_rate: float = 1.5


@dataclass(frozen=True)
class AnalyticSolution:
    """Known solution pair: u(x) -> (m, d') and ubar(x) -> (m, d', d)."""

    u: Callable[[np.ndarray], np.ndarray]
    ubar: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Problem:
    """SDE + generator, an optional analytic solution, and the start law.

    ``mu0_std`` parameterizes the isotropic Gaussian N(0, mu0_std^2 I) used
    to draw starting points for training and error estimation.
    """

    name: str
    sde: SdeSpec
    gen: GeneratorSpec
    analytic: Optional[AnalyticSolution] = None
    mu0_std: float = 2.0


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple
    monotonicity_margin: float
    warnings: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def validate_params(params: SchemeParams, gen: GeneratorSpec) -> ValidationReport:
    """Check representation parameters against the generator constants.

    Raises :class:`NonPositiveRate` when any rate is not positive; every
    other constraint is reported pass/fail.  The monotonicity margin
    ``2*monotonicity - lip_z**2`` is attached as a warning when negative.
    """
    rates = {
        "discount_y": params.discount_y,
        "discount_z": params.discount_z,
        "exp_rate": params.exp_rate,
        "gamma_rate": params.gamma_rate,
    }
    bad = [k for k, v in rates.items() if v <= 0]
    if bad:
        raise NonPositiveRate(f"non-positive parameter(s): {', '.join(bad)}")
    checks = (
        ConstraintCheck(
            "rates positive", True,
            ", ".join(f"{k}={v:g}" for k, v in rates.items()),
        ),
        ConstraintCheck(
            "discount_y > exp_rate", params.discount_y > params.exp_rate,
            f"{params.discount_y:g} > {params.exp_rate:g}",
        ),
        ConstraintCheck(
            "discount_z > gamma_rate", params.discount_z > params.gamma_rate,
            f"{params.discount_z:g} > {params.gamma_rate:g}",
        ),
    )
    margin = 2.0 * gen.monotonicity - gen.lip_z**2
    warnings = ()
    if margin < 0:
        warnings = (
            f"monotonicity margin 2*mu - lip_z^2 = {margin:g} is negative; "
            "the representation may fail to contract",
        )
    return ValidationReport(checks, margin, warnings)


def _finite_difference_check(u, grad_u, hess_u, dim: int, dim_y: int) -> None:
    """Spot-check grad_u against u and hess_u against grad_u."""
    rng = np.random.default_rng(1234)
    x = rng.normal(0.0, 1.0, (6, dim))
    h = 1e-5
    fd_grad = np.empty((6, dim_y, dim))
    fd_hess = np.empty((6, dim_y, dim, dim))
    for j in range(dim):
        step = np.zeros(dim)
        step[j] = h
        fd_grad[:, :, j] = (u(x + step) - u(x - step)) / (2 * h)
        fd_hess[:, :, :, j] = (grad_u(x + step) - grad_u(x - step)) / (2 * h)
    if not np.allclose(fd_grad, grad_u(x), rtol=1e-4, atol=1e-6):
        raise InconsistentDerivatives("grad_u disagrees with finite differences of u")
    if not np.allclose(fd_hess, hess_u(x), rtol=1e-4, atol=1e-6):
        raise InconsistentDerivatives("hess_u disagrees with finite differences of grad_u")


def _driver_derivative_check(gen: GeneratorSpec, dim: int) -> None:
    """Spot-check f_y/f_z against finite differences of f, when supplied."""
    if gen.f_y is None and gen.f_z is None:
        return
    rng = np.random.default_rng(4321)
    m, dy = 6, gen.dim_y
    x = rng.normal(0.0, 1.0, (m, dim))
    y = rng.normal(0.0, 1.0, (m, dy))
    z = rng.normal(0.0, 1.0, (m, dy, dim))
    h = 1e-6
    if gen.f_y is not None:
        fd = np.empty((m, dy, dy))
        for j in range(dy):
            step = np.zeros(dy)
            step[j] = h
            fd[:, :, j] = (gen.f(x, y + step, z) - gen.f(x, y - step, z)) / (2 * h)
        if not np.allclose(fd, gen.f_y(x, y, z), rtol=1e-4, atol=1e-6):
            raise InconsistentDerivatives("f_y disagrees with finite differences of f")
    if gen.f_z is not None:
        fd = np.empty((m, dy, dy, dim))
        for j in range(dy):
            for k in range(dim):
                step = np.zeros((dy, dim))
                step[j, k] = h
                fd[:, :, j, k] = (gen.f(x, y, z + step) - gen.f(x, y, z - step)) / (2 * h)
        if not np.allclose(fd, gen.f_z(x, y, z), rtol=1e-4, atol=1e-6):
            raise InconsistentDerivatives("f_z disagrees with finite differences of f")


def manufacture_problem(
    u, grad_u, hess_u,
    f0: GeneratorSpec,
    sde: SdeSpec,
    mu0_std: float = 2.0,
    name: str = "manufactured",
) -> Problem:
    """Build a problem whose exact solution is the supplied ``u``.

    The generator is ``f(x,y,z) = f0(x,y,z) + g(x)`` with the x-only
    correction ``g`` chosen so that u solves the semi-linear elliptic
    equation  1/2 Tr(hess_u sigma sigma^T) + drift . grad_u + f(x, u, ubar) = 0
    with ubar = grad_u . sigma.  The correction does not change the
    Lipschitz/monotonicity constants, which are copied from ``f0``; the same
    holds for the ``f_y``/``f_z`` Jacobians, carried over unchanged.
    """
    _finite_difference_check(u, grad_u, hess_u, sde.dim, f0.dim_y)
    _driver_derivative_check(f0, sde.dim)

    def ubar(x):
        x = as_points(x, sde.dim)
        return np.einsum("mij,mjk->mik", grad_u(x), sde.diffusion(x))

    def generator_operator(x):
        # 1/2 Tr(hess_u sigma sigma^T) + drift . grad_u, shape (m, d')
        sig = sde.diffusion(x)
        ssq = np.einsum("mak,mbk->mab", sig, sig)
        out = 0.5 * np.einsum("miab,mab->mi", hess_u(x), ssq)
        out += np.einsum("mij,mj->mi", grad_u(x), sde.drift(x))
        return out

    def f(x, y, z):
        x = as_points(x, sde.dim)
        return f0.f(x, y, z) - generator_operator(x) - f0.f(x, u(x), ubar(x))

    gen = replace(f0, f=f)
    analytic = AnalyticSolution(u=lambda x: u(as_points(x, sde.dim)), ubar=ubar)
    return Problem(name=name, sde=sde, gen=gen, analytic=analytic, mu0_std=mu0_std)


def brownian_sde(dim: int) -> SdeSpec:
    """Driftless unit-diffusion dynamics, flagged for exact sampling."""
    eye = np.eye(dim)

    def drift(x):
        return np.zeros_like(x)

    def constant_eye(x):
        return np.broadcast_to(eye, (x.shape[0], dim, dim))

    return SdeSpec(
        dim=dim,
        drift=drift,
        diffusion=constant_eye,
        inverse_diffusion=constant_eye,
        lip_drift=0.0,
        lip_diffusion=0.0,
        bound_diffusion=1.0,
        bound_inverse_diffusion=1.0,
        is_brownian=True,
    )


def tanh_sigma_sde(eps: float) -> SdeSpec:
    """One-dimensional dynamics with diffusion 1 + eps*tanh(x), no drift."""
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1) so the diffusion stays positive")

    def drift(x):
        return np.zeros_like(x)

    def diffusion(x):
        return (1.0 + eps * np.tanh(x))[:, :, None]

    def inverse_diffusion(x):
        return 1.0 / (1.0 + eps * np.tanh(x))[:, :, None]

    def diffusion_jacobian(x):
        return (eps * (1.0 - np.tanh(x) ** 2))[:, :, None, None]

    return SdeSpec(
        dim=1,
        drift=drift,
        diffusion=diffusion,
        inverse_diffusion=inverse_diffusion,
        diffusion_jacobian=diffusion_jacobian,
        lip_drift=0.0,
        lip_diffusion=eps,
        bound_diffusion=1.0 + eps,
        bound_inverse_diffusion=1.0 / (1.0 - eps),
        is_brownian=False,
    )


def _arctan_family(dim: int, c: float, kz: float, sde: SdeSpec, mu0_std: float,
                   name: str) -> Problem:
    """Manufactured problem with u(x) = mean(arctan(x_i))."""

    def u(x):
        x = as_points(x, dim)
        return np.mean(np.arctan(x), axis=1, keepdims=True)

    def grad_u(x):
        x = as_points(x, dim)
        return (1.0 / (dim * (1.0 + x**2)))[:, None, :]

    def hess_u(x):
        x = as_points(x, dim)
        m = x.shape[0]
        out = np.zeros((m, 1, dim, dim))
        idx = np.arange(dim)
        out[:, 0, idx, idx] = -2.0 * x / (dim * (1.0 + x**2) ** 2)
        return out

    def f0(x, y, z):
        xn = np.linalg.norm(x, axis=1, keepdims=True)
        zn = np.linalg.norm(z, axis=2)
        return -c * y + np.cos(y + xn) + kz * np.sin(zn)

    def f0_y(x, y, z):
        xn = np.linalg.norm(x, axis=1, keepdims=True)
        return (-c - np.sin(y + xn))[:, :, None]

    def f0_z(x, y, z):
        zn = np.linalg.norm(z, axis=2, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(zn > 0, z / zn, 0.0)
        return (kz * np.cos(zn) * unit)[:, :, None, :]

    # |d/dx x/(1+x^2)^2| peaks at 9/(16 sqrt(3)); used only in the growth bound
    corr_bound = (
        0.5 * sde.bound_diffusion**2 * 0.6495 + c * np.pi / 2 + 1.0 + kz
    )
    gen0 = GeneratorSpec(
        dim_y=1,
        f=f0,
        lip_y=c + 1.0,
        lip_z=kz,
        monotonicity=c - 1.0,
        growth_bound=max(c, 1.0 + kz + corr_bound),
        growth_degree=0.0,
        depends_on_z=kz != 0.0,
        f_y=f0_y,
        f_z=f0_z,
    )
    return manufacture_problem(u, grad_u, hess_u, gen0, sde, mu0_std=mu0_std, name=name)


def _linear_constant(dim: int, mu: float, c0: float, mu0_std: float) -> Problem:
    """f = -mu*y + c0 under Brownian dynamics; solution u = c0/mu, ubar = 0."""
    if mu <= 0:
        raise ValueError("mu must be positive for a well-posed constant solution")
    level = c0 / mu

    def u(x):
        x = as_points(x, dim)
        return np.full((x.shape[0], 1), level)

    def grad_u(x):
        x = as_points(x, dim)
        return np.zeros((x.shape[0], 1, dim))

    def hess_u(x):
        x = as_points(x, dim)
        return np.zeros((x.shape[0], 1, dim, dim))

    def f0(x, y, z):
        return -mu * y + c0

    def f0_y(x, y, z):
        return np.full((x.shape[0], 1, 1), -mu)

    def f0_z(x, y, z):
        return np.zeros((x.shape[0], 1, 1, dim))

    gen0 = GeneratorSpec(
        dim_y=1,
        f=f0,
        lip_y=mu,
        lip_z=0.0,
        monotonicity=mu,
        growth_bound=max(mu, abs(c0)),
        growth_degree=0.0,
        depends_on_z=False,
        f_y=f0_y,
        f_z=f0_z,
    )
    return manufacture_problem(u, grad_u, hess_u, gen0, brownian_sde(dim),
                               mu0_std=mu0_std, name="linear-constant")


PROBLEM_NAMES = ("arctan-const-sigma", "arctan-tanh-sigma", "linear-constant")


def problem_by_name(name: str, d: int = 1, overrides: Optional[dict] = None) -> Problem:
    """Construct a registered problem.

    Parameters
    ----------
    name : one of ``PROBLEM_NAMES``.
    d : state dimension (``arctan-tanh-sigma`` requires d=1).
    overrides : optional map of problem constants; supported keys are
        ``c``, ``kz`` (arctan family), ``eps`` (tanh diffusion),
        ``mu``, ``c0`` (linear-constant), and ``mu0_std``.
    """
    ov = dict(overrides or {})
    mu0_std = float(ov.pop("mu0_std", 2.0))
    if name == "arctan-const-sigma":
        c = float(ov.pop("c", 2.0))
        kz = float(ov.pop("kz", 0.5))
        _reject_unknown(name, ov)
        return _arctan_family(d, c, kz, brownian_sde(d), mu0_std, name)
    if name == "arctan-tanh-sigma":
        if d != 1:
            raise ValueError("arctan-tanh-sigma is one-dimensional")
        c = float(ov.pop("c", 2.0))
        kz = float(ov.pop("kz", 0.5))
        eps = float(ov.pop("eps", 0.9))
        _reject_unknown(name, ov)
        return _arctan_family(1, c, kz, tanh_sigma_sde(eps), mu0_std, name)
    if name == "linear-constant":
        mu = float(ov.pop("mu", 2.0))
        c0 = float(ov.pop("c0", 3.0))
        _reject_unknown(name, ov)
        return _linear_constant(d, mu, c0, mu0_std)
    raise UnknownProblem(f"unknown problem {name!r}; choose from {PROBLEM_NAMES}")


def _reject_unknown(name: str, leftover: dict) -> None:
    if leftover:
        raise ValueError(f"unsupported override(s) for {name!r}: {sorted(leftover)}")
