"""Problem definitions: PDE/fixed-point data plus a catalogue of test cases.

A :class:`Problem` bundles the coefficient functions (drift ``mu``, diffusion
``sigma``), the terminal condition ``g``, the nonlinearity ``f``, and the
regularity constants used by the bound evaluators.  Coefficient callables are
vectorized over leading axes: ``drift(x)`` maps ``(..., d) -> (..., d)``,
``diffusion(x)`` maps ``(..., d) -> (..., d, m)``, ``terminal(x)`` maps
``(..., d) -> (...)`` and ``nonlinearity(t, x, v)`` broadcasts over ``t``,
``x``, ``v``.

The constants are documented choices that make the sampled hypothesis checks
(:func:`validate`) pass on the default sampling box ``[-2, 2]^d``; no claim
of global tightness is made.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bounds import BoundParams, lyapunov_phi_batch

CATALOGUE = ("heat-quadratic", "linear-reaction", "nonlinear-coeff-sine", "scaled-bs")

DEFAULT_BOX_HALFWIDTH = 2.0
# safety margin applied on top of the exact box supremum when sizing b
_B_MARGIN = 1.1


class ProblemError(ValueError):
    """Unknown catalogue name or an override violating a problem invariant."""


@dataclass(frozen=True, eq=False)
class Problem:
    name: str
    d: int
    m: int
    T: float
    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    terminal: Callable[[np.ndarray], np.ndarray]
    nonlinearity: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    lip_f: float         # L, Lipschitz constant of f in v
    coeff_lip: float     # c, coefficient Lipschitz / growth constant
    growth_b: float      # b
    growth_beta: float   # beta
    growth_p: float      # p
    lyapunov_a: float    # a in phi(x) = 2a + 2||x||^2
    # (mu0, sigma0) when the coefficients are state-independent; enables the
    # closed-form path update in the Euler module
    constant_coefficients: Optional[tuple] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.d < 1 or self.m < 1 or self.T <= 0:
            raise ProblemError("require d >= 1, m >= 1, T > 0")
        if self.lip_f < 0 or self.coeff_lip < 1 or self.growth_b < 1:
            raise ProblemError("require L >= 0, c >= 1, b >= 1")
        if self.growth_beta < 1 or self.growth_p < 2 * self.growth_beta:
            raise ProblemError("require beta >= 1 and p >= 2*beta")
        if self.lyapunov_a < 0.5:
            raise ProblemError("require a >= 1/2 so that phi >= 1 everywhere")

    def phi(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(2.0 * self.lyapunov_a + 2.0 * np.dot(x.ravel(), x.ravel()))

    def bound_params(self, x) -> BoundParams:
        return BoundParams(
            b=self.growth_b,
            c=self.coeff_lip,
            beta=self.growth_beta,
            p=self.growth_p,
            T=self.T,
            phi_x=self.phi(x),
        )


@dataclass(frozen=True)
class ProblemId:
    name: str
    overrides: dict = field(default_factory=dict)


def _quadratic_terminal(x):
    return np.sum(x * x, axis=-1)


def _diag_matrix(values: np.ndarray) -> np.ndarray:
    """Embed (..., d) diagonal entries into (..., d, d) matrices."""
    d = values.shape[-1]
    out = np.zeros(values.shape + (d,))
    idx = np.arange(d)
    out[..., idx, idx] = values
    return out


def _growth_b_quadratic(d: int, T: float, a: float, box: float, extra_sup: float = 0.0) -> float:
    """Smallest documented b for max(|T f(.,0)|, |g|) <= b phi^(1/2) on the box.

    For quadratic g the ratio ||x||^2 / phi(x)^(1/2) is maximal at the box
    corner; ``extra_sup`` covers a bounded |T f(t, x, 0)| term via phi >= 2a.
    """
    corner = d * box * box
    ratio_g = corner / math.sqrt(2.0 * a + 2.0 * corner)
    ratio_f = extra_sup / math.sqrt(2.0 * a)
    return max(1.0, math.sqrt(T), _B_MARGIN * max(ratio_g, ratio_f))


def _make_heat_quadratic(d: int, T: float, a: float, lip_f_unused=None) -> Problem:
    mu0 = np.zeros(d)
    sig0 = np.eye(d)

    def drift(x):
        return np.zeros_like(x)

    def diffusion(x):
        return np.broadcast_to(np.eye(d), x.shape[:-1] + (d, d))

    def nonlinearity(t, x, v):
        return np.zeros_like(np.asarray(v, dtype=float))

    return Problem(
        name="heat-quadratic",
        d=d,
        m=d,
        T=T,
        drift=drift,
        diffusion=diffusion,
        terminal=_quadratic_terminal,
        nonlinearity=nonlinearity,
        lip_f=0.0,
        coeff_lip=4.0,
        growth_b=_growth_b_quadratic(d, T, a, DEFAULT_BOX_HALFWIDTH),
        growth_beta=1.0,
        growth_p=2.0,
        lyapunov_a=a,
        constant_coefficients=(mu0, sig0),
        params={"d": d, "T": T, "a": a},
    )


def _make_linear_reaction(d: int, T: float, a: float) -> Problem:
    base = _make_heat_quadratic(d, T, a)

    def nonlinearity(t, x, v):
        return np.asarray(v, dtype=float)

    return Problem(
        name="linear-reaction",
        d=d,
        m=d,
        T=T,
        drift=base.drift,
        diffusion=base.diffusion,
        terminal=_quadratic_terminal,
        nonlinearity=nonlinearity,
        lip_f=1.0,
        coeff_lip=4.0,
        growth_b=base.growth_b,
        growth_beta=1.0,
        growth_p=2.0,
        lyapunov_a=a,
        constant_coefficients=base.constant_coefficients,
        params={"d": d, "T": T, "a": a},
    )


def _make_nonlinear_coeff_sine(d: int, T: float, a: float, kappa: float, lip_f: float, source: float) -> Problem:
    if abs(kappa) > 2.0:
        raise ProblemError("nonlinear-coeff-sine requires |kappa| <= 2 (coefficient Lipschitz <= c)")
    if lip_f > 4.0:
        raise ProblemError("nonlinear-coeff-sine requires L <= 4 (v-Lipschitz <= c)")

    def drift(x):
        return kappa * np.sin(x)

    def diffusion(x):
        return _diag_matrix(1.0 + kappa * np.cos(x))

    def nonlinearity(t, x, v):
        t, v = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(v, dtype=float))
        return lip_f * np.sin(v) + source

    constant = None
    if kappa == 0.0:
        constant = (np.zeros(d), np.eye(d))

    return Problem(
        name="nonlinear-coeff-sine",
        d=d,
        m=d,
        T=T,
        drift=drift,
        diffusion=diffusion,
        terminal=_quadratic_terminal,
        nonlinearity=nonlinearity,
        lip_f=lip_f,
        coeff_lip=4.0,
        growth_b=_growth_b_quadratic(d, T, a, DEFAULT_BOX_HALFWIDTH, extra_sup=T * abs(source)),
        growth_beta=1.0,
        growth_p=2.0,
        lyapunov_a=max(a, d * (1.0 + abs(kappa)) ** 2 / 16.0),
        constant_coefficients=constant,
        params={"d": d, "T": T, "a": a, "kappa": kappa, "lip_f": lip_f, "source": source},
    )


def _make_scaled_bs(d: int, T: float, a: float, mu_bar: float, sigma_bar: float, lip_f: float, strike: float) -> Problem:
    if max(abs(mu_bar), abs(sigma_bar)) > 4.0:
        raise ProblemError("scaled-bs requires |mu_bar|, |sigma_bar| <= 4 (coefficient Lipschitz <= c)")
    if lip_f > 4.0:
        raise ProblemError("scaled-bs requires L <= 4")

    def drift(x):
        return mu_bar * x

    def diffusion(x):
        return _diag_matrix(sigma_bar * x)

    def terminal(x):
        return np.maximum(x[..., 0] - strike, 0.0)

    def nonlinearity(t, x, v):
        v = np.asarray(v, dtype=float)
        return lip_f * np.maximum(v, 0.0)

    return Problem(
        name="scaled-bs",
        d=d,
        m=d,
        T=T,
        drift=drift,
        diffusion=diffusion,
        terminal=terminal,
        nonlinearity=nonlinearity,
        lip_f=lip_f,
        coeff_lip=4.0,
        growth_b=max(1.0, math.sqrt(T)),
        growth_beta=1.0,
        growth_p=2.0,
        lyapunov_a=a,
        constant_coefficients=None,
        params={"d": d, "T": T, "a": a, "mu_bar": mu_bar, "sigma_bar": sigma_bar,
                "lip_f": lip_f, "strike": strike},
    )


_DEFAULTS = {
    "heat-quadratic": {"d": 1, "T": 1.0, "a": 1.0},
    "linear-reaction": {"d": 1, "T": 1.0, "a": 1.0},
    "nonlinear-coeff-sine": {"d": 1, "T": 1.0, "a": 1.0, "kappa": 0.5, "lip_f": 0.5, "source": 1.0},
    "scaled-bs": {"d": 1, "T": 1.0, "a": 1.0, "mu_bar": 0.06, "sigma_bar": 0.4, "lip_f": 0.5, "strike": 1.0},
}

_BUILDERS = {
    "heat-quadratic": lambda p: _make_heat_quadratic(p["d"], p["T"], p["a"]),
    "linear-reaction": lambda p: _make_linear_reaction(p["d"], p["T"], p["a"]),
    "nonlinear-coeff-sine": lambda p: _make_nonlinear_coeff_sine(
        p["d"], p["T"], p["a"], p["kappa"], p["lip_f"], p["source"]),
    "scaled-bs": lambda p: _make_scaled_bs(
        p["d"], p["T"], p["a"], p["mu_bar"], p["sigma_bar"], p["lip_f"], p["strike"]),
}


def instantiate(problem_id, **overrides) -> Problem:
    """Build a catalogue problem by name (or :class:`ProblemId`) with overrides."""
    if isinstance(problem_id, ProblemId):
        name = problem_id.name
        merged_overrides = dict(problem_id.overrides)
        merged_overrides.update(overrides)
    else:
        name = str(problem_id)
        merged_overrides = dict(overrides)
    if name not in _BUILDERS:
        raise ProblemError(f"unknown problem {name!r}; catalogue: {', '.join(CATALOGUE)}")
    params = dict(_DEFAULTS[name])
    for key, value in merged_overrides.items():
        if key not in params:
            raise ProblemError(f"problem {name!r} does not accept override {key!r}")
        params[key] = value
    params["d"] = int(params["d"])
    for key in params:
        if key != "d":
            params[key] = float(params[key])
    if params["d"] < 1:
        raise ProblemError("override d must be a positive integer")
    if params["T"] <= 0:
        raise ProblemError("override T must be positive")
    return _BUILDERS[name](params)


@dataclass
class Violation:
    inequality: str
    lhs: float
    rhs: float
    witness: dict


@dataclass
class ValidationReport:
    problem: str
    samples: int
    box_halfwidth: float
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations


def validate(problem: Problem, samples: int, seed: int,
             box_halfwidth: float = DEFAULT_BOX_HALFWIDTH) -> ValidationReport:
    """Monte Carlo spot check of every hypothesis inequality on sampled tuples.

    Samples ``(t, x, y, v, w)`` with ``x, y`` uniform on the box,
    ``v, w`` uniform on ``[-5, 5]`` and ``t`` uniform on ``[0, T]``; any
    violated inequality is recorded with its witnessing tuple.  Violations
    are report content, not errors.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    d, T = problem.d, problem.T
    c, b = problem.coeff_lip, problem.growth_b
    beta_over_p = problem.growth_beta / problem.growth_p
    a = problem.lyapunov_a
    violations = []

    t = rng.uniform(0.0, T, size=samples)
    x = rng.uniform(-box_halfwidth, box_halfwidth, size=(samples, d))
    y = rng.uniform(-box_halfwidth, box_halfwidth, size=(samples, d))
    z = rng.standard_normal(size=(samples, d))
    v = rng.uniform(-5.0, 5.0, size=samples)
    w = rng.uniform(-5.0, 5.0, size=samples)

    phi_x = lyapunov_phi_batch(x, a)
    phi_y = lyapunov_phi_batch(y, a)
    norm_x = np.linalg.norm(x, axis=-1)
    norm_xy = np.linalg.norm(x - y, axis=-1)
    mu_x, mu_y = problem.drift(x), problem.drift(y)
    sig_x, sig_y = problem.diffusion(x), problem.diffusion(y)
    g_x, g_y = problem.terminal(x), problem.terminal(y)
    f_x0 = problem.nonlinearity(t, x, np.zeros(samples))
    f_xv = problem.nonlinearity(t, x, v)
    f_yw = problem.nonlinearity(t, y, w)
    mu_0 = problem.drift(np.zeros((1, d)))[0]
    sig_0 = problem.diffusion(np.zeros((1, d)))[0]

    def record(mask, name, lhs, rhs, **extra):
        for i in np.flatnonzero(mask):
            violations.append(Violation(
                inequality=name,
                lhs=float(lhs[i]),
                rhs=float(rhs[i]),
                witness={"t": float(t[i]), "x": x[i].tolist(), "y": y[i].tolist(),
                         "v": float(v[i]), "w": float(w[i]), **extra},
            ))

    tol = 1e-12  # absolute slack for exact-equality corner cases

    # coefficient Lipschitz bounds
    lhs = np.sum((mu_x - mu_y) ** 2, axis=-1)
    rhs = c**2 * norm_xy**2
    record(lhs > rhs + tol, "drift-lipschitz", lhs, rhs)
    lhs = np.sum((sig_x - sig_y) ** 2, axis=(-2, -1))
    record(lhs > rhs + tol, "diffusion-lipschitz", lhs, rhs)

    # growth of the terminal condition and of f at v = 0
    lhs = np.maximum(np.abs(T * f_x0), np.abs(g_x))
    rhs = b * phi_x**beta_over_p
    record(lhs > rhs + tol, "growth", lhs, rhs)

    # joint Lipschitz bound coupling g and f through phi
    lhs = np.maximum(np.abs(g_x - g_y), T * np.abs(f_xv - f_yw))
    rhs = c * T * np.abs(v - w) + b * T**-0.5 * (phi_x + phi_y) ** beta_over_p * norm_xy
    record(lhs > rhs + tol, "joint-lipschitz", lhs, rhs)

    # Lyapunov derivative and coefficient growth at the origin
    norm_z = np.linalg.norm(z, axis=-1)
    lhs = np.abs(4.0 * np.sum(x * z, axis=-1)) / (phi_x ** ((problem.growth_p - 1) / problem.growth_p) * norm_z)
    cvec = np.full(samples, c)
    record(lhs > cvec + tol, "phi-gradient", lhs, cvec)
    lhs = 4.0 * norm_z**2 / (phi_x ** ((problem.growth_p - 2) / problem.growth_p) * norm_z**2)
    record(lhs > cvec + tol, "phi-hessian", lhs, cvec)
    lhs = (c * norm_x + np.linalg.norm(mu_0)) / phi_x ** (1.0 / problem.growth_p)
    record(lhs > cvec + tol, "drift-origin-growth", lhs, cvec)
    lhs = (c * norm_x + np.linalg.norm(sig_0)) / phi_x ** (1.0 / problem.growth_p)
    record(lhs > cvec + tol, "diffusion-origin-growth", lhs, cvec)

    return ValidationReport(problem=problem.name, samples=samples,
                            box_halfwidth=box_halfwidth, violations=violations)
