"""Noisy optimisers used as portfolio members.

All three run on the :class:`~noisy_portfolio.core.SolverDriver` protocol, so
each can be advanced by an exact number of evaluations.

Solver keys
-----------
``rsaes``
    Self-adaptive evolution strategy with resamplings growing polynomially
    with the generation index.
``fabian1``, ``fabian2``
    Finite-difference stochastic gradient with ``(gamma, a, c)`` set to
    ``(0.1, 1, 100)`` and ``(0.49, 1, 2)``.
``fabian{gamma,a,c}``
    Fully parametrised finite-difference gradient, e.g. ``fabian{0.1,5,100}``.
``newton``
    Finite-difference Newton with ``(A, alpha, B, beta) = (100, 4, 1, 2)``.
``synthetic-C{C}-a{alpha}``
    :class:`~noisy_portfolio.problems.SyntheticRegretSolver`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from .core import (
    ContractViolation,
    NoisyProblem,
    RandomStream,
    SolverDriver,
    ceil_int,
)
from .problems import SyntheticRegretSolver, parse_synthetic_key

__all__ = [
    "RsaesConfig",
    "FabianConfig",
    "NewtonConfig",
    "RSAES",
    "Fabian",
    "Newton",
    "FABIAN1",
    "FABIAN2",
    "NEWTON",
    "fabian_sample_count",
    "fabian_weights",
    "parent_indices",
    "solver_from_key",
    "SolverFactory",
]

SolverFactory = Callable[[NoisyProblem, RandomStream], SolverDriver]


# ---------------------------------------------------------------------------
# RSAES
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RsaesConfig:
    """Parameters of the resampling self-adaptive evolution strategy.

    ``lam`` and ``mu`` default to ``10 d`` and ``5 d``. Generation ``n``
    evaluates every offspring ``ceil(K * n**zeta)`` times.
    """

    lam: Optional[int] = None
    mu: Optional[int] = None
    K: float = 10.0
    zeta: float = 2.0

    def __post_init__(self):
        if self.K <= 0:
            raise ContractViolation("K must be positive")
        if self.zeta < 0:
            raise ContractViolation("zeta must be non-negative")
        if self.lam is not None and self.lam < 1:
            raise ContractViolation("lambda must be positive")
        if self.mu is not None and self.mu < 1:
            raise ContractViolation("mu must be positive")
        if self.lam is not None and self.mu is not None and self.mu > self.lam:
            raise ContractViolation("mu cannot exceed lambda")

    def sizes(self, dimension: int):
        lam = 10 * dimension if self.lam is None else self.lam
        mu = 5 * dimension if self.mu is None else self.mu
        if mu > lam:
            raise ContractViolation("mu cannot exceed lambda")
        return lam, mu


def parent_indices(lam: int, mu: int) -> np.ndarray:
    """Parent of each offspring: offspring ``j`` (0-based) uses parent ``j mod mu``."""
    return np.arange(lam) % mu


class RSAES(SolverDriver):
    """(mu/1, lambda) self-adaptive ES with resampled offspring.

    Every parent starts at ``x0`` with step size 1. Offspring ``j`` mutates
    its parent's step size by ``exp(N / (2 d))`` and its position by
    ``sigma_j * N_d``. The ``mu`` offspring with the lowest resampled means
    become the next parents; the best of them is the recommendation.
    """

    name = "rsaes"

    def __init__(self, problem, stream, config: RsaesConfig = RsaesConfig(), x0=None):
        super().__init__(problem, stream, x0)
        self.config = config
        self.lam, self.mu = config.sizes(problem.dimension)
        self.parents = np.repeat(self.x0[None, :], self.mu, axis=0)
        self.sigmas = np.ones(self.mu)
        self.parent_means = np.zeros(self.mu)
        self.generation = 1

    def resamplings(self, n: int) -> int:
        return ceil_int(self.config.K * n ** self.config.zeta)

    def _iteration(self):
        d = self.problem.dimension
        idx = parent_indices(self.lam, self.mu)
        sig = self.sigmas[idx] * np.exp(self.search_rng.standard_normal(self.lam) / (2.0 * d))
        offspring = self.parents[idx] + sig[:, None] * self.search_rng.standard_normal((self.lam, d))
        means = yield offspring, self.resamplings(self.generation)
        order = np.argsort(means, kind="stable")[: self.mu]
        self.parents = offspring[order]
        self.sigmas = sig[order]
        self.parent_means = means[order]
        self._recommend(self.parents[0])
        self.generation += 1

    def _inject(self, x):
        worst = int(np.argmax(self.parent_means))
        self.parents[worst] = x
        self.sigmas[worst] = float(np.mean(self.sigmas))
        self.parent_means[worst] = -np.inf


# ---------------------------------------------------------------------------
# Fabian
# ---------------------------------------------------------------------------

def fabian_sample_count(gamma: float) -> int:
    """Smallest even ``s >= 1/(2 gamma) - 1`` (and at least 2)."""
    target = 1.0 / (2.0 * gamma) - 1.0
    return max(2, 2 * ceil_int(target / 2.0))


def fabian_weights(scales) -> np.ndarray:
    """Finite-difference weights for the step multipliers ``scales``.

    Solves ``sum_j w_j u_j = 1`` and ``sum_j w_j u_j**(2k+1) = 0`` for
    ``k = 1 .. h-1``, so that the weighted central differences recover the
    gradient exactly for polynomials of degree up to ``2h``.
    """
    u = np.asarray(scales, dtype=float)
    h = u.size
    if h == 0 or len(set(np.abs(u))) != h or np.any(u == 0):
        raise ContractViolation("scales must be distinct and non-zero")
    vander = np.array([u ** (2 * k + 1) for k in range(h)])
    rhs = np.zeros(h)
    rhs[0] = 1.0
    return np.linalg.solve(vander, rhs)


@dataclass(frozen=True)
class FabianConfig:
    """Parameters of the finite-difference gradient method.

    Iteration ``n`` uses the step ``sigma_n = c / n**gamma`` and the update
    ``x <- x - (a / n) * g``. ``s`` evaluations per axis are spread over the
    scales ``u_j = 1/j``, ``j = 1 .. s/2``.
    """

    gamma: float
    a: float
    c: float
    s: int = field(init=False)
    scales: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 < self.gamma < 0.5:
            raise ContractViolation(f"gamma must lie in (0, 1/2), got {self.gamma!r}")
        if self.a <= 0 or self.c <= 0:
            raise ContractViolation("a and c must be positive")
        s = fabian_sample_count(self.gamma)
        scales = 1.0 / np.arange(1, s // 2 + 1)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "weights", fabian_weights(scales))


FABIAN1 = FabianConfig(gamma=0.1, a=1.0, c=100.0)
FABIAN2 = FabianConfig(gamma=0.49, a=1.0, c=2.0)


class Fabian(SolverDriver):
    """Stochastic gradient descent on weighted central finite differences.

    One iteration costs ``s * d`` evaluations, one per point
    ``x +/- u_j sigma_n e_i``.
    """

    def __init__(self, problem, stream, config: FabianConfig = FABIAN1, x0=None, name=None):
        super().__init__(problem, stream, x0)
        self.config = config
        self.x = self.x0.copy()
        self.n = 1
        self.last_gradient: Optional[np.ndarray] = None
        self.name = name or f"fabian{{{config.gamma:g},{config.a:g},{config.c:g}}}"
        d = problem.dimension
        # offsets[j, i] = u_j * e_i; multiplied by sigma_n each iteration
        self._offsets = (self.config.scales[:, None, None] * np.eye(d)[None]).reshape(-1, d)

    def evaluations_per_iteration(self) -> int:
        return self.config.s * self.problem.dimension

    def _iteration(self):
        cfg = self.config
        n = self.n
        sigma = cfg.c / n ** cfg.gamma
        step = sigma * self._offsets
        points = np.concatenate([self.x + step, self.x - step])
        values = yield points, 1
        half = step.shape[0]
        diff = (values[:half] - values[half:]).reshape(cfg.scales.size, -1)
        grad = cfg.weights @ diff / (2.0 * sigma)
        self.last_gradient = grad
        self.x = self.x - (cfg.a / n) * grad
        self._recommend(self.x)
        self.n += 1

    def _inject(self, x):
        self.x = np.array(x, dtype=float)


# ---------------------------------------------------------------------------
# Newton
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NewtonConfig:
    """Parameters of the finite-difference Newton method.

    Iteration ``n`` probes at distance ``sigma_n = A / n**alpha`` with
    ``ceil(B n**beta)`` resamplings per gradient/diagonal point and
    ``ceil(B n**beta / 10)`` per off-diagonal point. Steps longer than
    ``sigma_n / 2`` are shortened to that length.
    """

    A: float = 100.0
    alpha: float = 4.0
    B: float = 1.0
    beta: float = 2.0

    def __post_init__(self):
        if self.A <= 0 or self.B <= 0:
            raise ContractViolation("A and B must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ContractViolation("alpha and beta must be non-negative")


NEWTON = NewtonConfig()


class Newton(SolverDriver):
    """Newton steps on finite-difference gradient and Hessian estimates.

    Points per iteration: ``x +/- sigma e_i`` and ``x`` itself with ``k``
    resamplings (these give both the gradient and the Hessian diagonal), and
    ``x + sigma(+/-e_i +/- e_j)`` for every pair ``i < j`` with ``k2``
    resamplings. When the Hessian estimate is singular or the Newton step is
    not finite, the step falls back to ``-g`` (still clipped).
    """

    name = "newton"

    def __init__(self, problem, stream, config: NewtonConfig = NEWTON, x0=None):
        super().__init__(problem, stream, x0)
        self.config = config
        self.x = self.x0.copy()
        self.n = 1
        self.fallbacks = 0
        self.last_gradient: Optional[np.ndarray] = None
        self.last_hessian: Optional[np.ndarray] = None
        d = problem.dimension
        eye = np.eye(d)
        self._pairs = list(combinations(range(d), 2))
        corners = []
        for i, j in self._pairs:
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                corners.append(si * eye[i] + sj * eye[j])
        self._axis = eye
        self._corners = np.array(corners).reshape(-1, d)

    def resamplings(self, n: int):
        cfg = self.config
        k = ceil_int(cfg.B * n ** cfg.beta)
        k2 = ceil_int(cfg.B * n ** cfg.beta / 10.0)
        return k, k2

    def evaluations_per_iteration(self, n: int) -> int:
        d = self.problem.dimension
        k, k2 = self.resamplings(n)
        return (2 * d + 1) * k + 4 * len(self._pairs) * k2

    def _iteration(self):
        cfg = self.config
        d = self.problem.dimension
        n = self.n
        sigma = cfg.A / n ** cfg.alpha
        k, k2 = self.resamplings(n)
        x = self.x
        points = np.concatenate([x + sigma * self._axis, x - sigma * self._axis, x[None, :],
                                 x + sigma * self._corners])
        counts = np.concatenate([np.full(2 * d + 1, k), np.full(self._corners.shape[0], k2)])
        values = yield points, counts
        f_plus, f_minus, f0 = values[:d], values[d:2 * d], values[2 * d]
        corner = values[2 * d + 1:].reshape(-1, 4)
        grad = (f_plus - f_minus) / (2.0 * sigma)
        hess = np.diag((f_plus - 2.0 * f0 + f_minus) / sigma ** 2)
        for (i, j), (fpp, fpm, fmp, fmm) in zip(self._pairs, corner):
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * sigma ** 2)
        self.last_gradient, self.last_hessian = grad, hess
        step = None
        if np.all(np.isfinite(hess)) and np.linalg.cond(hess) < 1e12:
            try:
                step = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                step = None
        if step is None or not np.all(np.isfinite(step)):
            self.fallbacks += 1
            self.events.append(("gradient-fallback", n))
            step = -grad
        length = float(np.linalg.norm(step))
        if length > sigma / 2.0:
            step = step * (sigma / 2.0 / length)
        self.x = x + step
        self._recommend(self.x)
        self.n += 1

    def _inject(self, x):
        self.x = np.array(x, dtype=float)


# ---------------------------------------------------------------------------
# keys
# ---------------------------------------------------------------------------

_FABIAN_RE = re.compile(r"^fabian\{([^}]*)\}$")


def solver_from_key(key: str) -> SolverFactory:
    """Return a factory ``(problem, stream) -> driver`` for a solver key."""
    key = key.strip()
    if key == "rsaes":
        return lambda problem, stream: RSAES(problem, stream)
    if key == "fabian1":
        return lambda problem, stream: Fabian(problem, stream, FABIAN1, name="fabian1")
    if key == "fabian2":
        return lambda problem, stream: Fabian(problem, stream, FABIAN2, name="fabian2")
    if key == "newton":
        return lambda problem, stream: Newton(problem, stream, NEWTON)
    match = _FABIAN_RE.match(key)
    if match:
        try:
            gamma, a, c = (float(v) for v in match.group(1).split(","))
        except ValueError:
            raise ContractViolation(f"fabian key needs three numbers gamma,a,c: {key!r}") from None
        config = FabianConfig(gamma=gamma, a=a, c=c)
        return lambda problem, stream: Fabian(problem, stream, config, name=key)
    if key.startswith("synthetic-"):
        C, alpha = parse_synthetic_key(key)
        return lambda problem, stream: SyntheticRegretSolver(problem, stream, C, alpha)
    raise ContractViolation(f"unknown solver key {key!r}")
