"""Noisy test problems and synthetic solvers with a known regret profile.

Problem keys
------------
``sphere-d{d}-z{z}``
    ``f(x) = ||x||^2 + ||x||^z N`` in dimension ``d``.
``synthetic-C{C}-a{alpha}``
    One-dimensional line ``f(x) = x + N``; used with
    :class:`SyntheticRegretSolver` whose recommendation after ``m``
    evaluations is ``C / m**alpha``.
"""

from __future__ import annotations

import math
import re
from typing import Callable, Optional

import numpy as np

from .core import (
    ContractViolation,
    NoisyProblem,
    NonFiniteFitnessError,
    RandomStream,
    SolverDriver,
    as_point,
)

__all__ = [
    "SphereProblem",
    "ActuatorNoiseProblem",
    "CallableProblem",
    "RegretLineProblem",
    "SyntheticRegretSolver",
    "make_sphere",
    "synthetic_regret_value",
    "problem_from_key",
    "parse_synthetic_key",
]


class SphereProblem(NoisyProblem):
    """Sphere with multiplicative-power noise.

    Parameters
    ----------
    dimension : int
        Search-space dimension ``d >= 1``.
    z : float
        Noise exponent. ``z = 0`` gives additive unit noise; ``z = 2`` makes the
        noise vanish at the optimum as fast as the signal does.
    noise_scale : float, default 1.0
        Multiplier on the noise term; ``0`` yields the noiseless sphere.
    """

    def __init__(self, dimension: int, z: float = 0.0, noise_scale: float = 1.0):
        if int(dimension) != dimension or dimension < 1:
            raise ContractViolation(f"dimension must be a positive integer, got {dimension!r}")
        if z < 0:
            raise ContractViolation(f"noise exponent z must be non-negative, got {z!r}")
        if noise_scale < 0:
            raise ContractViolation("noise_scale must be non-negative")
        self.dimension = int(dimension)
        self.z = float(z)
        self.noise_scale = float(noise_scale)
        self.optimum = np.zeros(self.dimension)
        zs = f"{int(z)}" if float(z).is_integer() else f"{z:g}"
        self.name = f"sphere-d{self.dimension}-z{zs}"

    def _draw(self, points, rng):
        r2 = np.einsum("ij,ij->i", points, points)
        noise = rng.standard_normal(points.shape[0])
        if self.noise_scale == 0.0:
            return r2
        if self.z == 0.0:
            return r2 + self.noise_scale * noise
        return r2 + self.noise_scale * r2 ** (self.z / 2.0) * noise

    def expected_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ x)


def make_sphere(d: int, z: float, noise_scale: float = 1.0) -> SphereProblem:
    """Shorthand for :class:`SphereProblem`."""
    return SphereProblem(d, z, noise_scale)


class ActuatorNoiseProblem(NoisyProblem):
    """Noise on the input: ``f(x) = g(x + noise_scale * N)``.

    ``function`` maps an ``(n, d)`` array to ``n`` values. No exact oracle.
    """

    def __init__(self, function: Callable[[np.ndarray], np.ndarray], dimension: int,
                 noise_scale: float = 1.0, name: str = "actuator"):
        if noise_scale < 0:
            raise ContractViolation("noise_scale must be non-negative")
        self.function = function
        self.dimension = int(dimension)
        self.noise_scale = float(noise_scale)
        self.optimum = None
        self.name = name

    def _draw(self, points, rng):
        perturbed = points + self.noise_scale * rng.standard_normal(points.shape)
        return np.asarray(self.function(perturbed), dtype=float).reshape(-1)


class CallableProblem(NoisyProblem):
    """User-supplied scalar objective ``fn(x, rng) -> float``.

    Pass ``expected`` and ``optimum`` to get exact regret; otherwise regret is
    estimated by Monte Carlo and flagged as such.
    """

    def __init__(self, fn: Callable[[np.ndarray, np.random.Generator], float], dimension: int,
                 expected: Optional[Callable[[np.ndarray], float]] = None,
                 optimum=None, name: str = "callable"):
        self.fn = fn
        self.dimension = int(dimension)
        self.expected = expected
        self.optimum = None if optimum is None else as_point(optimum, self.dimension)
        self.name = name

    @property
    def has_oracle(self) -> bool:
        return self.expected is not None and self.optimum is not None

    def _draw(self, points, rng):
        return np.array([float(self.fn(p, rng)) for p in points])

    def expected_value(self, x) -> float:
        if self.expected is None:
            raise NotImplementedError(f"{self.name} has no exact expected-value oracle")
        return float(self.expected(np.asarray(x, dtype=float)))


class RegretLineProblem(NoisyProblem):
    """``f(x) = x + N`` on the real line; the regret of ``x`` is ``x`` itself.

    The mean of ``s`` draws is sampled directly as ``x + N / sqrt(s)``, which
    has exactly the law of the empirical mean and costs O(1).
    """

    name = "regret-line"
    dimension = 1

    def __init__(self, noise_scale: float = 1.0):
        self.noise_scale = float(noise_scale)
        self.optimum = np.zeros(1)

    def _draw(self, points, rng):
        return points[:, 0] + self.noise_scale * rng.standard_normal(points.shape[0])

    def sample_mean(self, x, s, rng):
        x = float(np.asarray(x, dtype=float).reshape(-1)[0])
        if not math.isfinite(x):
            raise NonFiniteFitnessError(f"{self.name}: non-finite point")
        return x + self.noise_scale * float(rng.standard_normal()) / math.sqrt(s)

    def expected_value(self, x) -> float:
        return float(np.asarray(x, dtype=float).reshape(-1)[0])


def synthetic_regret_value(solver, m: int) -> float:
    """Regret ``C / m**alpha`` of a synthetic solver after ``m >= 1`` evaluations.

    ``solver`` is anything with ``C`` and ``alpha`` attributes.
    """
    if int(m) != m or m < 1:
        raise ContractViolation(f"m must be a positive integer, got {m!r}")
    return solver.C / int(m) ** solver.alpha


class SyntheticRegretSolver(SolverDriver):
    """Solver whose regret after ``m`` evaluations is exactly ``C / max(m, 1)**alpha``.

    Its evaluations are counted but never drawn, so advancing costs O(1)
    whatever the count. It ignores injected points.
    """

    def __init__(self, problem: NoisyProblem, stream: RandomStream, C: float, alpha: float):
        if C < 0:
            raise ContractViolation("C must be non-negative")
        if alpha < 0:
            raise ContractViolation("alpha must be non-negative")
        if problem.dimension != 1:
            raise ContractViolation("synthetic solvers live on a one-dimensional problem")
        super().__init__(problem, stream, x0=[C])
        self.C = float(C)
        self.alpha = float(alpha)
        self.name = f"synthetic-C{C:g}-a{alpha:g}"

    def advance(self, k: int) -> int:
        if k < 0:
            raise ContractViolation("cannot advance by a negative number of evaluations")
        self.evals_used += int(k)
        self.iterations = self.evals_used
        return int(k)

    def step(self, max_evals=None) -> int:
        if max_evals is not None and max_evals <= 0:
            return 0
        return self.advance(1)

    def run_to(self, m: int, max_evals=None) -> int:
        need = max(0, int(m) - self.evals_used)
        if max_evals is not None:
            need = min(need, max(0, int(max_evals)))
        return self.advance(need)

    @property
    def recommendation(self) -> np.ndarray:
        return np.array([synthetic_regret_value(self, max(self.evals_used, 1))])

    def recommendation_at(self, m: int) -> np.ndarray:
        if m < 0 or m > self.evals_used:
            raise ContractViolation(
                f"recommendation after {m} evaluations requested, only {self.evals_used} spent"
            )
        return np.array([synthetic_regret_value(self, max(m, 1))])

    @property
    def at_iteration_boundary(self) -> bool:
        return True

    def _inject(self, x) -> None:
        pass


_NUMBER = r"([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)"
_SPHERE_RE = re.compile(rf"^sphere-d(\d+)-z{_NUMBER}$")
_SYNTH_RE = re.compile(rf"^synthetic-C{_NUMBER}-a{_NUMBER}$")


def parse_synthetic_key(key: str):
    """Return ``(C, alpha)`` for a ``synthetic-C{C}-a{alpha}`` key."""
    match = _SYNTH_RE.match(key.strip())
    if not match:
        raise ContractViolation(f"not a synthetic key: {key!r}")
    return float(match.group(1)), float(match.group(2))


def problem_from_key(key: str) -> NoisyProblem:
    """Build a problem from its key (see module docstring)."""
    key = key.strip()
    match = _SPHERE_RE.match(key)
    if match:
        return SphereProblem(int(match.group(1)), float(match.group(2)))
    if _SYNTH_RE.match(key):
        return RegretLineProblem()
    raise ContractViolation(f"unknown problem key {key!r}")
