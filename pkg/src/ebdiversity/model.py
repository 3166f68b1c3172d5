"""Multinomial and empirical-Bayes Dirichlet-Multinomial estimators of composition.

A sample is a vector of counts over ``k`` fixed taxonomic categories.  The
maximum likelihood estimate is the vector of observed frequencies; the
empirical-Bayes estimate is the posterior mean under a symmetric Dirichlet
prior whose concentration ``eta`` maximizes the Dirichlet-Multinomial
marginal likelihood of the sample.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import digamma, gammaln, polygamma

__all__ = [
    "CountVector",
    "CompositionEstimate",
    "EmptySampleError",
    "EtaSolution",
    "EtaSolverOptions",
    "Method",
    "NonFiniteLikelihoodError",
    "SolverStatus",
    "eb_proportions",
    "estimate_eta",
    "log_lik_gradient",
    "log_lik_hessian",
    "marginal_log_likelihood",
    "mle_proportions",
    "prior_marginal_variance",
]

# Above this sample size the harmonic sums are replaced by digamma/trigamma
# differences.
HARMONIC_SUM_LIMIT = 100_000


class EmptySampleError(ValueError):
    """Raised when an estimator needs at least one observed individual."""

    def __init__(self, msg: str = "no individuals observed (n = 0)"):
        super().__init__(msg)


class NonFiniteLikelihoodError(FloatingPointError):
    pass


class Method(str, enum.Enum):
    ML = "ML"
    EB = "EB"


class SolverStatus(str, enum.Enum):
    CONVERGED = "Converged"
    FLOOR_CLAMPED = "FloorClamped"
    CEILING_CLAMPED = "CeilingClamped"
    FLAT_LIKELIHOOD = "FlatLikelihood"
    MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True, eq=False)
class CountVector:
    """Counts of individuals in each of ``k`` categories for one sample."""

    counts: np.ndarray

    def __init__(self, counts: Sequence[int] | np.ndarray, n: int | None = None):
        arr = np.asarray(counts)
        if arr.ndim != 1:
            raise ValueError(f"counts must be one-dimensional, got shape {arr.shape}")
        if arr.size < 2:
            raise ValueError(f"need at least k = 2 categories, got k = {arr.size}")
        if arr.dtype.kind == "f":
            if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
                raise ValueError("counts must be integers")
        elif arr.dtype.kind not in "iub":
            raise ValueError(f"counts must be integers, got dtype {arr.dtype}")
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise ValueError("counts must be nonnegative")
        if n is not None and int(n) != int(arr.sum()):
            raise ValueError(f"n = {n} does not equal the sum of counts ({int(arr.sum())})")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def k(self) -> int:
        return int(self.counts.size)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CountVector):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)

    def __hash__(self) -> int:
        return hash(self.counts.tobytes())

    def __len__(self) -> int:
        return self.k

    def __repr__(self) -> str:
        return f"CountVector(k={self.k}, n={self.n}, counts={self.counts.tolist()})"

    @cached_property
    def _tail_counts(self) -> np.ndarray:
        # entry y holds #{j : x_j > y}, so sum_j sum_{y < x_j} f(y) == sum_y tail[y] f(y)
        top = int(self.counts.max())
        hist = np.bincount(self.counts, minlength=top + 1)
        return (self.counts.size - np.cumsum(hist))[:top].astype(float)


@dataclass(frozen=True, eq=False)
class CompositionEstimate:
    proportions: np.ndarray
    method: Method
    eta: float | None = None

    def __post_init__(self):
        p = np.asarray(self.proportions, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "proportions", p)
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"proportions sum to {p.sum()!r}, not 1")
        if self.method is Method.EB:
            if self.eta is None or not self.eta > 0:
                raise ValueError("an EB estimate needs a positive eta")
            if np.any(p <= 0):
                raise ValueError("EB proportions must be strictly positive")
        elif self.eta is not None:
            raise ValueError("an ML estimate carries no eta")

    @property
    def k(self) -> int:
        return int(self.proportions.size)


@dataclass(frozen=True)
class EtaSolverOptions:
    """Safeguards for the Newton-Raphson search over ``eta``.

    ``grad_tolerance`` is relative: an iterate counts as a stationary point
    when ``|l'(eta)|`` is below ``grad_tolerance`` times the magnitude of the
    first harmonic sum in ``l'``.
    """

    initial_eta: float = 1.0
    rel_tolerance: float = 1e-8
    max_iterations: int = 100
    eta_floor: float = 1e-6
    eta_ceiling: float = 1e6
    grad_tolerance: float = 1e-6
    flat_tolerance: float = 1e-10
    probe_points: int = 25

    def __post_init__(self):
        if not 0 < self.eta_floor < self.initial_eta < self.eta_ceiling:
            raise ValueError(
                "need 0 < eta_floor < initial_eta < eta_ceiling, got "
                f"{self.eta_floor}, {self.initial_eta}, {self.eta_ceiling}"
            )
        if not self.rel_tolerance > 0:
            raise ValueError("rel_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.grad_tolerance > 0 or not self.flat_tolerance > 0:
            raise ValueError("tolerances must be positive")
        if self.probe_points < 2:
            raise ValueError("probe_points must be at least 2")


@dataclass(frozen=True)
class EtaSolution:
    eta: float
    iterations: int
    converged: bool
    status: SolverStatus


def mle_proportions(x: CountVector) -> CompositionEstimate:
    """Observed relative frequencies ``x_j / n``."""
    n = x.n
    if n == 0:
        raise EmptySampleError()
    return CompositionEstimate(x.counts / n, Method.ML)


def marginal_log_likelihood(eta: float, x: CountVector) -> float:
    """Log of the Dirichlet-Multinomial marginal likelihood of ``x``.

    The multinomial coefficient is included, so this is the exact log
    probability of the observed counts, not just its eta-dependent part.
    """
    _check_eta(eta)
    n, k = x.n, x.k
    c = x.counts
    terms = {
        "logGamma(n+1)": gammaln(n + 1.0),
        "logGamma(k*eta)": gammaln(k * eta),
        "logGamma(n+k*eta)": gammaln(n + k * eta),
        "sum logGamma(x_j+eta)": math.fsum(gammaln(c + eta)),
        "sum logGamma(x_j+1)": math.fsum(gammaln(c + 1.0)),
        "k*logGamma(eta)": k * gammaln(eta),
    }
    for name, value in terms.items():
        if not math.isfinite(value):
            raise NonFiniteLikelihoodError(
                f"non-finite term {name} = {value} at eta = {eta!r}, n = {n}, k = {k}"
            )
    return (
        terms["logGamma(n+1)"]
        + terms["logGamma(k*eta)"]
        - terms["logGamma(n+k*eta)"]
        + terms["sum logGamma(x_j+eta)"]
        - terms["sum logGamma(x_j+1)"]
        - terms["k*logGamma(eta)"]
    )


def _check_eta(eta: float) -> None:
    if not (eta > 0 and math.isfinite(eta)):
        raise ValueError(f"eta must be positive and finite, got {eta!r}")


def _derivative_parts(eta: float, x: CountVector, order: int) -> tuple[float, float]:
    """Return (total-size sum, per-category sum) of the ``order``-th derivative.

    order 1: (sum_m k/(k eta + m), sum_j sum_{y<x_j} 1/(eta + y))
    order 2: (sum_m k^2/(k eta + m)^2, sum_j sum_{y<x_j} 1/(eta + y)^2)
    """
    n, k = x.n, x.k
    if n > HARMONIC_SUM_LIMIT:
        c = x.counts
        if order == 1:
            first = k * (digamma(k * eta + n) - digamma(k * eta))
            second = math.fsum(digamma(c + eta) - digamma(eta))
        else:
            first = k * k * (polygamma(1, k * eta) - polygamma(1, k * eta + n))
            second = math.fsum(polygamma(1, eta) - polygamma(1, c + eta))
        return float(first), float(second)
    m = np.arange(n, dtype=float)
    tail = x._tail_counts
    y = np.arange(tail.size, dtype=float)
    a = k / (k * eta + m)
    b = 1.0 / (eta + y)
    if order == 1:
        return float(a.sum()), float(tail @ b)
    return float(a @ a), float(tail @ (b * b))


def log_lik_gradient(eta: float, x: CountVector) -> float:
    """First derivative of the log marginal likelihood in ``eta``.

    Categories with ``x_j = 0`` contribute an empty inner sum.
    """
    _check_eta(eta)
    first, second = _derivative_parts(eta, x, 1)
    return second - first


def log_lik_hessian(eta: float, x: CountVector) -> float:
    _check_eta(eta)
    first, second = _derivative_parts(eta, x, 2)
    return first - second


def _gradient_with_scale(eta: float, x: CountVector) -> tuple[float, float]:
    first, second = _derivative_parts(eta, x, 1)
    return second - first, max(first, second)


def _is_flat(x: CountVector, opts: EtaSolverOptions) -> bool:
    # small eta first: that is where a non-flat likelihood has the steepest slope
    for eta in np.geomspace(opts.eta_floor, opts.eta_ceiling, opts.probe_points):
        g, scale = _gradient_with_scale(float(eta), x)
        if abs(g) > opts.flat_tolerance * scale:
            return False
    return True


def estimate_eta(x: CountVector, opts: EtaSolverOptions | None = None) -> EtaSolution:
    """Maximize the marginal likelihood over ``eta`` by safeguarded Newton-Raphson.

    The search keeps a bracket ``[lo, hi]`` with ``l' > 0`` at ``lo`` and
    ``l' < 0`` at ``hi``.  A Newton step is taken when the curvature is
    negative and the step stays inside the bracket; otherwise the iterate is
    doubled or halved in the uphill direction, and if that also leaves the
    bracket the geometric midpoint is used.  When the uphill direction runs
    into ``eta_floor`` or ``eta_ceiling`` and the gradient there still points
    outwards, the bound is returned with a clamped status.
    """
    opts = opts or EtaSolverOptions()
    if x.n == 0:
        raise EmptySampleError()
    if _is_flat(x, opts):
        return EtaSolution(opts.initial_eta, 0, False, SolverStatus.FLAT_LIKELIHOOD)

    floor, ceiling = opts.eta_floor, opts.eta_ceiling
    lo, hi = floor, ceiling
    floor_checked = ceiling_checked = False
    eta = opts.initial_eta
    for it in range(1, opts.max_iterations + 1):
        g, scale = _gradient_with_scale(eta, x)
        if g == 0.0:
            return EtaSolution(eta, it, True, SolverStatus.CONVERGED)
        if g > 0:
            lo = max(lo, eta)
        else:
            hi = min(hi, eta)
        h = log_lik_hessian(eta, x)
        if h < 0:
            new = eta - g / h
        else:
            new = eta * 2.0 if g > 0 else eta * 0.5

        if not lo < new < hi:
            if g > 0 and hi == ceiling and not ceiling_checked:
                ceiling_checked = True
                if log_lik_gradient(ceiling, x) >= 0:
                    return EtaSolution(ceiling, it, False, SolverStatus.CEILING_CLAMPED)
            elif g < 0 and lo == floor and not floor_checked:
                floor_checked = True
                if log_lik_gradient(floor, x) <= 0:
                    return EtaSolution(floor, it, False, SolverStatus.FLOOR_CLAMPED)
            new = math.sqrt(lo * hi)

        if abs(new - eta) <= opts.rel_tolerance * eta:
            g_new, scale_new = _gradient_with_scale(new, x)
            if abs(g_new) <= opts.grad_tolerance * scale_new:
                return EtaSolution(new, it, True, SolverStatus.CONVERGED)
        eta = new
    return EtaSolution(eta, opts.max_iterations, False, SolverStatus.MAX_ITERATIONS)


def eb_proportions(x: CountVector, eta: float) -> CompositionEstimate:
    """Posterior mean ``(x_j + eta) / (n + k eta)`` under the fitted prior."""
    _check_eta(eta)
    p = (x.counts + eta) / (x.n + x.k * eta)
    # renormalize so the simplex invariant holds to rounding
    p = p / p.sum()
    return CompositionEstimate(p, Method.EB, float(eta))


def prior_marginal_variance(eta: float, k: int) -> float:
    """Variance of each coordinate under the symmetric Dirichlet(eta) prior."""
    _check_eta(eta)
    if k < 2:
        raise ValueError("k must be at least 2")
    return (k - 1) / (k * k * (1.0 + k * eta))
