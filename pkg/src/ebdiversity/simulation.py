"""Overdispersed count simulation: Gamma abundance, Dirichlet composition, Poisson counts."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .indices import shannon, simpson
from .model import CountVector

__all__ = [
    "CalibrationError",
    "Profile",
    "ProfileKind",
    "RNG_ALGORITHM",
    "Scenario",
    "SimulatedSample",
    "SimulationError",
    "make_profile",
    "replicate_rng",
    "run_scenario",
    "sample_composition",
    "sample_counts",
    "sample_lambda",
]

log = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy PCG64, stream per replicate from SeedSequence(seed, spawn_key=(replicate,))"

REFERENCE_K = 200
INTERCEPT_BRACKET = (0.0, 1e3)


class CalibrationError(ValueError):
    pass


class SimulationError(RuntimeError):
    def __init__(self, replicate: int, cause: Exception):
        super().__init__(f"replicate {replicate}: {cause}")
        self.replicate = replicate
        self.cause = cause


class ProfileKind(str, enum.Enum):
    QUASI_UNIFORM = "quasi-uniform"
    SMOOTH = "smooth"
    CONCENTRATED = "concentrated"

    @property
    def exponent(self) -> int:
        return {"quasi-uniform": 1, "smooth": 3, "concentrated": 50}[self.value]

    @property
    def target_entropy(self) -> float:
        """True Shannon entropy of the profile at k = 200 in the reference study."""
        return {"quasi-uniform": 5.280, "smooth": 4.699, "concentrated": 3.291}[self.value]


@dataclass(frozen=True, eq=False)
class Profile:
    """Increasing true composition ``pi*_j ∝ intercept + (j/k)**exponent``."""

    kind: ProfileKind
    k: int
    pi_star: np.ndarray
    calibration_constant: float
    exponent: int
    true_indices: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    alpha: float
    beta: float
    gamma: float
    k: int
    m: int
    profile_kind: ProfileKind
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "profile_kind", ProfileKind(self.profile_kind))
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not v > 0 or not np.isfinite(v):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")
        if self.m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def expected_size(self) -> float:
        return self.alpha / self.beta

    @property
    def scenario_id(self) -> str:
        return f"{self.profile_kind.value}/alpha={self.alpha:g},beta={self.beta:g},gamma={self.gamma:g}"


@dataclass(frozen=True, eq=False)
class SimulatedSample:
    counts: CountVector
    lambda_drawn: float
    pi_drawn: np.ndarray
    replicate_index: int


def _raw_profile(intercept: float, exponent: int, k: int) -> np.ndarray:
    j = np.arange(1, k + 1, dtype=float) / k
    w = intercept + j**exponent
    return w / w.sum()


@lru_cache(maxsize=None)
def calibrate_intercept(kind: ProfileKind, k: int = REFERENCE_K, target: float | None = None) -> float:
    """Find the intercept whose profile has the target Shannon entropy.

    Entropy increases with the intercept (the profile flattens towards
    uniform), so the root in ``INTERCEPT_BRACKET`` is unique.
    """
    kind = ProfileKind(kind)
    target = kind.target_entropy if target is None else target
    a_lo, a_hi = INTERCEPT_BRACKET
    h_lo = shannon(_raw_profile(a_lo, kind.exponent, k))
    h_hi = shannon(_raw_profile(a_hi, kind.exponent, k))
    if not h_lo <= target <= h_hi:
        raise CalibrationError(
            f"{kind.value} profile with k = {k} cannot reach entropy {target}: "
            f"achievable range is [{h_lo:.6f}, {h_hi:.6f}]"
        )
    a = brentq(
        lambda a: shannon(_raw_profile(a, kind.exponent, k)) - target,
        a_lo, a_hi, xtol=1e-15, rtol=1e-14, maxiter=500,
    )
    log.debug("calibrated %s intercept at k=%d: %.12g", kind.value, k, a)
    return float(a)


def make_profile(kind: ProfileKind | str, k: int, target_entropy: float | None = None) -> Profile:
    """Build the true composition of the given evenness kind over ``k`` categories.

    The intercept is calibrated at k = 200 against reference entropies
    (5.280, 4.699, 3.291) and then reused for any ``k``, since the profile shape only
    depends on ``j/k``.  Passing ``target_entropy`` calibrates at ``k`` instead.
    """
    kind = ProfileKind(kind)
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if target_entropy is None:
        a = calibrate_intercept(kind)
    else:
        a = calibrate_intercept(kind, k, float(target_entropy))
    pi = _raw_profile(a, kind.exponent, k)
    pi.setflags(write=False)
    return Profile(
        kind=kind,
        k=k,
        pi_star=pi,
        calibration_constant=a,
        exponent=kind.exponent,
        true_indices={"shannon": shannon(pi), "simpson": simpson(pi)},
    )


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(replicate,))))


def sample_lambda(alpha: float, beta: float, rng: np.random.Generator) -> float:
    """Draw an expected sample size from Gamma(shape=alpha, rate=beta)."""
    if not (alpha > 0 and beta > 0):
        raise ValueError(f"alpha and beta must be positive, got {alpha}, {beta}")
    return float(rng.gamma(alpha, 1.0 / beta))


def sample_composition(gamma: float, profile: Profile, rng: np.random.Generator) -> np.ndarray:
    """Draw a composition from Dirichlet(k * gamma * pi*) via normalized Gamma draws."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    theta = profile.k * gamma * np.asarray(profile.pi_star)
    if np.any(theta <= 0):
        raise ValueError("Dirichlet parameter has a zero entry; profile must be strictly positive")
    g = rng.standard_gamma(theta)
    total = g.sum()
    if not total > 0:
        raise FloatingPointError("all Gamma draws underflowed to zero")
    return g / total


def sample_counts(lam: float, pi: np.ndarray, rng: np.random.Generator) -> CountVector:
    """Independent Poisson(lam * pi_j) counts."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return CountVector(rng.poisson(lam * np.asarray(pi)))


def run_scenario(s: Scenario, profile: Profile | None = None) -> list[SimulatedSample]:
    profile = profile or make_profile(s.profile_kind, s.k)
    if profile.k != s.k:
        raise ValueError(f"profile has k = {profile.k} but scenario has k = {s.k}")
    out = []
    for i in range(s.m):
        rng = replicate_rng(s.seed, i)
        try:
            lam = sample_lambda(s.alpha, s.beta, rng)
            pi = sample_composition(s.gamma, profile, rng)
            x = sample_counts(lam, pi, rng)
        except Exception as e:
            raise SimulationError(i, e) from e
        out.append(SimulatedSample(x, lam, pi, i))
    return out
