"""Photon-counting statistics for fluorescence readout of a two-level ion.

The ground ("bright") level scatters photons at intensity ``lam_b`` during a
detection window of length ``t``; the metastable ("dark") level scatters
nothing unless it decays, which it does with intensity ``lam = 1/T1``. On top
of either signal the detector registers Poisson dark/background counts with
intensity ``lam_d``.

Count distributions:

* bright level:  Poisson with mean ``lam_b * t`` (detector noise excluded by
  default; see :func:`bright_distribution`),
* dark level:    the decayed-level distribution (a point mass at zero for the
  never-decayed case plus an exponential-weighted mixture of Poisson laws for
  decay at an intermediate time), convolved with Poisson detector noise.

The decayed-level pmf has the closed form

    P(k) = lam*t*exp(-lam*t) * (lam_b*t)^k / ((lam_b - lam)*t)^(k+1)
           * gamma_reg((lam_b - lam)*t, k + 1)  +  exp(-lam*t) * [k == 0]

with ``gamma_reg(x, a)`` the regularized lower incomplete gamma function.
The generating function of the same process is

    G(z) = exp(-lam*t) * (1 + lam*t * phi(t*(lam - lam_b*(1 - z)))),
    phi(x) = (exp(x) - 1)/x,

optionally multiplied by ``exp(-lam_d*t*(1 - z))`` for detector noise.

Thresholding the observed count at ``k0`` (count >= k0 reads as the bright
outcome "0", count < k0 as the dark outcome "1") yields the misidentification
probabilities ``p10`` (bright read as dark) and ``p01`` (dark read as bright).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import gammainc, gammaln

__all__ = [
    "FluorescenceParams",
    "TruncationPolicy",
    "CountDistribution",
    "ReadoutErrorModel",
    "IndistinguishableError",
    "poisson_pmf",
    "regularized_lower_incomplete_gamma",
    "dark_decay_pmf",
    "bright_distribution",
    "dark_distribution",
    "generating_function",
    "factorial_moments",
    "choose_threshold",
    "error_rates",
]

# Below this value of (lam_b - lam)*t the closed form for the decayed-level
# pmf loses digits to cancellation (and is invalid for lam >= lam_b), so the
# defining mixture integral is evaluated numerically instead.
DEGENERATE_DECAY_THRESHOLD = 1e-6


class IndistinguishableError(ValueError):
    """Bright and dark count distributions admit no discriminating threshold."""


@dataclass(frozen=True)
class FluorescenceParams:
    """Physical parameters of one detection window.

    t:     detection time (arbitrary time units)
    lam:   dark-level decay intensity 1/T1 (1/time)
    lam_b: bright fluorescence intensity (counts/time)
    lam_d: detector dark + background count intensity (counts/time)

    The typical operating regime has lam << lam_b; large lam (fast decay) is
    supported and handled by numerical integration where the closed form does
    not apply.
    """

    t: float = 1.0
    lam: float = 0.001
    lam_b: float = 25.0
    lam_d: float = 0.2

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"detection time must be positive, got {self.t}")
        if self.lam < 0:
            raise ValueError(f"decay intensity must be >= 0, got {self.lam}")
        if not self.lam_b > 0:
            raise ValueError(f"bright intensity must be > 0, got {self.lam_b}")
        if self.lam_d < 0:
            raise ValueError(f"noise intensity must be >= 0, got {self.lam_d}")

    def to_dict(self) -> dict:
        return {"t": self.t, "lambda": self.lam, "lambda_b": self.lam_b, "lambda_d": self.lam_d}

    @classmethod
    def from_dict(cls, d: dict) -> "FluorescenceParams":
        return cls(t=d["t"], lam=d["lambda"], lam_b=d["lambda_b"], lam_d=d["lambda_d"])


@dataclass(frozen=True)
class TruncationPolicy:
    """How count distributions are truncated.

    k_max is the smallest k whose cumulative mass reaches 1 - tol, capped at
    max(cap_floor, ceil(mean + cap_sigmas * sqrt(mean))) where ``mean`` is the
    natural count scale of the distribution being built.
    """

    tol: float = 1e-12
    cap_floor: int = 200
    cap_sigmas: float = 20.0

    def cap(self, mean: float) -> int:
        return max(self.cap_floor, int(math.ceil(mean + self.cap_sigmas * math.sqrt(max(mean, 0.0)))))


@dataclass(frozen=True)
class CountDistribution:
    """Truncated pmf over photon counts k = 0..k_max plus the residual tail mass."""

    pmf: np.ndarray
    tail_mass: float
    params: FluorescenceParams | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pmf", np.asarray(self.pmf, dtype=float))
        if self.pmf.ndim != 1 or self.pmf.size == 0:
            raise ValueError("pmf must be a non-empty 1-d array")
        if (self.pmf < 0).any() or (self.pmf > 1).any():
            raise ValueError("pmf entries must lie in [0, 1]")
        if not 0 <= self.tail_mass <= 1:
            raise ValueError(f"tail mass must lie in [0, 1], got {self.tail_mass}")
        if abs(self.pmf.sum() + self.tail_mass - 1.0) > 1e-12:
            raise ValueError("pmf plus tail mass must sum to 1 within 1e-12")

    @property
    def k_max(self) -> int:
        return self.pmf.size - 1

    def mean(self) -> float:
        return float(np.arange(self.pmf.size) @ self.pmf)

    def variance(self) -> float:
        ks = np.arange(self.pmf.size)
        m = float(ks @ self.pmf)
        return float((ks * ks) @ self.pmf) - m * m

    def to_dict(self) -> dict:
        return {
            "k_max": self.k_max,
            "pmf": self.pmf.tolist(),
            "tail_mass": self.tail_mass,
            "params": self.params.to_dict() if self.params is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CountDistribution":
        params = FluorescenceParams.from_dict(d["params"]) if d.get("params") else None
        return cls(pmf=np.asarray(d["pmf"], dtype=float), tail_mass=d["tail_mass"], params=params)


@dataclass(frozen=True)
class ReadoutErrorModel:
    """Decision threshold and the two misidentification probabilities.

    p10: probability of reading "1" (dark) given the true state is "0" (bright)
    p01: probability of reading "0" (bright) given the true state is "1" (dark)

    Degenerate thresholds (k0 = 0) give an uninformative model with p01 = 1;
    feeding such a model into measurement-operator construction is rejected
    there, not here.
    """

    k0: int
    p10: float
    p01: float

    def __post_init__(self):
        if not (isinstance(self.k0, (int, np.integer)) and self.k0 >= 0):
            raise ValueError(f"threshold must be a nonnegative integer, got {self.k0}")
        if not 0.0 <= self.p10 <= 1.0 or not 0.0 <= self.p01 <= 1.0:
            raise ValueError("error probabilities must lie in [0, 1]")
        if self.p10 + self.p01 > 1.0 + 1e-12:
            raise ValueError("p10 + p01 must not exceed 1")

    def to_dict(self) -> dict:
        return {"k0": int(self.k0), "p10": self.p10, "p01": self.p01}

    @classmethod
    def from_dict(cls, d: dict) -> "ReadoutErrorModel":
        return cls(k0=int(d["k0"]), p10=d["p10"], p01=d["p01"])


# --------------------------------------------------------------------------
# elementary pmfs and special functions
# --------------------------------------------------------------------------

def poisson_pmf(k: int, mean: float) -> float:
    """Poisson probability mean^k exp(-mean)/k!, evaluated in the log domain.

    Stable for means up to at least 1e4.
    """
    if not isinstance(k, (int, np.integer)):
        raise ValueError(f"count must be an integer, got {k!r}")
    if k < 0:
        raise ValueError(f"count must be >= 0, got {k}")
    if mean < 0:
        raise ValueError(f"mean must be >= 0, got {mean}")
    if mean == 0.0:
        return 1.0 if k == 0 else 0.0
    if k == 0:
        return float(np.exp(-mean))
    return float(np.exp(k * np.log(mean) - mean - gammaln(k + 1)))


def _poisson_pmf_array(k_hi: int, mean: float) -> np.ndarray:
    """Poisson pmf values for k = 0..k_hi as an array."""
    if mean == 0.0:
        out = np.zeros(k_hi + 1)
        out[0] = 1.0
        return out
    ks = np.arange(k_hi + 1)
    return np.exp(ks * np.log(mean) - mean - gammaln(ks + 1))


def regularized_lower_incomplete_gamma(x: float, a: float) -> float:
    """gamma_reg(x, a) = integral_0^x s^(a-1) exp(-s) ds / Gamma(a), in [0, 1]."""
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    if not a > 0:
        raise ValueError(f"a must be > 0, got {a}")
    return float(gammainc(a, x))


# --------------------------------------------------------------------------
# decayed-dark-level distribution
# --------------------------------------------------------------------------

def _decay_pmf_quadrature(k: int, params: FluorescenceParams) -> float:
    """Decayed-level pmf by adaptive quadrature of the defining mixture.

    Integrates lam*exp(-lam*t1) * Poisson(k; lam_b*(t - t1)) over the decay
    time t1 in [0, t], plus the never-decayed point mass at k = 0. Used where
    the closed form is degenerate (lam close to or above lam_b).
    """
    t, lam, lam_b = params.t, params.lam, params.lam_b
    point = math.exp(-lam * t) if k == 0 else 0.0
    if lam == 0.0:
        return point
    # rescale the integrand by the Poisson factor's maximum so quad sees O(1)
    mu_star = min(float(k), lam_b * t)
    log_m = k * math.log(mu_star) - mu_star - gammaln(k + 1) if k > 0 else 0.0

    def integrand(t1):
        mu = lam_b * (t - t1)
        if mu <= 0.0:
            log_p = 0.0 if k == 0 else -np.inf
        elif k == 0:
            log_p = -mu
        else:
            log_p = k * math.log(mu) - mu - gammaln(k + 1)
        return lam * math.exp(-lam * t1) * math.exp(log_p - log_m)

    pts = set()
    if k > 0 and 0.0 < t - k / lam_b < t:
        pts.add(t - k / lam_b)
    for c in (1.0, 5.0, 20.0):
        if 0.0 < c / lam < t:
            pts.add(c / lam)
    val, _ = quad(integrand, 0.0, t, points=sorted(pts) or None, limit=300,
                  epsabs=1e-300, epsrel=1e-12)
    return float(val * math.exp(log_m)) + point


def dark_decay_pmf(k: int, params: FluorescenceParams) -> float:
    """Count probability for the dark level with decay, before detector noise.

    Closed form (incomplete-gamma expression plus the never-decayed point mass
    at k = 0); switches to quadrature of the defining mixture integral when
    (lam_b - lam)*t falls below DEGENERATE_DECAY_THRESHOLD, which also covers
    lam >= lam_b.
    """
    if not isinstance(k, (int, np.integer)):
        raise ValueError(f"count must be an integer, got {k!r}")
    if k < 0:
        raise ValueError(f"count must be >= 0, got {k}")
    t, lam, lam_b = params.t, params.lam, params.lam_b
    if lam == 0.0:
        return 1.0 if k == 0 else 0.0
    x = (lam_b - lam) * t
    if x < DEGENERATE_DECAY_THRESHOLD:
        return _decay_pmf_quadrature(int(k), params)
    log_pref = math.log(lam * t) - lam * t + k * math.log(lam_b * t) - (k + 1) * math.log(x)
    value = math.exp(log_pref) * float(gammainc(k + 1, x))
    if k == 0:
        value += math.exp(-lam * t)
    return value


def _decay_pmf_array(k_hi: int, params: FluorescenceParams) -> np.ndarray:
    """Vectorized dark_decay_pmf for k = 0..k_hi."""
    t, lam, lam_b = params.t, params.lam, params.lam_b
    if lam == 0.0:
        out = np.zeros(k_hi + 1)
        out[0] = 1.0
        return out
    x = (lam_b - lam) * t
    if x < DEGENERATE_DECAY_THRESHOLD:
        return np.array([_decay_pmf_quadrature(k, params) for k in range(k_hi + 1)])
    ks = np.arange(k_hi + 1)
    log_pref = math.log(lam * t) - lam * t + ks * math.log(lam_b * t) - (ks + 1) * math.log(x)
    out = np.exp(log_pref) * gammainc(ks + 1, x)
    out[0] += math.exp(-lam * t)
    return out


# --------------------------------------------------------------------------
# truncated distributions
# --------------------------------------------------------------------------

def _truncate(pmf_full: np.ndarray, tol: float) -> np.ndarray:
    """Cut at the smallest k whose cumulative mass reaches 1 - tol."""
    cum = np.cumsum(pmf_full)
    idx = np.flatnonzero(cum >= 1.0 - tol)
    k_max = int(idx[0]) if idx.size else pmf_full.size - 1
    return pmf_full[: k_max + 1]


def bright_distribution(params: FluorescenceParams,
                        policy: TruncationPolicy | None = None,
                        include_noise: bool = False) -> CountDistribution:
    """Poisson count distribution of the bright level.

    Detector noise counts are excluded by default: this is the convention that
    reproduces the reference error rates of the default parameter set. Pass
    include_noise=True to add lam_d*t to the mean.
    """
    policy = policy or TruncationPolicy()
    mean = params.lam_b * params.t + (params.lam_d * params.t if include_noise else 0.0)
    pmf = _truncate(_poisson_pmf_array(policy.cap(mean), mean), policy.tol)
    return CountDistribution(pmf=pmf, tail_mass=max(0.0, 1.0 - float(pmf.sum())), params=params)


def dark_distribution(params: FluorescenceParams,
                      policy: TruncationPolicy | None = None) -> CountDistribution:
    """Count distribution of the dark level: decayed-level pmf convolved with
    Poisson detector noise of mean lam_d*t."""
    policy = policy or TruncationPolicy()
    mean_scale = (params.lam_b + params.lam_d) * params.t
    cap = policy.cap(mean_scale)
    decay = _decay_pmf_array(cap, params)
    noise = _poisson_pmf_array(cap, params.lam_d * params.t)
    pmf = _truncate(np.convolve(decay, noise)[: cap + 1], policy.tol)
    return CountDistribution(pmf=pmf, tail_mass=max(0.0, 1.0 - float(pmf.sum())), params=params)


# --------------------------------------------------------------------------
# generating function and factorial moments
# --------------------------------------------------------------------------

def _expm1_over(x: float) -> float:
    """(exp(x) - 1)/x with the removable singularity at x = 0 filled in."""
    if abs(x) < 1e-8:
        return 1.0 + x / 2.0 + x * x / 6.0
    return math.expm1(x) / x


def generating_function(z: float, params: FluorescenceParams,
                        include_noise: bool = False) -> float:
    """Probability generating function G(z) = sum_k P(k) z^k of the dark-level
    count distribution, without (default) or with detector noise counts.

    G(1) = 1 exactly in both variants.
    """
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"z must lie in [0, 1], got {z}")
    t, lam, lam_b = params.t, params.lam, params.lam_b
    if z == 1.0:
        return 1.0
    d = lam - lam_b * (1.0 - z)
    g = math.exp(-lam * t) * (1.0 + lam * t * _expm1_over(t * d))
    if include_noise:
        g *= math.exp(-params.lam_d * t * (1.0 - z))
    return g


def _one_minus_psi(u: float) -> float:
    """1 - (1 - exp(-u))/u, series-evaluated near zero to avoid cancellation."""
    if u < 1e-3:
        # sum_{m>=1} (-1)^(m+1) u^m / (m+1)!
        return u / 2.0 - u**2 / 6.0 + u**3 / 24.0 - u**4 / 120.0 + u**5 / 720.0
    return 1.0 - (-math.expm1(-u)) / u


def _second_moment_factor(u: float) -> float:
    """1 - (2/u)*(1 - (1 - exp(-u))/u), series-evaluated near zero."""
    if u < 1e-3:
        # sum_{m>=1} (-1)^(m+1) 2 u^m / (m+2)!
        return u / 3.0 - u**2 / 12.0 + u**3 / 60.0 - u**4 / 360.0 + u**5 / 2520.0
    return 1.0 - (2.0 / u) * _one_minus_psi(u)


def factorial_moments(params: FluorescenceParams) -> tuple[float, float, float]:
    """(mean, second factorial moment, variance) of the decayed-dark-level
    count distribution, detector noise excluded.

    mean           = lam_b*t - (lam_b/lam)*(1 - exp(-lam*t))
    M[k(k-1)]      = (lam_b*t)^2 * (1 - (2/(lam*t))*(1 - (1 - exp(-lam*t))/(lam*t)))
    variance       = M[k(k-1)] + mean - mean^2

    The lam -> 0 limits (all three moments vanish) are handled by series.
    """
    u = params.lam * params.t
    lbt = params.lam_b * params.t
    if u == 0.0:
        return 0.0, 0.0, 0.0
    mean = lbt * _one_minus_psi(u)
    second = lbt * lbt * _second_moment_factor(u)
    variance = second + mean - mean * mean
    return mean, second, variance


# --------------------------------------------------------------------------
# threshold discrimination
# --------------------------------------------------------------------------

def choose_threshold(bright: CountDistribution, dark: CountDistribution) -> int:
    """Smallest threshold k0 >= 1 at which the bright pmf finally exceeds the
    dark pmf (within the truncated range).

    Ties at the crossing resolve toward the smaller k0. If the two curves
    cross more than once, the last crossing at or below the bright mode is
    used and a warning is emitted. Raises IndistinguishableError when the
    bright pmf never exceeds the dark pmf.
    """
    n = max(bright.pmf.size, dark.pmf.size)
    pb = np.zeros(n)
    pb[: bright.pmf.size] = bright.pmf
    pd = np.zeros(n)
    pd[: dark.pmf.size] = dark.pmf
    support = np.flatnonzero((pb > 0) | (pd > 0))
    k_hi = int(support[-1]) if support.size else 0
    diff = pb[: k_hi + 1] - pd[: k_hi + 1]

    if not (diff > 0).any():
        raise IndistinguishableError(
            "bright distribution never exceeds dark distribution; no threshold separates them")

    negatives = np.flatnonzero(diff < 0)
    run_start = int(negatives[-1]) + 1 if negatives.size else 0
    if run_start > k_hi or not (diff[run_start:] > 0).any():
        raise IndistinguishableError(
            "bright distribution does not finally exceed dark distribution within the truncated range")
    k0 = max(run_start, 1)

    up_crossings = [k for k in range(1, k_hi + 1) if diff[k] >= 0 > diff[k - 1]]
    if len(up_crossings) > 1:
        warnings.warn(
            f"bright and dark pmfs cross {len(up_crossings)} times; "
            "using the last crossing at or below the bright mode",
            stacklevel=2,
        )
        mode = int(np.argmax(pb))
        before = [k for k in up_crossings if k <= mode]
        k0 = max(1, before[-1] if before else up_crossings[0])
    return k0


def error_rates(bright: CountDistribution, dark: CountDistribution, k0: int) -> ReadoutErrorModel:
    """Misidentification probabilities for threshold k0.

    p10 sums the bright pmf below k0; p01 is one minus the dark pmf below k0,
    so the dark tail mass beyond the truncation is counted as error.
    """
    if not (isinstance(k0, (int, np.integer)) and k0 >= 0):
        raise ValueError(f"threshold must be a nonnegative integer, got {k0}")
    p10 = float(bright.pmf[:k0].sum())
    p01 = max(0.0, 1.0 - float(dark.pmf[:k0].sum()))
    return ReadoutErrorModel(k0=int(k0), p10=p10, p01=p01)
