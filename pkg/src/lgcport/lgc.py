"""Local bivariate Gaussian fits via kernel-weighted log-likelihood.

A five-parameter Gaussian family is fitted at a grid point r by maximizing

    L(theta) = n^-1 sum_i K_b(R_i - r) log psi(R_i; theta) - int K_b(v - r) psi(v; theta) dv

where K_b is a product Gaussian kernel and psi the bivariate normal density.
The integral term has a closed form (Gaussian convolution), so both the
objective and its gradient are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from .errors import (
    DegenerateSampleError,
    InsufficientLocalDataError,
    NonConvergenceError,
)

_LOG_2PI = math.log(2.0 * math.pi)

# Convergence contract for estimate_local_params.
GRADIENT_TOL = 1e-6
MAX_ITERATIONS = 200
WEIGHT_FLOOR = 1e-8

# Reparameterization clips: |atanh(rho)| <= 18 keeps 1 - rho^2 representable,
# |log sigma| <= 100 keeps every likelihood term finite.
_ATANH_CLIP = 18.0
_LOG_SIGMA_CLIP = 100.0

# Correlation cap for degenerate (perfectly dependent) samples.
_RHO_CAP = 1.0 - 1e-9


@dataclass(frozen=True)
class LocalParams:
    """Parameters (mu1, mu2, sigma1, sigma2, rho) of a local Gaussian fit."""

    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    rho: float

    def __post_init__(self):
        vals = (self.mu1, self.mu2, self.sigma1, self.sigma2, self.rho)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("local parameters must be finite, got %r" % (vals,))
        if self.sigma1 <= 0.0 or self.sigma2 <= 0.0:
            raise ValueError(
                "standard deviations must be positive, got (%g, %g)"
                % (self.sigma1, self.sigma2)
            )
        if abs(self.rho) >= 1.0:
            raise ValueError("correlation must lie strictly in (-1, 1), got %g" % self.rho)

    def as_array(self) -> np.ndarray:
        return np.array([self.mu1, self.mu2, self.sigma1, self.sigma2, self.rho])

    @classmethod
    def from_array(cls, arr) -> "LocalParams":
        a = np.asarray(arr, dtype=float)
        if a.shape != (5,):
            raise ValueError("expected 5 parameters, got shape %r" % (a.shape,))
        return cls(*(float(v) for v in a))


@dataclass
class FitDiagnostics:
    """Bookkeeping returned alongside a local fit."""

    converged: bool
    iterations: int
    gradient_norm: float
    effective_weight: float
    fallback: bool = False


def _as_sample(sample) -> np.ndarray:
    """Validate and return the sample as an (n, 2) float array."""
    s = np.asarray(sample, dtype=float)
    if s.ndim != 2 or s.shape[1] != 2:
        raise ValueError("sample must have shape (n, 2), got %r" % (s.shape,))
    if s.shape[0] < 1:
        raise ValueError("sample must be nonempty")
    if not np.all(np.isfinite(s)):
        raise ValueError("sample contains non-finite values")
    return s


def _check_point(r) -> Tuple[float, float]:
    p = np.asarray(r, dtype=float).reshape(-1)
    if p.shape != (2,) or not np.all(np.isfinite(p)):
        raise ValueError("grid point must be a finite pair, got %r" % (r,))
    return float(p[0]), float(p[1])


def _check_bandwidth(b) -> Tuple[float, float]:
    p = np.asarray(b, dtype=float).reshape(-1)
    if p.shape != (2,) or not np.all(np.isfinite(p)) or p[0] <= 0.0 or p[1] <= 0.0:
        raise ValueError("bandwidth must be a pair of positive reals, got %r" % (b,))
    return float(p[0]), float(p[1])


def gaussian_kernel_weight(obs, r, b):
    """Product Gaussian kernel (b1 b2)^-1 phi((o1-r1)/b1) phi((o2-r2)/b2).

    `obs` may be a single pair or an (n, 2) array; the return value is a
    float or an (n,) vector accordingly.
    """
    b1, b2 = _check_bandwidth(b)
    r1, r2 = _check_point(r)
    o = np.asarray(obs, dtype=float)
    scalar = o.ndim == 1
    o = np.atleast_2d(o)
    z1 = (o[:, 0] - r1) / b1
    z2 = (o[:, 1] - r2) / b2
    val = np.exp(-0.5 * (z1 * z1 + z2 * z2)) / (2.0 * np.pi * b1 * b2)
    return float(val[0]) if scalar else val


def _log_density(x, y, theta: LocalParams):
    """Log of the bivariate normal density, vectorized over observations."""
    q = 1.0 - theta.rho * theta.rho
    z1 = (x - theta.mu1) / theta.sigma1
    z2 = (y - theta.mu2) / theta.sigma2
    quad = z1 * z1 - 2.0 * theta.rho * z1 * z2 + z2 * z2
    return (
        -_LOG_2PI
        - math.log(theta.sigma1)
        - math.log(theta.sigma2)
        - 0.5 * math.log(q)
        - 0.5 * quad / q
    )


def bivariate_normal_density(v, theta: LocalParams):
    """Density psi(v; theta) for a single pair or an (n, 2) array."""
    o = np.asarray(v, dtype=float)
    scalar = o.ndim == 1
    o = np.atleast_2d(o)
    out = np.exp(_log_density(o[:, 0], o[:, 1], theta))
    return float(out[0]) if scalar else out


def penalty_integral(r, b, theta: LocalParams) -> float:
    """Closed form of int K_b(v - r) psi(v; theta) dv.

    The kernel is itself a Gaussian density in v centered at r with
    covariance diag(b1^2, b2^2), so the integral is the convolution value:
    a bivariate normal with covariance Sigma_theta + diag(b^2) evaluated at r.
    """
    b1, b2 = _check_bandwidth(b)
    r1, r2 = _check_point(r)
    s1, s2, rho = theta.sigma1, theta.sigma2, theta.rho
    v11 = s1 * s1 + b1 * b1
    v22 = s2 * s2 + b2 * b2
    v12 = rho * s1 * s2
    det = v11 * v22 - v12 * v12
    d1 = r1 - theta.mu1
    d2 = r2 - theta.mu2
    quad = (v22 * d1 * d1 - 2.0 * v12 * d1 * d2 + v11 * d2 * d2) / det
    return math.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))


def _penalty_gradient(r, b, theta: LocalParams) -> np.ndarray:
    """Gradient of penalty_integral with respect to (mu1, mu2, s1, s2, rho)."""
    b1, b2 = _check_bandwidth(b)
    r1, r2 = _check_point(r)
    s1, s2, rho = theta.sigma1, theta.sigma2, theta.rho
    v11 = s1 * s1 + b1 * b1
    v22 = s2 * s2 + b2 * b2
    v12 = rho * s1 * s2
    det = v11 * v22 - v12 * v12
    p = penalty_integral(r, b, theta)

    # Precision matrix entries.
    i11 = v22 / det
    i22 = v11 / det
    i12 = -v12 / det
    d1 = r1 - theta.mu1
    d2 = r2 - theta.mu2
    # e = S^-1 d, with d = r - mu.
    e1 = i11 * d1 + i12 * d2
    e2 = i12 * d1 + i22 * d2

    grad = np.empty(5)
    grad[0] = p * e1
    grad[1] = p * e2

    # d log p / d param = 0.5 * (e' dS e - tr(S^-1 dS)) for covariance params.
    def _quad_term(a11, a12, a22):
        quad = e1 * e1 * a11 + 2.0 * e1 * e2 * a12 + e2 * e2 * a22
        trace = i11 * a11 + 2.0 * i12 * a12 + i22 * a22
        return 0.5 * p * (quad - trace)

    grad[2] = _quad_term(2.0 * s1, rho * s2, 0.0)
    grad[3] = _quad_term(0.0, rho * s1, 2.0 * s2)
    grad[4] = _quad_term(0.0, s1 * s2, 0.0)
    return grad


def local_loglik(sample, r, b, theta: LocalParams) -> float:
    """Kernel-weighted local log-likelihood at grid point r."""
    s = _as_sample(sample)
    w = gaussian_kernel_weight(s, r, b)
    logpsi = _log_density(s[:, 0], s[:, 1], theta)
    return float(w @ logpsi / s.shape[0] - penalty_integral(r, b, theta))


def local_score(sample, r, b, theta: LocalParams) -> np.ndarray:
    """Analytic gradient of local_loglik with respect to theta."""
    s = _as_sample(sample)
    n = s.shape[0]
    w = gaussian_kernel_weight(s, r, b)
    s1, s2, rho = theta.sigma1, theta.sigma2, theta.rho
    q = 1.0 - rho * rho
    z1 = (s[:, 0] - theta.mu1) / s1
    z2 = (s[:, 1] - theta.mu2) / s2

    u1 = (z1 - rho * z2) / (s1 * q)
    u2 = (z2 - rho * z1) / (s2 * q)
    u3 = (z1 * (z1 - rho * z2) / q - 1.0) / s1
    u4 = (z2 * (z2 - rho * z1) / q - 1.0) / s2
    quad = z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2
    u5 = rho / q + (z1 * z2 * q - rho * quad) / (q * q)

    data = np.array([w @ u1, w @ u2, w @ u3, w @ u4, w @ u5]) / n
    return data - _penalty_gradient(r, b, theta)


def plugin_bandwidth(sample, scale: float = 1.1) -> Tuple[float, float]:
    """Plug-in bandwidth: `scale` times the marginal sample sd (n-1 denominator)."""
    s = _as_sample(sample)
    if s.shape[0] < 2:
        raise ValueError("bandwidth needs at least 2 observations")
    if scale <= 0.0:
        raise ValueError("scale must be positive, got %g" % scale)
    sd = s.std(axis=0, ddof=1)
    if sd[0] <= 0.0 or sd[1] <= 0.0:
        raise DegenerateSampleError(
            "sample standard deviation is zero in a coordinate, sd=%r" % (sd,)
        )
    return float(scale * sd[0]), float(scale * sd[1])


def global_gaussian_mle(sample) -> LocalParams:
    """Unweighted Gaussian MLE of a bivariate sample, correlation capped below 1."""
    s = _as_sample(sample)
    if s.shape[0] < 2:
        raise ValueError("MLE needs at least 2 observations")
    mu = s.mean(axis=0)
    dx = s[:, 0] - mu[0]
    dy = s[:, 1] - mu[1]
    v1 = float(dx @ dx) / s.shape[0]
    v2 = float(dy @ dy) / s.shape[0]
    if v1 <= 0.0 or v2 <= 0.0:
        raise DegenerateSampleError("constant column, Gaussian MLE undefined")
    rho = float(dx @ dy) / s.shape[0] / math.sqrt(v1 * v2)
    rho = min(max(rho, -_RHO_CAP), _RHO_CAP)
    return LocalParams(float(mu[0]), float(mu[1]), math.sqrt(v1), math.sqrt(v2), rho)


def _to_eta(theta: LocalParams) -> np.ndarray:
    return np.array(
        [
            theta.mu1,
            theta.mu2,
            math.log(theta.sigma1),
            math.log(theta.sigma2),
            math.atanh(theta.rho),
        ]
    )


def _from_eta(eta: np.ndarray) -> LocalParams:
    ls1 = min(max(eta[2], -_LOG_SIGMA_CLIP), _LOG_SIGMA_CLIP)
    ls2 = min(max(eta[3], -_LOG_SIGMA_CLIP), _LOG_SIGMA_CLIP)
    a = min(max(eta[4], -_ATANH_CLIP), _ATANH_CLIP)
    return LocalParams(
        float(eta[0]), float(eta[1]), math.exp(ls1), math.exp(ls2), math.tanh(a)
    )


def _chain_factors(eta: np.ndarray, theta: LocalParams) -> np.ndarray:
    """d theta / d eta on the diagonal; zero where a clip is active."""
    f = np.ones(5)
    f[2] = theta.sigma1 if abs(eta[2]) < _LOG_SIGMA_CLIP else 0.0
    f[3] = theta.sigma2 if abs(eta[3]) < _LOG_SIGMA_CLIP else 0.0
    f[4] = 1.0 - theta.rho * theta.rho if abs(eta[4]) < _ATANH_CLIP else 0.0
    return f


def estimate_local_params(
    sample,
    r,
    b,
    init: Optional[LocalParams] = None,
    *,
    weight_floor: float = WEIGHT_FLOOR,
    gradient_tol: float = GRADIENT_TOL,
    max_iterations: int = MAX_ITERATIONS,
) -> Tuple[LocalParams, FitDiagnostics]:
    """Maximize the local log-likelihood at grid point r.

    Parameters
    ----------
    sample : (n, 2) array
        Bivariate observations, n >= 2.
    r, b : pairs of floats
        Grid point and positive bandwidths.
    init : LocalParams, optional
        Starting point; defaults to the global Gaussian MLE. Passing the
        previous month's fit warm-starts rolling estimation.
    weight_floor : float
        Minimum mean unnormalized kernel mass at r. Below it there is no
        local information and InsufficientLocalDataError is raised.

    Returns
    -------
    (LocalParams, FitDiagnostics)

    Raises
    ------
    InsufficientLocalDataError, NonConvergenceError, DegenerateSampleError

    Notes
    -----
    The search runs unconstrained in (mu1, mu2, log sigma1, log sigma2,
    atanh rho) with the analytic gradient. The objective is normalized by
    the mean kernel weight so the 1e-6 gradient tolerance means the same
    thing at every grid point and bandwidth.
    """
    s = _as_sample(sample)
    n = s.shape[0]
    if n < 2:
        raise ValueError("estimation needs at least 2 observations")
    b1, b2 = _check_bandwidth(b)
    r1, r2 = _check_point(r)

    w = gaussian_kernel_weight(s, (r1, r2), (b1, b2))
    effective_weight = float(w.sum())
    # Scale-invariant local mass: kernel values with the normalizing
    # constant removed, so the floor does not depend on b or data units.
    mass = effective_weight * (2.0 * math.pi * b1 * b2) / n
    if mass < weight_floor:
        raise InsufficientLocalDataError(
            "no effective observations near grid point (%g, %g): local mass %.3e"
            % (r1, r2, mass),
            effective_weight=effective_weight,
        )

    theta0 = init if init is not None else global_gaussian_mle(s)
    wbar = effective_weight / n

    def negloglik(eta):
        theta = _from_eta(eta)
        val = local_loglik(s, (r1, r2), (b1, b2), theta)
        grad = local_score(s, (r1, r2), (b1, b2), theta) * _chain_factors(eta, theta)
        return -val / wbar, -grad / wbar

    res = minimize(
        negloglik,
        _to_eta(theta0),
        jac=True,
        method="BFGS",
        options={"gtol": gradient_tol, "maxiter": max_iterations},
    )
    gnorm = float(np.max(np.abs(res.jac)))
    theta = _from_eta(res.x)
    diag = FitDiagnostics(
        converged=gnorm <= gradient_tol,
        iterations=int(res.nit),
        gradient_norm=gnorm,
        effective_weight=effective_weight,
    )
    if not diag.converged:
        raise NonConvergenceError(
            "local fit at (%g, %g) stopped after %d iterations with gradient %.3e"
            % (r1, r2, diag.iterations, gnorm),
            params=theta,
            diagnostics=diag,
        )
    return theta, diag
