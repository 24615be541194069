"""Portfolio weight solvers: mean-variance and minimum-variance with bounds.

Both problems are convex QPs over the budget constraint sum(w) = 1 with a
common lower bound per asset. They are solved by a primal active-set
method on the (ridge-regularized) KKT system and the result is verified
against the KKT conditions before it is returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InfeasibleError, SolverError

STRATEGY_KINDS = ("EW", "MVS", "MVSC", "MIN", "MINC")
COVARIANCE_SOURCES = ("global", "local")

# Short-sale floor for unconstrained kinds, long-only floor otherwise.
DEFAULT_LOWER_BOUND = {"MVS": -0.5, "MIN": -0.5, "MVSC": 0.0, "MINC": 0.0, "EW": 0.0}

KKT_TOL = 1e-8
_RIDGE = 1e-12


@dataclass(frozen=True)
class StrategySpec:
    """One portfolio rule: optimizer kind, covariance source, and bounds."""

    kind: str
    covariance_source: str = "global"
    gamma: float = 1.0
    lower_bound: Optional[float] = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError("kind must be one of %r, got %r" % (STRATEGY_KINDS, self.kind))
        if self.covariance_source not in COVARIANCE_SOURCES:
            raise ValueError(
                "covariance_source must be one of %r, got %r"
                % (COVARIANCE_SOURCES, self.covariance_source)
            )
        if not self.gamma > 0.0:
            raise ValueError("gamma must be positive, got %r" % (self.gamma,))
        if self.lower_bound is None:
            object.__setattr__(self, "lower_bound", DEFAULT_LOWER_BOUND[self.kind])
        if self.lower_bound > 1.0:
            raise ValueError("lower bound above 1 is infeasible")

    @property
    def label(self) -> str:
        if self.kind == "EW" or self.covariance_source == "global":
            return self.kind
        return self.kind + "-L"

    @classmethod
    def from_label(cls, label: str, gamma: float = 1.0) -> "StrategySpec":
        """Parse labels like 'MVS' (global covariance) or 'MINC-L' (local)."""
        name = label.strip().upper()
        local = name.endswith("-L")
        kind = name[:-2] if local else name
        if kind not in STRATEGY_KINDS or (local and kind == "EW"):
            raise ValueError("unknown strategy label %r" % label)
        return cls(kind=kind, covariance_source="local" if local else "global", gamma=gamma)


def equal_weights(n_assets: int) -> np.ndarray:
    if n_assets < 1:
        raise ValueError("need at least one asset")
    return np.full(n_assets, 1.0 / n_assets)


def _check_inputs(sigma, mu, lower_bound):
    s = np.asarray(getattr(sigma, "matrix", sigma), dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("covariance must be square, got shape %r" % (s.shape,))
    n = s.shape[0]
    if not np.all(np.isfinite(s)):
        raise ValueError("covariance contains non-finite values")
    if mu is not None:
        mu = np.asarray(mu, dtype=float).reshape(-1)
        if mu.shape != (n,) or not np.all(np.isfinite(mu)):
            raise ValueError("mean vector must be finite with length %d" % n)
    if n * lower_bound > 1.0 + 1e-12:
        raise InfeasibleError(
            "lower bound %g infeasible for %d assets" % (lower_bound, n)
        )
    return s, mu, n


def _active_set_qp(q, c, lb):
    """Minimize 0.5 w'Qw + c'w subject to sum(w) = 1 and w >= lb.

    Returns (w, budget multiplier, bound multipliers). Q must be symmetric
    positive definite; a tiny ridge is added by the caller so ties resolve
    to the minimum-norm point. Deterministic: ties break at the lowest index.
    """
    n = len(c)
    w = np.full(n, 1.0 / n)
    active = np.zeros(n, dtype=bool)
    lam = 0.0

    for _ in range(60 * (n + 1)):
        free = ~active
        k = int(free.sum())
        if k == 0:
            # Everything pinned: only feasible when n*lb == 1.
            grad = q @ w + c
            lam = float(grad.min())
            pi = grad - lam
        else:
            # Stationarity rows solve Q_FF w_F - lam = -c_F - Q_FA w_A, so the
            # recovered lam satisfies grad = lam + pi directly.
            kkt = np.zeros((k + 1, k + 1))
            kkt[:k, :k] = q[np.ix_(free, free)]
            kkt[:k, k] = -1.0
            kkt[k, :k] = 1.0
            rhs = np.empty(k + 1)
            rhs[:k] = -c[free] - q[np.ix_(free, active)] @ w[active]
            rhs[k] = 1.0 - lb * float(active.sum())
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                raise SolverError("singular KKT system")
            target = w.copy()
            target[free] = sol[:k]
            lam = float(sol[k])
            step = target - w

            if float(np.max(np.abs(step))) > 1e-13:
                # Walk toward the equality-constrained optimum, stopping at
                # the first bound that blocks.
                alpha = 1.0
                block = -1
                for i in np.nonzero(free & (step < 0.0))[0]:
                    ratio = (lb - w[i]) / step[i]
                    if ratio < alpha - 1e-15:
                        alpha = max(ratio, 0.0)
                        block = int(i)
                w = w + alpha * step
                if block >= 0:
                    w[block] = lb
                    active[block] = True
                continue

            grad = q @ w + c
            pi = np.zeros(n)
            pi[active] = grad[active] - lam

        if active.any():
            worst = int(np.argmin(np.where(active, pi, np.inf)))
            if pi[worst] < -1e-11:
                active[worst] = False
                continue
        pi = np.clip(pi, 0.0, None)
        pi[free] = 0.0
        return w, lam, pi

    raise SolverError("active-set iteration limit reached")


def _verify_kkt(w, lam, pi, q, c, lb):
    station = q @ w + c - lam - pi
    residual = max(
        float(np.max(np.abs(station))),
        abs(float(w.sum()) - 1.0),
        float(np.max(lb - w, initial=0.0)),
        float(np.max(np.abs(pi * (w - lb)), initial=0.0)),
    )
    if residual > KKT_TOL:
        raise SolverError("KKT residual %.3e exceeds %.0e" % (residual, KKT_TOL))


def solve_mv(mu, sigma, spec: StrategySpec) -> np.ndarray:
    """Maximize w'mu - (gamma/2) w'Sigma w over the bounded budget set.

    `mu` and `sigma` must share units (decimal returns in the backtest).
    `sigma` may be a LocalCovMatrix or a plain array.
    """
    if spec.kind not in ("MVS", "MVSC"):
        raise ValueError("solve_mv expects an MVS or MVSC spec, got %r" % spec.kind)
    s, mu, n = _check_inputs(sigma, mu, spec.lower_bound)
    q = spec.gamma * s + _RIDGE * np.eye(n)
    w, lam, pi = _active_set_qp(q, -mu, spec.lower_bound)
    _verify_kkt(w, lam, pi, q, -mu, spec.lower_bound)
    return w


def solve_minvar(sigma, spec: StrategySpec) -> np.ndarray:
    """Minimize w'Sigma w over the bounded budget set."""
    if spec.kind not in ("MIN", "MINC"):
        raise ValueError("solve_minvar expects a MIN or MINC spec, got %r" % spec.kind)
    s, _, n = _check_inputs(sigma, None, spec.lower_bound)
    q = 2.0 * s + _RIDGE * np.eye(n)
    c = np.zeros(n)
    w, lam, pi = _active_set_qp(q, c, spec.lower_bound)
    _verify_kkt(w, lam, pi, q, c, spec.lower_bound)
    return w
