"""ADMM solver for spatially regularized sparse self-expression.

Minimizes over Z, subject to diag(Z) = 0::

    0.5 * ||X - XZ||_F^2 + lambda1 * ||Z||_1 + lambda2 * ||ZW||_{2,1}

by splitting U = Z and V = UW. Each sweep updates Z (elementwise
shrinkage), U (a Sylvester equation), V (column-wise group shrinkage), then
the multipliers and the increasing penalties alpha1, alpha2.
"""

import json
from dataclasses import dataclass, field, replace, asdict

import numpy as np

from .errors import InvalidInputError, NumericalError
from .weights import l21_norm


@dataclass(frozen=True)
class AdmmConfig:
    lambda1: float = 1e-6
    lambda2: float = 1e-4
    rho: float = 1.1
    alpha_init: float = 0.01
    alpha_max: float = 1e8
    max_iters: int = 20
    tol: float = 1e-3

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise InvalidInputError("lambda1 and lambda2 must be non-negative")
        if not self.rho > 1:
            raise InvalidInputError("rho must exceed 1")
        if not 0 < self.alpha_init <= self.alpha_max:
            raise InvalidInputError("need 0 < alpha_init <= alpha_max")
        if int(self.max_iters) < 1:
            raise InvalidInputError("max_iters must be positive")
        if not self.tol > 0:
            raise InvalidInputError("tol must be positive")


@dataclass(frozen=True)
class AdmmState:
    z: np.ndarray
    u: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    xi: np.ndarray
    alpha1: float
    alpha2: float
    iteration: int = 0

    @classmethod
    def initial(cls, n, config):
        zero = np.zeros((n, n))
        return cls(
            z=zero,
            u=zero.copy(),
            v=zero.copy(),
            theta=zero.copy(),
            xi=zero.copy(),
            alpha1=config.alpha_init,
            alpha2=config.alpha_init,
        )


@dataclass
class SolveReport:
    """Per-solve diagnostics.

    ``objective_trace`` holds the full objective after each Z-update;
    ``residual_trace`` the pair (max|Z - U|, max|V - UW|) per sweep.
    """

    objective_trace: list = field(default_factory=list)
    residual_trace: list = field(default_factory=list)
    primal_residual_z: float = float("nan")
    primal_residual_v: float = float("nan")
    iterations_run: int = 0
    converged: bool = False

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def _features(x):
    return np.asarray(getattr(x, "data", x), dtype=np.float64)


def _check_finite(arr, stage):
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite values produced by the {stage}", stage)
    return arr


def soft_threshold(m, t):
    """Elementwise shrinkage sign(m) * max(|m| - t, 0)."""
    return np.sign(m) * np.maximum(np.abs(m) - t, 0.0)


def shrink_columns(m, t):
    """Scale each column toward zero by t in Euclidean norm.

    Columns with norm at most t become zero.
    """
    if t == 0:
        return m.copy()
    norms = np.linalg.norm(m, axis=0)
    keep = norms > t
    factor = np.zeros_like(norms)
    factor[keep] = (norms[keep] - t) / norms[keep]
    return m * factor[None, :]


class SylvesterSolver:
    """Solves (G + a1*I) U + a2 * U * (W W^T) = C for varying a1, a2.

    Both G = X^T X and W W^T are symmetric, so each is diagonalized once and
    a solve for any penalty pair is two basis changes and a division.
    Denominators are at least a1 > 0.
    """

    def __init__(self, gram, wwt):
        if not (np.all(np.isfinite(gram)) and np.all(np.isfinite(wwt))):
            raise NumericalError("non-finite Gram matrix in the U-update", "U-update")
        try:
            lam, self.q = np.linalg.eigh(gram)
            mu, self.p = np.linalg.eigh(wwt)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigendecomposition failed: {exc}", "U-update") from exc
        # both are PSD; drop round-off negatives
        self.lam = np.maximum(lam, 0.0)
        self.mu = np.maximum(mu, 0.0)

    @classmethod
    def for_problem(cls, x, weights):
        x = _features(x)
        return cls(x.T @ x, weights.w @ weights.w.T)

    def solve(self, alpha1, alpha2, rhs):
        if alpha1 <= 0:
            raise InvalidInputError("alpha1 must be positive")
        rotated = self.q.T @ rhs @ self.p
        denom = (self.lam[:, None] + alpha1) + alpha2 * self.mu[None, :]
        return self.q @ (rotated / denom) @ self.p.T


def update_z(state, config):
    """Shrink U - Theta/alpha1 by lambda1/alpha1, then zero the diagonal."""
    if state.alpha1 <= 0:
        raise InvalidInputError("alpha1 must be positive")
    z = soft_threshold(state.u - state.theta / state.alpha1, config.lambda1 / state.alpha1)
    np.fill_diagonal(z, 0.0)
    return _check_finite(z, "Z-update")


def u_update_rhs(state, x, weights):
    """Right-hand side X^T X + a2 V W^T + a1 Z + Theta + Xi W^T."""
    x = _features(x)
    w = weights.w
    return (
        x.T @ x
        + state.alpha2 * state.v @ w.T
        + state.alpha1 * state.z
        + state.theta
        + state.xi @ w.T
    )


def update_u(state, x, weights, sylvester=None):
    """Solve the Sylvester equation that zeroes the U-gradient."""
    if sylvester is None:
        sylvester = SylvesterSolver.for_problem(x, weights)
    rhs = u_update_rhs(state, x, weights)
    try:
        u = sylvester.solve(state.alpha1, state.alpha2, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"U-update failed: {exc}", "U-update") from exc
    return _check_finite(u, "U-update")


def update_v(state, weights, config):
    """Column-wise group shrinkage of N = UW - Xi/alpha2."""
    if state.alpha2 <= 0:
        raise InvalidInputError("alpha2 must be positive")
    target = state.u @ weights.w - state.xi / state.alpha2
    return _check_finite(shrink_columns(target, config.lambda2 / state.alpha2), "V-update")


def update_multipliers(state, weights, config):
    """Dual ascent on Theta and Xi, then grow the penalties by rho."""
    theta = state.theta + state.alpha1 * (state.z - state.u)
    xi = state.xi + state.alpha2 * (state.v - state.u @ weights.w)
    alpha1 = min(config.rho * state.alpha1, config.alpha_max)
    alpha2 = min(config.rho * state.alpha2, config.alpha_max)
    _check_finite(theta, "multiplier update")
    _check_finite(xi, "multiplier update")
    return theta, xi, alpha1, alpha2


def objective(x, z, weights, config):
    """0.5*||X - XZ||_F^2 + lambda1*||Z||_1 + lambda2*||ZW||_{2,1}."""
    x = _features(x)
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (x.shape[1], x.shape[1]) or z.shape != weights.w.shape:
        raise InvalidInputError("dimensions of X, Z and W disagree")
    resid = x - x @ z
    return float(
        0.5 * np.sum(resid**2)
        + config.lambda1 * np.abs(z).sum()
        + config.lambda2 * l21_norm(z @ weights.w)
    )


def solve(x, weights, config=None):
    """Run ADMM until both primal residuals drop below ``tol``.

    Parameters
    ----------
    x : FeatureMatrix or (d, n) array
    weights : SpatialWeights
    config : AdmmConfig, optional

    Returns
    -------
    z : (n, n) array with zero diagonal
    report : SolveReport
    """
    config = config or AdmmConfig()
    xd = _features(x)
    n = xd.shape[1]
    if weights.w.shape != (n, n):
        raise InvalidInputError(
            f"X has {n} columns but W is {weights.w.shape[0]}x{weights.w.shape[1]}"
        )
    if not np.all(np.isfinite(xd)):
        raise InvalidInputError("X must be finite")

    # overflow surfaces as a stage-tagged NumericalError via _check_finite
    with np.errstate(over="ignore", invalid="ignore"):
        return _iterate(xd, weights, config)


def _iterate(xd, weights, config):
    n = xd.shape[1]
    sylvester = SylvesterSolver.for_problem(xd, weights)
    state = AdmmState.initial(n, config)
    report = SolveReport()
    for _ in range(int(config.max_iters)):
        state = replace(state, z=update_z(state, config))
        state = replace(state, u=update_u(state, xd, weights, sylvester))
        state = replace(state, v=update_v(state, weights, config))

        rz = float(np.abs(state.z - state.u).max())
        rv = float(np.abs(state.v - state.u @ weights.w).max())
        report.objective_trace.append(objective(xd, state.z, weights, config))
        report.residual_trace.append([rz, rv])

        theta, xi, a1, a2 = update_multipliers(state, weights, config)
        state = replace(
            state, theta=theta, xi=xi, alpha1=a1, alpha2=a2, iteration=state.iteration + 1
        )
        report.primal_residual_z, report.primal_residual_v = rz, rv
        if rz < config.tol and rv < config.tol:
            report.converged = True
            break
    report.iterations_run = state.iteration
    return state.z, report
