"""Finite-sum objectives: component losses, problem constants, and the L1 prox.

Every problem here is an average f(w) = (1/n) sum_i f_i(w) where each f_i is
s-strongly convex with an L-Lipschitz gradient.  Solvers and the verification
suites only touch the small interface implemented by the classes below:
component values/gradients, row-wise table evaluation, the full gradient, and
the big-data condition report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

LOGISTIC = "logistic"
SQUARED = "squared"
LOSS_KINDS = (LOGISTIC, SQUARED)

# curvature of the loss in its margin argument, used for per-row L bounds
_MARGIN_CURVATURE = {SQUARED: 1.0, LOGISTIC: 0.25}


class StrongConvexityRequired(ValueError):
    """Raised when an operation needs s > 0 but the problem declares s = 0."""


@dataclass
class BigDataReport:
    """Outcome of the n >= beta * L / s test."""

    L: float
    s: float
    n: int
    beta_achieved: float
    satisfied_at_beta: float
    verdict: bool


@dataclass
class ReferenceSolution:
    """High-accuracy minimizer used as the suboptimality reference.

    For smooth problems grad_norm_at_solution is the gradient norm at w_star;
    for composite problems it is the proximal fixed-point residual.
    """

    w_star: np.ndarray
    f_star: float
    grad_norm_at_solution: float
    method_tag: str


def prox_operator(l1_weight: float, z: np.ndarray, step: float) -> np.ndarray:
    """Soft threshold: argmin_x (1/2)||x - z||^2 + step * l1_weight * ||x||_1.

    The threshold is t = l1_weight * step.  With l1_weight == 0 the map is the
    identity and the input values are returned unchanged (as a fresh array).
    """
    if l1_weight < 0:
        raise ValueError(f"l1_weight must be >= 0, got {l1_weight}")
    if step <= 0:
        raise ValueError(f"prox step must be > 0, got {step}")
    z = np.asarray(z, dtype=float)
    if l1_weight == 0.0:
        return z.copy()
    t = l1_weight * step
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


class _ProblemBase:
    """Shared aggregate operations; subclasses provide the component ops.

    Subclasses must define n, d, s, l1_weight plus component_value,
    component_gradient, table_values, table_gradients and objective_batch.
    """

    n: int
    d: int
    s: float
    l1_weight: float

    # -- validation helpers -------------------------------------------------

    def _check_index(self, i: int) -> int:
        i = int(i)
        if not 0 <= i < self.n:
            raise IndexError(f"component index {i} out of range [0, {self.n})")
        return i

    def _check_point(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.d,):
            raise ValueError(f"point must have shape ({self.d},), got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("point contains non-finite entries")
        return w

    def _check_table(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.shape != (self.n, self.d):
            raise ValueError(
                f"table must have shape ({self.n}, {self.d}), got {points.shape}"
            )
        return points

    # -- aggregates built on the row-wise ops -------------------------------

    def full_gradient(self, w: np.ndarray) -> np.ndarray:
        """Gradient of the smooth part (1/n) sum_i f_i at w."""
        w = self._check_point(w)
        tiled = np.broadcast_to(w, (self.n, self.d))
        return self.table_gradients(tiled).mean(axis=0)

    def full_objective(self, w: np.ndarray) -> float:
        """(1/n) sum_i f_i(w) plus the L1 term when one is configured."""
        w = self._check_point(w)
        tiled = np.broadcast_to(w, (self.n, self.d))
        value = float(self.table_values(tiled).mean())
        if self.l1_weight > 0.0:
            value += self.l1_weight * float(np.abs(w).sum())
        return value

    def big_data_check(self, beta: float) -> BigDataReport:
        """Report whether n >= beta * L / s holds (boundary inclusive)."""
        if beta <= 0:
            raise ValueError(f"beta must be > 0, got {beta}")
        if self.s == 0.0:
            raise StrongConvexityRequired(
                "big data condition needs s > 0; this problem declares s = 0"
            )
        L = self.lipschitz_constant()
        return BigDataReport(
            L=L,
            s=self.s,
            n=self.n,
            beta_achieved=self.n * self.s / L,
            satisfied_at_beta=float(beta),
            verdict=bool(self.n * self.s >= beta * L),
        )

    def prox(self, z: np.ndarray, step: float) -> np.ndarray:
        return prox_operator(self.l1_weight, z, step)


class FiniteSumProblem(_ProblemBase):
    """Data-backed finite sum: f_i(w) = loss(<x_i, w>, y_i) + (s/2) ||w||^2.

    Parameters
    ----------
    features : (n, d) array
        One row per component.
    targets : (n,) array
        Regression targets (squared loss) or labels in {-1, +1} (logistic).
    loss : str
        "squared" or "logistic".
    s : float
        Strong convexity constant; the ridge term is folded into every f_i.
    l1_weight : float
        Optional L1 penalty weight applied to the average, handled by prox.
    """

    def __init__(self, features, targets, loss: str, s: float = 0.0,
                 l1_weight: float = 0.0):
        features = np.ascontiguousarray(features, dtype=float)
        targets = np.ascontiguousarray(targets, dtype=float)
        if features.ndim != 2 or features.shape[0] == 0 or features.shape[1] == 0:
            raise ValueError(f"features must be a nonempty 2-D array, got shape {features.shape}")
        if targets.shape != (features.shape[0],):
            raise ValueError(
                f"targets must have shape ({features.shape[0]},), got {targets.shape}"
            )
        if not (np.all(np.isfinite(features)) and np.all(np.isfinite(targets))):
            raise ValueError("features/targets contain non-finite entries")
        if loss not in (SQUARED, LOGISTIC):
            raise ValueError(f"unknown loss {loss!r}")
        if loss == LOGISTIC and not np.all(np.isin(targets, (-1.0, 1.0))):
            raise ValueError("logistic targets must lie in {-1, +1}")
        if s < 0:
            raise ValueError(f"s must be >= 0, got {s}")
        if l1_weight < 0:
            raise ValueError(f"l1_weight must be >= 0, got {l1_weight}")
        self.features = features
        self.targets = targets
        self.loss = loss
        self.s = float(s)
        self.l1_weight = float(l1_weight)
        self.n, self.d = features.shape
        self._lipschitz: float | None = None

    def __repr__(self) -> str:
        return (f"FiniteSumProblem(n={self.n}, d={self.d}, loss={self.loss!r}, "
                f"s={self.s}, l1_weight={self.l1_weight})")

    # -- loss kernels --------------------------------------------------------

    def _loss_values(self, margins: np.ndarray, targets: np.ndarray) -> np.ndarray:
        if self.loss == SQUARED:
            r = margins - targets
            return 0.5 * r * r
        # log(1 + exp(-y m)) evaluated stably for large |m|
        return np.logaddexp(0.0, -targets * margins)

    def _loss_dmargin(self, margins: np.ndarray, targets: np.ndarray) -> np.ndarray:
        if self.loss == SQUARED:
            return margins - targets
        return -targets * expit(-targets * margins)

    # -- component interface -------------------------------------------------

    def component_value(self, i: int, w: np.ndarray) -> float:
        i = self._check_index(i)
        w = self._check_point(w)
        m = float(self.features[i] @ w)
        value = float(self._loss_values(np.array(m), np.array(self.targets[i])))
        return value + 0.5 * self.s * float(w @ w)

    def component_gradient(self, i: int, w: np.ndarray) -> np.ndarray:
        i = self._check_index(i)
        w = self._check_point(w)
        m = float(self.features[i] @ w)
        dm = float(self._loss_dmargin(np.array(m), np.array(self.targets[i])))
        return dm * self.features[i] + self.s * w

    def table_values(self, points: np.ndarray) -> np.ndarray:
        """f_i evaluated at row i of `points`, for all i at once."""
        points = self._check_table(points)
        margins = np.einsum("ij,ij->i", self.features, points)
        ridge = 0.5 * self.s * np.einsum("ij,ij->i", points, points)
        return self._loss_values(margins, self.targets) + ridge

    def table_gradients(self, points: np.ndarray) -> np.ndarray:
        """Gradient of f_i at row i of `points`, for all i at once."""
        points = self._check_table(points)
        margins = np.einsum("ij,ij->i", self.features, points)
        dm = self._loss_dmargin(margins, self.targets)
        return dm[:, None] * self.features + self.s * points

    def objective_batch(self, points: np.ndarray) -> np.ndarray:
        """Smooth objective (1/n) sum_i f_i at each row of `points`."""
        points = np.asarray(points, dtype=float)
        margins = points @ self.features.T  # (m, n)
        losses = self._loss_values(margins, self.targets[None, :])
        ridge = 0.5 * self.s * np.einsum("ij,ij->i", points, points)
        return losses.mean(axis=1) + ridge

    def full_gradient(self, w: np.ndarray) -> np.ndarray:
        w = self._check_point(w)
        margins = self.features @ w
        dm = self._loss_dmargin(margins, self.targets)
        return self.features.T @ dm / self.n + self.s * w

    def lipschitz_constant(self) -> float:
        """max_i L_i with L_i = c ||x_i||^2 + s, c the loss margin curvature."""
        if self._lipschitz is None:
            c = _MARGIN_CURVATURE[self.loss]
            row_norms = np.einsum("ij,ij->i", self.features, self.features)
            self._lipschitz = float(c * row_norms.max() + self.s)
        return self._lipschitz


class QuadraticProblem(_ProblemBase):
    """Per-component isotropic quadratics f_i(w) = (a_i/2) ||w - c_i||^2.

    Exact desk problems (integer-valued tables, analytic minimizers) live in
    this family; its strong convexity s defaults to min(a_i) and does not need
    a separate ridge term.
    """

    def __init__(self, centers, weights=None, s: float | None = None,
                 l1_weight: float = 0.0):
        centers = np.ascontiguousarray(centers, dtype=float)
        if centers.ndim != 2 or centers.shape[0] == 0 or centers.shape[1] == 0:
            raise ValueError(f"centers must be a nonempty 2-D array, got shape {centers.shape}")
        n, d = centers.shape
        if weights is None:
            weights = np.ones(n)
        weights = np.ascontiguousarray(weights, dtype=float)
        if weights.shape != (n,):
            raise ValueError(f"weights must have shape ({n},), got {weights.shape}")
        if np.any(weights <= 0):
            raise ValueError("component weights must be > 0")
        if s is None:
            s = float(weights.min())
        if not 0 <= s <= weights.min():
            raise ValueError(f"s must lie in [0, min weight]; got s={s}")
        if l1_weight < 0:
            raise ValueError(f"l1_weight must be >= 0, got {l1_weight}")
        self.centers = centers
        self.weights = weights
        self.s = float(s)
        self.l1_weight = float(l1_weight)
        self.n, self.d = n, d

    def __repr__(self) -> str:
        return f"QuadraticProblem(n={self.n}, d={self.d}, s={self.s})"

    def component_value(self, i: int, w: np.ndarray) -> float:
        i = self._check_index(i)
        w = self._check_point(w)
        diff = w - self.centers[i]
        return 0.5 * self.weights[i] * float(diff @ diff)

    def component_gradient(self, i: int, w: np.ndarray) -> np.ndarray:
        i = self._check_index(i)
        w = self._check_point(w)
        return self.weights[i] * (w - self.centers[i])

    def table_values(self, points: np.ndarray) -> np.ndarray:
        points = self._check_table(points)
        diffs = points - self.centers
        return 0.5 * self.weights * np.einsum("ij,ij->i", diffs, diffs)

    def table_gradients(self, points: np.ndarray) -> np.ndarray:
        points = self._check_table(points)
        return self.weights[:, None] * (points - self.centers)

    def objective_batch(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        # ||z - c_i||^2 expanded to stay vectorized over both axes
        znorm = np.einsum("ij,ij->i", points, points)
        cnorm = np.einsum("ij,ij->i", self.centers, self.centers)
        cross = points @ self.centers.T
        sq = znorm[:, None] - 2.0 * cross + cnorm[None, :]
        return 0.5 * (sq @ self.weights) / self.n

    def minimizer(self) -> np.ndarray:
        """Closed form: the weight-weighted mean of the centers."""
        return (self.weights @ self.centers) / self.weights.sum()

    def lipschitz_constant(self) -> float:
        return float(self.weights.max())
