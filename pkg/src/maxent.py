"""Maximum-entropy background model of node degrees.

Each relationship type is modelled on its own as a matrix of independent
Bernoulli cells with success probability ``expit(-lambda_i - mu_j)``, where
the multipliers are chosen so that expected degrees equal observed degrees.

Rows and columns whose degree is 0 or full are peeled off first (peeling can
cascade), fixing their remaining cells to 0 or 1. The residual problem is
solved by block coordinate ascent on the dual: every row multiplier solves
its one-dimensional margin equation with a safeguarded Newton iteration,
then every column multiplier does, until the worst margin residual is within
tolerance. Rows (columns) sharing a residual degree share one multiplier.
"""

import logging
import math
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy.special import expit

from src.exceptions import ConvergenceError, ScoringError, UnknownRelationshipError
from src.graph import KPartiteGraph

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITERATIONS = 10000

# Newton iterations per margin equation and sweep.
_NEWTON_STEPS = 100
# Bracket width around the multipliers; expit(-40) is below 1e-17.
_BRACKET = 40.0


@dataclass(frozen=True)
class RelationshipModel:
    """Fitted Bernoulli parameters of one relationship type.

    Attributes:
        name: Relationship type name.
        lambdas: Per left node multiplier (NaN for peeled rows).
        mus: Per right node multiplier (NaN for peeled columns).
        row_fixed: Per left node forced probability, NaN when free.
        col_fixed: Per right node forced probability, NaN when free.
        row_order: Peeling step per row (-1 when free).
        col_order: Peeling step per column (-1 when free).
        residual: Worst absolute margin deviation reached.
        iterations: Number of sweeps used.
    """

    name: str
    lambdas: FloatArray
    mus: FloatArray
    row_fixed: FloatArray
    col_fixed: FloatArray
    row_order: IntArray
    col_order: IntArray
    residual: float
    iterations: int

    @property
    def shape(self) -> tuple[int, int]:
        """Number of left and right nodes."""
        return len(self.lambdas), len(self.mus)

    def probability(self, i: int, j: int) -> float:
        """Success probability of cell (i, j), honouring frozen cells."""
        n_rows, n_cols = self.shape
        if not (0 <= i < n_rows and 0 <= j < n_cols):
            raise IndexError(f"cell ({i}, {j}) outside {n_rows}x{n_cols} model")
        row_step = int(self.row_order[i])
        col_step = int(self.col_order[j])
        if row_step >= 0 and (col_step < 0 or row_step < col_step):
            return float(self.row_fixed[i])
        if col_step >= 0:
            return float(self.col_fixed[j])
        return float(expit(-self.lambdas[i] - self.mus[j]))

    def probabilities(self) -> FloatArray:
        """Dense probability matrix; meant for small models and tests."""
        n_rows, n_cols = self.shape
        out = np.empty((n_rows, n_cols), dtype=np.float64)
        for i in range(n_rows):
            for j in range(n_cols):
                out[i, j] = self.probability(i, j)
        return out

    def expected_degrees(self) -> tuple[FloatArray, FloatArray]:
        """Expected row and column sums."""
        matrix = self.probabilities()
        return matrix.sum(axis=1), matrix.sum(axis=0)

    def entropy_bits(self) -> float:
        """Entropy of the product-Bernoulli distribution in bits."""
        p = self.probabilities()
        inner = (p > 0) & (p < 1)
        q = p[inner]
        return float(-(q * np.log2(q) + (1 - q) * np.log2(1 - q)).sum())

    def to_record(self) -> dict[str, Any]:
        """JSON-ready dump of the multipliers and frozen margins."""

        def floats(values: FloatArray) -> list[float | None]:
            return [None if math.isnan(v) else float(v) for v in values]

        return {
            "name": self.name,
            "lambda": floats(self.lambdas),
            "mu": floats(self.mus),
            "frozen_rows": {
                str(i): float(self.row_fixed[i])
                for i in np.flatnonzero(self.row_order >= 0)
            },
            "frozen_columns": {
                str(j): float(self.col_fixed[j])
                for j in np.flatnonzero(self.col_order >= 0)
            },
            # A cell in a frozen row and column takes the earlier step's value.
            "frozen_row_steps": {
                str(i): int(self.row_order[i])
                for i in np.flatnonzero(self.row_order >= 0)
            },
            "frozen_column_steps": {
                str(j): int(self.col_order[j])
                for j in np.flatnonzero(self.col_order >= 0)
            },
            "residual": self.residual,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class MaxEntModel:
    """One independent relationship model per relationship type."""

    relationships: Mapping[str, RelationshipModel]

    def __getitem__(self, name: str) -> RelationshipModel:
        try:
            return self.relationships[name]
        except KeyError as e:
            raise UnknownRelationshipError(name) from e

    def to_record(self) -> dict[str, Any]:
        """JSON-ready dump of every relationship model."""
        return {
            "relationships": [
                model.to_record() for model in self.relationships.values()
            ]
        }


# ============================================================================
# FITTING
# ============================================================================


def _peel(
    rows: IntArray, cols: IntArray
) -> tuple[FloatArray, FloatArray, IntArray, IntArray, IntArray, IntArray]:
    """Freeze empty and full rows/columns until none remain.

    Returns:
        Fixed values and peeling steps per row and column, plus the residual
        row and column degrees of the free part.
    """
    n_rows, n_cols = len(rows), len(cols)
    row_fixed = np.full(n_rows, np.nan)
    col_fixed = np.full(n_cols, np.nan)
    row_order = np.full(n_rows, -1, dtype=np.int64)
    col_order = np.full(n_cols, -1, dtype=np.int64)
    r = rows.astype(np.int64).copy()
    c = cols.astype(np.int64).copy()
    free_rows = np.ones(n_rows, dtype=bool)
    free_cols = np.ones(n_cols, dtype=bool)
    step = 0

    changed = True
    while changed:
        changed = False
        width = int(free_cols.sum())
        for i in np.flatnonzero(free_rows):
            if r[i] == 0 or r[i] == width:
                value = 1.0 if r[i] == width and width > 0 else 0.0
                row_fixed[i], row_order[i] = value, step
                step += 1
                free_rows[i] = False
                if value == 1.0:
                    c[free_cols] -= 1
                changed = True
        height = int(free_rows.sum())
        for j in np.flatnonzero(free_cols):
            if c[j] == 0 or c[j] == height:
                value = 1.0 if c[j] == height and height > 0 else 0.0
                col_fixed[j], col_order[j] = value, step
                step += 1
                free_cols[j] = False
                if value == 1.0:
                    r[free_rows] -= 1
                changed = True
    return row_fixed, col_fixed, row_order, col_order, r, c


def _tight_split(rows: IntArray, cols: IntArray) -> int | None:
    """Smallest k whose k largest rows exactly fill the column capacities.

    Such a tight Gale-Ryser inequality forces a block of cells to one and
    another to zero, so no finite multipliers match the margins.
    """
    k = np.arange(1, len(rows))
    if len(k) == 0:
        return None
    prefix = np.cumsum(np.sort(rows)[::-1])[:-1]
    ascending = np.sort(cols)
    below = np.searchsorted(ascending, k, side="left")
    partial = np.concatenate([[0], np.cumsum(ascending)])
    capacity = partial[below] + k * (len(ascending) - below)
    tight = np.flatnonzero(prefix == capacity)
    return int(k[tight[0]]) if len(tight) else None


def _solve_margins(
    targets: FloatArray,
    start: FloatArray,
    others: FloatArray,
    weights: FloatArray,
    tolerance: float,
) -> FloatArray:
    """Solve sum_j w_j expit(-x_k - o_j) = t_k for every k.

    The left-hand side is strictly decreasing in ``x_k``; Newton steps that
    leave the current bracket are replaced by bisection.
    """
    lo = np.full_like(targets, -others.max() - _BRACKET)
    hi = np.full_like(targets, -others.min() + _BRACKET)
    x = np.clip(start, lo, hi)
    for _ in range(_NEWTON_STEPS):
        p = expit(-x[:, None] - others[None, :])
        g = (p * weights).sum(axis=1) - targets
        if np.abs(g).max() <= tolerance:
            break
        slope = -(p * (1 - p) * weights).sum(axis=1)
        lo = np.where(g > 0, x, lo)
        hi = np.where(g < 0, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - g / slope
        inside = np.isfinite(newton) & (newton > lo) & (newton < hi)
        x = np.where(inside, newton, 0.5 * (lo + hi))
    return x


def fit_relationship(
    name: str,
    rows: IntArray,
    cols: IntArray,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    initial: float = 0.0,
) -> RelationshipModel:
    """Fit one relationship type from its row and column degrees.

    Args:
        name: Relationship type name.
        rows: Observed left-node degrees.
        cols: Observed right-node degrees.
        tolerance: Allowed absolute deviation of expected from observed degree.
        max_iterations: Maximum number of row+column sweeps.
        initial: Starting value of every multiplier.

    Raises:
        ConvergenceError: If the tolerance is not met in ``max_iterations``,
            or at once when the margins force cells to 0 or 1.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    row_fixed, col_fixed, row_order, col_order, r, c = _peel(rows, cols)
    lambdas = np.full(len(rows), np.nan)
    mus = np.full(len(cols), np.nan)
    free_r = np.flatnonzero(row_order < 0)
    free_c = np.flatnonzero(col_order < 0)

    if len(free_r) == 0 or len(free_c) == 0:
        return RelationshipModel(
            name, lambdas, mus, row_fixed, col_fixed, row_order, col_order, 0.0, 0
        )

    split = _tight_split(r[free_r], c[free_c])
    if split is not None:
        logger.debug(
            "Margins of '%s' are degenerate: the top %d rows fill their columns",
            name,
            split,
        )
        raise ConvergenceError(name, math.inf, 0, degenerate=True)

    # Equal residual degrees give identical equations: solve once per class.
    row_deg, row_inv, row_count = np.unique(
        r[free_r], return_inverse=True, return_counts=True
    )
    col_deg, col_inv, col_count = np.unique(
        c[free_c], return_inverse=True, return_counts=True
    )
    row_targets = row_deg.astype(np.float64)
    col_targets = col_deg.astype(np.float64)
    row_weights = row_count.astype(np.float64)
    col_weights = col_count.astype(np.float64)
    lam = np.full(len(row_deg), float(initial))
    mu = np.full(len(col_deg), float(initial))

    inner_tol = min(tolerance, 1e-9) * 1e-3
    residual = math.inf
    sweeps = 0
    while sweeps < max_iterations:
        sweeps += 1
        lam = _solve_margins(row_targets, lam, mu, col_weights, inner_tol)
        mu = _solve_margins(col_targets, mu, lam, row_weights, inner_tol)
        p = expit(-lam[:, None] - mu[None, :])
        row_err = np.abs((p * col_weights).sum(axis=1) - row_targets).max()
        col_err = np.abs((p.T * row_weights).sum(axis=1) - col_targets).max()
        residual = float(max(row_err, col_err))
        if residual <= tolerance:
            break
    else:
        raise ConvergenceError(name, residual, sweeps)

    lambdas[free_r] = lam[row_inv.ravel()]
    mus[free_c] = mu[col_inv.ravel()]
    logger.info("Fitted '%s' in %d sweeps (residual %.2e)", name, sweeps, residual)
    return RelationshipModel(
        name, lambdas, mus, row_fixed, col_fixed, row_order, col_order, residual, sweeps
    )


def fit(
    graph: KPartiteGraph,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    threads: int = 1,
    initial: float = 0.0,
) -> MaxEntModel:
    """Fit the background model of every relationship type of ``graph``.

    Relationship types are fitted independently, concurrently when
    ``threads > 1``.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")

    def one(name: str) -> RelationshipModel:
        rows, cols = graph.degrees(name)
        return fit_relationship(name, rows, cols, tolerance, max_iterations, initial)

    names = [et.name for et in graph.edge_types]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            models = list(pool.map(one, names))
    else:
        models = [one(name) for name in names]
    return MaxEntModel(dict(zip(names, models, strict=True)))


def edge_probability(
    model: MaxEntModel, relationship: str, left: int, right: int
) -> float:
    """Bernoulli success probability of one cell of a relationship type."""
    return model[relationship].probability(left, right)


def database_density(graph: KPartiteGraph) -> float:
    """Edges divided by possible edges over all declared edge types.

    Raises:
        ScoringError: If no edge type has two non-empty sides.
    """
    possible = sum(
        len(graph.partitions[et.left]) * len(graph.partitions[et.right])
        for et in graph.edge_types
    )
    if possible == 0:
        raise ScoringError("graph has no possible edges; density is undefined")
    return graph.edge_count / possible
