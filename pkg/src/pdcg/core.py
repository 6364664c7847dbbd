"""Dense vector/operator arithmetic and the validated problem container.

Everything downstream works on 1-D float64 numpy arrays and a dense
linear operator A of shape (n, p).  The primal variable x lives in R^p,
the dual variable y in R^n.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .functions import Loss, Regularizer

# Negative duality gaps larger than this are treated as oracle bugs;
# smaller ones are round-off and clamped to zero.
GAP_CLAMP = 1e-10


class DimensionMismatch(ValueError):
    """Operand length disagrees with the operator shape."""


class ValidationError(ValueError):
    """Problem instance violates a structural requirement."""


class DomainError(ValueError):
    """Oracle evaluated at a point outside its admissible domain."""


class FeasibilityError(ValueError):
    """Supplied point lies outside the required feasible set."""


class ConfigurationError(ValueError):
    """Incompatible algorithm, schedule, or problem configuration."""


class GapInconsistencyError(RuntimeError):
    """Duality gap negative beyond round-off; indicates an oracle bug."""


def as_vector(x, length: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float64 array, optionally checking length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} contains non-finite entries")
    return v


def clamp_gap(gap: float) -> float:
    """Zero out round-off negativity of a duality gap; reject real negativity."""
    if gap < -GAP_CLAMP:
        raise GapInconsistencyError(f"duality gap {gap} < -{GAP_CLAMP}; oracle inconsistency")
    return 0.0 if gap < 0.0 else float(gap)


def check_gap_floor(gap: float) -> float:
    """Pass a raw gap through unchanged, rejecting real negativity.

    Trace rows keep the exact primal-dual difference (so the row stays
    consistent to the bit); only values below the round-off floor signal
    an oracle bug.
    """
    if gap < -GAP_CLAMP:
        raise GapInconsistencyError(f"duality gap {gap} < -{GAP_CLAMP}; oracle inconsistency")
    return float(gap)


class LinearOperator:
    """Dense matrix A of shape (n, p) with exact transpose action.

    ``apply`` computes A x, ``adjoint_apply`` computes A^T y; both are
    deterministic and the pair satisfies <A x, y> = <x, A^T y> to
    round-off.  Row and column norms are cached for the geometry
    estimates used by the convergence-bound checkers.
    """

    def __init__(self, matrix) -> None:
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim != 2:
            raise DimensionMismatch(f"operator matrix must be 2-D, got shape {m.shape}")
        if m.shape[0] < 1 or m.shape[1] < 1:
            raise ValidationError("operator matrix must be non-empty")
        if not np.all(np.isfinite(m)):
            raise ValidationError("operator matrix contains non-finite entries")
        m = m.copy()
        m.setflags(write=False)
        self.matrix = m
        self.n, self.p = m.shape
        self.row_norms = np.linalg.norm(m, axis=1)
        self.col_norms = np.linalg.norm(m, axis=0)

    @classmethod
    def identity(cls, n: int) -> "LinearOperator":
        return cls(np.eye(n))

    def apply(self, x) -> np.ndarray:
        x = as_vector(x, self.p, "x")
        return self.matrix @ x

    def adjoint_apply(self, y) -> np.ndarray:
        y = as_vector(y, self.n, "y")
        return self.matrix.T @ y

    def row(self, i: int) -> np.ndarray:
        return self.matrix[i]

    def column(self, j: int) -> np.ndarray:
        return self.matrix[:, j]

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"LinearOperator(n={self.n}, p={self.p})"


@dataclass(frozen=True)
class ProblemInstance:
    """The triple (A, h, f) defining min_x h(x) + f(A x)."""

    operator: LinearOperator
    regularizer: "Regularizer"
    loss: "Loss"

    @property
    def n(self) -> int:
        return self.operator.n

    @property
    def p(self) -> int:
        return self.operator.p


def validate_instance(
    problem: ProblemInstance,
    require_strong_convexity: bool = False,
    require_compact_domain: bool = False,
) -> ProblemInstance:
    """Check dimension consistency; return the instance unchanged on success.

    Called at every solver entry point.  ``require_strong_convexity``
    additionally demands a positive modulus on the regularizer;
    ``require_compact_domain`` demands a compact primal domain.
    """
    op = problem.operator
    reg = problem.regularizer
    loss = problem.loss
    if reg.dim != op.p:
        raise ValidationError(
            f"regularizer dimension {reg.dim} does not match operator columns {op.p}"
        )
    if loss.dim != op.n:
        raise ValidationError(
            f"loss dimension {loss.dim} does not match operator rows {op.n}"
        )
    if require_strong_convexity and not reg.mu > 0.0:
        raise ValidationError(
            f"regularizer modulus mu={reg.mu} must be positive for this algorithm"
        )
    if require_compact_domain and not reg.domain.compact:
        raise ValidationError("algorithm requires a compact primal domain")
    return problem


@dataclass(frozen=True)
class TraceRecord:
    """Per-iteration certificate row.

    ``primal_value``, ``dual_value`` and ``gap`` are evaluated at the
    pre-step pair (x_{t-1}, y_{t-1}), so the gap consumed by the
    line-search rule appears verbatim in the row.  ``avg_primal_value``
    is the objective at the averaged iterate including x_{t-1}.
    ``dual_suboptimality`` and ``bregman_to_ref`` describe the post-step
    pair (x_t, y_t) against a reference solution and are filled only
    when a reference is supplied.  ``avg_gap`` is the gap at the
    schedule's canonical averaged pair, when one is defined.
    """

    t: int
    rho: float
    primal_value: float
    dual_value: float
    gap: float
    avg_primal_value: float
    dual_suboptimality: Optional[float] = None
    bregman_to_ref: Optional[float] = None
    avg_gap: Optional[float] = None
