"""Structured linear algebra: lower-triangular Toeplitz and Vandermonde stacks.

The Toeplitz matrices are built from irregular times and drive both the
Hamiltonian reductions and the deformation-coefficient solves; the stacked
Vandermonde systems interpolate data at the apparent singularities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import PoleProfile, TimeChart
from .ratcalc import INF


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class DegenerateNodesError(ValueError):
    pass


@dataclass
class LowerToeplitz:
    """Lower-triangular Toeplitz matrix given by its first column."""

    first_column: np.ndarray

    def __post_init__(self):
        self.first_column = np.asarray(self.first_column, dtype=complex)

    @property
    def size(self) -> int:
        return self.first_column.size

    @property
    def singular(self) -> bool:
        return self.size > 0 and self.first_column[0] == 0.0

    def dense(self) -> np.ndarray:
        m = self.size
        M = np.zeros((m, m), dtype=complex)
        for j in range(m):
            M[j:, j] = self.first_column[: m - j]
        return M

    def __matmul__(self, vec: np.ndarray) -> np.ndarray:
        return self.dense() @ np.asarray(vec, dtype=complex)


def toeplitz_from_times(chart: TimeChart, pole, profile: PoleProfile) -> LowerToeplitz:
    """M_inf (size r_inf - 3) or M_{X_s} (size r_s - 1) from the chart times.

    Sizes of zero or below come back as empty (valid) matrices.
    """
    if pole == INF:
        m = profile.r_inf - 3
        col = [chart.time(INF, profile.r_inf - 1 - d) for d in range(max(m, 0))]
    else:
        r = profile.finite[pole].r
        m = r - 1
        col = [chart.time(pole, r - 1 - d) for d in range(max(m, 0))]
    return LowerToeplitz(np.array(col, dtype=complex))


def toeplitz_solve(M: LowerToeplitz, b: np.ndarray) -> np.ndarray:
    """Forward substitution; exact for the triangular structure."""
    b = np.asarray(b, dtype=complex)
    if M.size != b.size:
        raise ValueError("shape mismatch")
    if M.size == 0:
        return b.copy()
    c = M.first_column
    if c[0] == 0.0:
        raise SingularMatrixError("leading Toeplitz coefficient vanishes")
    x = np.zeros_like(b)
    for i in range(b.size):
        x[i] = (b[i] - np.dot(c[1: i + 1], x[i - 1:: -1][: i])) / c[0]
    return x


@dataclass
class VandermondeStack:
    """Stacked interpolation blocks at nodes q: powers at infinity, inverse
    powers at each finite pole.  Assembles a g x g matrix when the profile
    genus matches the node count."""

    nodes: np.ndarray
    profile: PoleProfile
    condition: float = field(default=0.0, init=False)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=complex)

    def dense(self) -> np.ndarray:
        q = self.nodes
        rows = []
        for i in range(max(self.profile.r_inf - 3, 0)):
            rows.append(q ** i)
        for s, p in enumerate(self.profile.finite):
            for k in range(1, p.r + 1):
                rows.append((q - p.x) ** (-k))
        return np.array(rows, dtype=complex)


def vandermonde_solve(stack: VandermondeStack, rhs: np.ndarray,
                      transposed: bool = False) -> np.ndarray:
    """Dense pivoted solve of the stacked system (transposed on request).

    Attaches a condition estimate to the stack; coincident nodes raise.
    """
    q = stack.nodes
    scale = max(1.0, float(np.max(np.abs(q))) if q.size else 1.0)
    for i in range(q.size):
        for j in range(i + 1, q.size):
            if abs(q[i] - q[j]) < 1e-10 * scale:
                raise DegenerateNodesError("coincident interpolation nodes")
        for p in stack.profile.finite:
            if abs(q[i] - p.x) < 1e-10 * scale:
                raise DegenerateNodesError("node collides with a pole")
    A = stack.dense()
    if transposed:
        A = A.T
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"stacked system is {A.shape}, not square")
    stack.condition = float(np.linalg.cond(A))
    try:
        return np.linalg.solve(A, np.asarray(rhs, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
