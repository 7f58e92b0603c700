"""Deterministic point sets on the box [-1, 1]^n.

Two families are provided: the uniform interior mesh with M points per
axis, and the unscrambled Sobol (LP_tau) sequence. Sobol points are
generated by absolute index, the i-th point being the XOR of the direction
numbers selected by the bits of gray(i) = i ^ (i >> 1). That ordering is the
usual Gray-code ordering and lets any index range be regenerated without
replaying the stream.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BudgetExceededError, DimensionCapacityError
from .sampling import BLOCK_SIZE

MESH_GUARD = 10**9
SOBOL_BITS = 32

# Joe-Kuo direction numbers for dimensions 2..21: (degree s, coefficient a, initial m_1..m_s).
# Dimension 1 is the van der Corput sequence (all m_k = 1).
_JOE_KUO = [
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
    (4, 4, (1, 3, 5, 13)),
    (5, 2, (1, 1, 5, 5, 17)),
    (5, 4, (1, 1, 5, 5, 5)),
    (5, 7, (1, 1, 7, 11, 19)),
    (5, 11, (1, 1, 5, 1, 1)),
    (5, 13, (1, 1, 1, 3, 11)),
    (5, 14, (1, 3, 5, 5, 31)),
    (6, 1, (1, 3, 3, 9, 7, 49)),
    (6, 13, (1, 1, 1, 15, 21, 21)),
    (6, 16, (1, 3, 1, 13, 27, 49)),
    (6, 19, (1, 1, 1, 15, 7, 5)),
    (6, 22, (1, 3, 1, 15, 13, 25)),
    (6, 25, (1, 1, 5, 5, 19, 61)),
    (7, 1, (1, 3, 7, 11, 23, 15, 103)),
    (7, 4, (1, 3, 7, 13, 13, 15, 69)),
]
SOBOL_MAX_DIM = len(_JOE_KUO) + 1


@functools.lru_cache(maxsize=None)
def _direction_numbers(n: int) -> np.ndarray:
    """(n, SOBOL_BITS) array of 32-bit direction integers v_k = m_k 2^(31-k)."""
    v = np.zeros((n, SOBOL_BITS), dtype=np.uint64)
    v[0] = [1 << (SOBOL_BITS - 1 - k) for k in range(SOBOL_BITS)]
    for d in range(1, n):
        s, a, m = _JOE_KUO[d - 1]
        row = [mk << (SOBOL_BITS - 1 - k) for k, mk in enumerate(m)]
        for k in range(s, SOBOL_BITS):
            val = row[k - s] ^ (row[k - s] >> s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    val ^= row[k - i]
            row.append(val)
        v[d] = row
    v.flags.writeable = False
    return v


@dataclass(frozen=True)
class UniformMesh:
    n: int
    points_per_axis: int

    def __post_init__(self):
        if self.n < 1 or self.points_per_axis < 1:
            raise ValueError("mesh needs n >= 1 and M >= 1")

    @property
    def cell_size(self) -> float:
        return 2.0 / (self.points_per_axis + 1)

    @property
    def cardinality(self) -> int:
        return self.points_per_axis**self.n

    def axis(self) -> np.ndarray:
        m = self.points_per_axis
        return -1.0 + self.cell_size * np.arange(1, m + 1)

    def max_sum(self) -> float:
        """Largest value of sum(x) over the mesh, attained at the top corner point."""
        return self.n * (1.0 - self.cell_size)


def mesh_from_budget(n: int, budget: int) -> UniformMesh:
    """Mesh with M = ceil(N^(1/n)) points per axis, so that M^n >= N."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    m = max(1, round(budget ** (1.0 / n)))
    # fix up float error in the root with exact integer powers
    while m**n < budget:
        m += 1
    while m > 1 and (m - 1) ** n >= budget:
        m -= 1
    return UniformMesh(n, m)


def mesh_iterate(mesh: UniformMesh, sink: Callable[[np.ndarray], None], block_size: int = BLOCK_SIZE,
                 guard: int = MESH_GUARD) -> None:
    """Feed every mesh point to ``sink`` in lexicographic order, in blocks."""
    total = mesh.cardinality
    if total > guard:
        raise BudgetExceededError(f"mesh has {total} points, above the guard {guard}")
    axis = mesh.axis()
    m = mesh.points_per_axis
    for start in range(0, total, block_size):
        flat = np.arange(start, min(start + block_size, total), dtype=np.int64)
        digits = np.empty((flat.size, mesh.n), dtype=np.int64)
        for j in range(mesh.n - 1, -1, -1):
            flat, digits[:, j] = np.divmod(flat, m)
        sink(axis[digits])


@dataclass(frozen=True)
class SobolSpec:
    n: int
    length: int
    skip: int = 1
    leap: int = 1

    def __post_init__(self):
        if not 1 <= self.n <= SOBOL_MAX_DIM:
            raise DimensionCapacityError(f"Sobol tables cover 1..{SOBOL_MAX_DIM} dimensions, got {self.n}")
        if self.skip < 0 or self.leap < 1 or self.length < 0:
            raise ValueError("need skip >= 0, leap >= 1, length >= 0")
        if self.skip + self.leap * max(self.length - 1, 0) >= 2**SOBOL_BITS:
            raise BudgetExceededError(f"Sobol index range exceeds 2^{SOBOL_BITS}")

    def indices(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        stop = self.length if stop is None else stop
        return self.skip + self.leap * np.arange(start, stop, dtype=np.uint64)


def sobol_points(n: int, indices) -> np.ndarray:
    """Raw Sobol points in [0, 1)^n for the given absolute (Gray-code order) indices."""
    if not 1 <= n <= SOBOL_MAX_DIM:
        raise DimensionCapacityError(f"Sobol tables cover 1..{SOBOL_MAX_DIM} dimensions, got {n}")
    idx = np.asarray(indices, dtype=np.uint64).ravel()
    if idx.size and int(idx.max()) >= 2**SOBOL_BITS:
        raise BudgetExceededError(f"Sobol index exceeds 2^{SOBOL_BITS}")
    v = _direction_numbers(n)
    gray = idx ^ (idx >> np.uint64(1))
    acc = np.zeros((idx.size, n), dtype=np.uint64)
    for k in range(SOBOL_BITS):
        bit = ((gray >> np.uint64(k)) & np.uint64(1)).astype(bool)
        if not bit.any():
            continue
        acc[bit] ^= v[:, k]
    return acc.astype(float) * 2.0**-SOBOL_BITS


def sobol_generate(spec: SobolSpec, sink: Callable[[np.ndarray], None], block_size: int = BLOCK_SIZE) -> None:
    """Feed the selected Sobol points, mapped by u -> 2u - 1 onto [-1, 1]^n, to ``sink``."""
    for start in range(0, spec.length, block_size):
        stop = min(start + block_size, spec.length)
        sink(2.0 * sobol_points(spec.n, spec.indices(start, stop)) - 1.0)


def sobol_max_sum(spec: SobolSpec) -> float:
    best = -math.inf
    def keep(block):
        nonlocal best
        best = max(best, float(block.sum(axis=1).max()))
    sobol_generate(spec, keep)
    return best
