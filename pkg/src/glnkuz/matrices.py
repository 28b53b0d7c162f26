"""Exact rational matrices.

Every structural identity in this package (determinant-one modulus
diagonals, cell decompositions, box membership at rational scale) must hold
exactly, so the carrier is a dense matrix of ``fractions.Fraction`` entries.
Floating point never enters here; numeric work lives in the Monte-Carlo
modules, which convert explicitly via :meth:`ExactMatrix.to_float`.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def as_fraction(v) -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings; refuse floats outright."""
    if isinstance(v, float):
        raise TypeError(f"refusing float entry {v!r}; pass Fraction, int or 'p/q' string")
    return Fraction(v)


def rationalize(v) -> Fraction:
    """Explicit float-to-rational conversion at a module boundary.

    Floats convert to their exact binary value, so downstream comparisons
    remain exact statements about the value actually supplied.
    """
    return Fraction(v)


class ExactMatrix:
    """Immutable square matrix over the rationals."""

    __slots__ = ("n", "rows")

    def __init__(self, rows):
        rows = tuple(tuple(as_fraction(v) for v in row) for row in rows)
        n = len(rows)
        if n < 2 or any(len(r) != n for r in rows):
            raise ValueError("need a square array of entries with dimension >= 2")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "rows", rows)

    def __setattr__(self, *a):
        raise AttributeError("ExactMatrix is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def diagonal(cls, values) -> "ExactMatrix":
        values = [as_fraction(v) for v in values]
        n = len(values)
        return cls([[values[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def from_entries(cls, n: int, entries) -> "ExactMatrix":
        """Build from a dict {(i, j): value} on top of the identity."""
        rows = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        for (i, j), v in entries.items():
            rows[i][j] = as_fraction(v)
        return cls(rows)

    # -- accessors ---------------------------------------------------------

    def __getitem__(self, ij) -> Fraction:
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other) -> bool:
        return isinstance(other, ExactMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        body = "; ".join(" ".join(str(v) for v in row) for row in self.rows)
        return f"ExactMatrix[{body}]"

    def diag(self):
        return tuple(self.rows[i][i] for i in range(self.n))

    # -- arithmetic --------------------------------------------------------

    def __mul__(self, other: "ExactMatrix") -> "ExactMatrix":
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        a, b, n = self.rows, other.rows, self.n
        return ExactMatrix(
            [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        )

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return ExactMatrix(
            [[self.rows[i][j] - other.rows[i][j] for j in range(self.n)] for i in range(self.n)]
        )

    def scaled(self, factor) -> "ExactMatrix":
        f = as_fraction(factor)
        return ExactMatrix([[f * v for v in row] for row in self.rows])

    def transpose(self) -> "ExactMatrix":
        return ExactMatrix([[self.rows[j][i] for j in range(self.n)] for i in range(self.n)])

    def det(self) -> Fraction:
        """Determinant by fraction-exact Gaussian elimination."""
        n = self.n
        m = [list(row) for row in self.rows]
        det = Fraction(1)
        for col in range(n):
            piv = next((r for r in range(col, n) if m[r][col] != 0), None)
            if piv is None:
                return Fraction(0)
            if piv != col:
                m[col], m[piv] = m[piv], m[col]
                det = -det
            det *= m[col][col]
            inv = 1 / m[col][col]
            for r in range(col + 1, n):
                if m[r][col] != 0:
                    f = m[r][col] * inv
                    for c in range(col, n):
                        m[r][c] -= f * m[col][c]
        return det

    def inverse(self) -> "ExactMatrix":
        """Exact inverse by Gauss-Jordan elimination."""
        n = self.n
        m = [list(row) for row in self.rows]
        y = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        for col in range(n):
            piv = next((r for r in range(col, n) if m[r][col] != 0), None)
            if piv is None:
                raise ValueError("matrix is singular")
            if piv != col:
                m[col], m[piv] = m[piv], m[col]
                y[col], y[piv] = y[piv], y[col]
            inv = 1 / m[col][col]
            m[col] = [v * inv for v in m[col]]
            y[col] = [v * inv for v in y[col]]
            for r in range(n):
                if r != col and m[r][col] != 0:
                    f = m[r][col]
                    m[r] = [a - f * b for a, b in zip(m[r], m[col])]
                    y[r] = [a - f * b for a, b in zip(y[r], y[col])]
        return ExactMatrix(y)

    # -- structure tests ---------------------------------------------------

    def is_diagonal(self) -> bool:
        return all(
            self.rows[i][j] == 0 for i in range(self.n) for j in range(self.n) if i != j
        )

    def is_upper_unipotent(self) -> bool:
        return all(self.rows[i][i] == 1 for i in range(self.n)) and all(
            self.rows[i][j] == 0 for i in range(self.n) for j in range(i)
        )

    def is_lower_unipotent(self) -> bool:
        return all(self.rows[i][i] == 1 for i in range(self.n)) and all(
            self.rows[i][j] == 0 for i in range(self.n) for j in range(i + 1, self.n)
        )

    def sup_distance_to_identity(self) -> Fraction:
        return max(
            abs(self.rows[i][j] - (1 if i == j else 0))
            for i in range(self.n)
            for j in range(self.n)
        )

    def superdiagonal(self):
        return tuple(self.rows[i][i + 1] for i in range(self.n - 1))

    # -- conversion --------------------------------------------------------

    def to_float(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.rows], dtype=float)

    def to_json_obj(self):
        """Array-of-arrays of 'p/q' strings; dimension is implied."""
        return [[str(v) for v in row] for row in self.rows]

    @classmethod
    def from_json_obj(cls, obj) -> "ExactMatrix":
        return cls(obj)
