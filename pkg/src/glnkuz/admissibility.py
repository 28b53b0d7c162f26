"""The unipotent character at scale X and the exact admissibility calculus.

Admissibility of a modulus c (relative to an element w and a pair of index
vectors) is the statement that two characters of the cell w^{-1} N w \\cap N
agree.  Both sides are linear in each cell coordinate, so agreement is
decided exactly by matching the coefficient of every basis coordinate; no
group elements are ever sampled.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction

from .groups import (
    BlockWeylElement,
    block_antidiagonal_composition,
    index_diagonal_values,
    modulus_diagonal_values,
)
from .matrices import ExactMatrix, as_fraction


@dataclass(frozen=True)
class CharacterSpec:
    """Character of the upper unipotent group: e(X * sum of superdiagonal entries)."""

    n: int
    X: Fraction

    def __post_init__(self):
        X = as_fraction(self.X)
        if not X > 0:
            raise ValueError("frequency scale must be positive")
        object.__setattr__(self, "X", X)


def character_phase(spec: CharacterSpec, x: ExactMatrix) -> Fraction:
    """The exact phase (in full turns) of the character at x."""
    if x.n != spec.n:
        raise ValueError("dimension mismatch")
    if not x.is_upper_unipotent():
        raise ValueError("character is defined on upper unipotent elements only")
    return spec.X * sum(x.superdiagonal(), Fraction(0))


def character_value(spec: CharacterSpec, x: ExactMatrix) -> complex:
    """exp(2 pi i * phase); the phase is reduced mod 1 exactly before the
    transcendental step."""
    phase = character_phase(spec, x)
    return cmath.exp(2j * cmath.pi * float(phase - int(phase)))


def index_multipliers(m) -> list:
    """Per-superdiagonal conjugation coefficients of the index diagonal:
    conjugating x by diag(m_1...m_{n-1}, ..., m_1, 1) scales the i-th
    superdiagonal entry (0-indexed) by m_{n-1-i}."""
    vals = index_diagonal_values(m)
    return [Fraction(vals[i], vals[i + 1]) for i in range(len(vals) - 1)]


def is_admissible_modulus(w: BlockWeylElement, m, n_idx, c) -> bool:
    """Exact test of the character-compatibility condition defining admissibility.

    For each coordinate (i, j) of w^{-1} N w \\cap N the conjugated character
    contributes a linear coefficient only when the image coordinate is
    superdiagonal, and the reference character only when (i, j) itself is;
    the modulus is admissible iff all coefficient pairs match.  Signs of w are
    ignored: admissibility is decided on the unsigned permutation.
    """
    n = w.n
    m = tuple(int(v) for v in m)
    n_idx = tuple(int(v) for v in n_idx)
    c = tuple(int(v) for v in c)
    if len(m) != n - 1 or len(n_idx) != n - 1 or len(c) != n - 1:
        raise ValueError("index and modulus vectors must have length n-1")
    if any(v == 0 for v in c):
        raise ValueError("modulus entries must be nonzero")

    p = w.perm
    mvals = index_diagonal_values(m)
    cvals = modulus_diagonal_values(c)
    dvals = [mv * cv for mv, cv in zip(mvals, cvals)]  # diag of m-tilde * c-star
    nvals = index_diagonal_values(n_idx)

    for i, j in w.upper_intersection_coords():
        alpha = Fraction(0)
        if p[j] == p[i] + 1:
            alpha = dvals[p[i]] / dvals[p[i] + 1]
        beta = Fraction(0)
        if j == i + 1:
            beta = nvals[i] / nvals[i + 1]
        if alpha != beta:
            return False
    return True


def admits_any_modulus(w: BlockWeylElement, m, n_idx) -> bool:
    """Whether some modulus is admissible for w, decided without a c-scan.

    The coefficient of a cell coordinate (i, j) on the conjugated side is
    nonzero exactly when p(j) = p(i) + 1, and on the reference side exactly
    when j = i + 1.  A mismatch of these two incidence patterns kills every
    modulus at once; when the patterns agree, the all-ones modulus works
    whenever the index coefficients themselves match.
    """
    p = w.perm
    for i, j in w.upper_intersection_coords():
        if (j == i + 1) != (p[j] == p[i] + 1):
            return False
    return is_admissible_modulus(w, m, n_idx, (1,) * (w.n - 1))


def corner_weyl_moduli_family(m, bound: int, n: int | None = None) -> list:
    """All moduli with max |c_i| <= bound lying in the two-parameter geometric
    family c = (r, rs, ..., r s^(n-2)) or its reverse, for positive r, s.

    The index vector must have the shape (*, 1, ..., 1, *).  Every returned
    modulus passes the exact admissibility test for the corner element.
    """
    m = tuple(int(v) for v in m)
    if n is None:
        n = len(m) + 1
    if len(m) != n - 1:
        raise ValueError("index vector length must be n-1")
    if any(v != 1 for v in m[1:-1]):
        raise ValueError("index vector must have shape (*, 1, ..., 1, *)")
    if bound < 1:
        return []

    w = _corner(n)
    found = set()
    for r in range(1, bound + 1):
        s = 1
        while r * s ** (n - 2) <= bound:
            c = tuple(r * s ** j for j in range(n - 1))
            for cand in (c, tuple(reversed(c))):
                if max(abs(v) for v in cand) <= bound:
                    found.add(cand)
            s += 1
    out = sorted(found)
    for c in out:
        if not is_admissible_modulus(w, m, m, c):
            raise AssertionError(f"family member {c} failed the exact admissibility test")
    return out


def _corner(n: int) -> BlockWeylElement:
    from .groups import corner_weyl

    return corner_weyl(n)


__all__ = [
    "CharacterSpec",
    "character_phase",
    "character_value",
    "index_multipliers",
    "is_admissible_modulus",
    "admits_any_modulus",
    "corner_weyl_moduli_family",
    "block_antidiagonal_composition",
]
