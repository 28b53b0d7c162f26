"""Kloosterman sums by exact enumeration of Bruhat-cell double cosets.

A cell element with monomial part M = (modulus diagonal) * (signed Weyl
matrix) factors as gamma = x M y with x upper unipotent and y in the
w-side unipotent cell.  Left multiplication by integral upper unipotents
reduces every x coordinate into [0, 1), and right multiplication by integral
cell unipotents does the same for y, so each double coset has exactly one
canonical representative.  The enumeration walks the columns of gamma:
integrality of each entry confines the corresponding canonical coordinate to
an explicit finite window, so the search is complete -- no height truncation
is involved and results are exact.

Values are reported together with the exact rational phase list, enabling
exact downstream checks; the floating sum is just their exponential sum.

Sign conventions: the enumeration matches the monomial part of gamma against
M exactly, with the signed Weyl representative fixed (determinant +1 for the
canonical constructors).  In even dimension the center of the integral group
identifies the modulus c with its central flip, whose diagonal is -c*; each
double-coset class is attributed to the representative with positive first
entry, and the sum for the other representative is zero by convention.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .admissibility import index_multipliers, is_admissible_modulus
from .groups import BlockWeylElement, bruhat_decompose, modulus_diagonal_values
from .matrices import ExactMatrix


@dataclass(frozen=True)
class KloostermanResult:
    value: complex
    term_count: int
    height_bound: int
    stabilized: bool
    phases: tuple
    reason: str | None = None


@dataclass(frozen=True)
class TrivialBoundMargin:
    ratio: float
    threshold: float
    flagged: bool


def _integer_window(sigma: Fraction, step: Fraction):
    """Integers g with (g - sigma)/step in [0, 1)."""
    if step > 0:
        return range(math.ceil(sigma), math.ceil(sigma + step))
    return range(math.floor(sigma + step) + 1, math.floor(sigma) + 1)


@lru_cache(maxsize=4096)
def _cell_representatives(n, perm, signs, c, max_reps):
    """Canonical double-coset representatives of the (w, c) cell.

    Returns a tuple of (x_superdiagonal, y_superdiagonal) coordinate tuples,
    one per integral cell element with monomial part exactly c* w.
    """
    evals = modulus_diagonal_values(c)
    mcol = [evals[perm[j]] * signs[j] for j in range(n)]
    supp = {j: [k for k in range(j) if perm[k] > perm[j]] for j in range(n)}
    row_to_supp = [
        {perm[k]: k for k in supp[j]} for j in range(n)
    ]  # per column: pivot row of each mixing column

    x = [[Fraction(int(i == l)) for l in range(n)] for i in range(n)]
    xm = [[Fraction(0)] * n for _ in range(n)]  # xm[j][i] once column j is done
    yval = {}
    reps = []

    def finish_column(j):
        col = xm[j]
        pj = perm[j]
        for i in range(pj):
            col[i] = mcol[j] * x[i][pj]
        col[pj] = mcol[j]
        for i in range(pj + 1, n):
            col[i] = Fraction(0)

    def walk_rows(j, i, resolved):
        if i < 0:
            finish_column(j)
            walk_columns(j + 1)
            return
        pj = perm[j]
        contrib = Fraction(0)
        for k in resolved:
            contrib += yval[(k, j)] * xm[k][i]
        if i > pj:
            k = row_to_supp[j].get(i)
            if k is not None:
                for g in _integer_window(contrib, mcol[k]):
                    yval[(k, j)] = (g - contrib) / mcol[k]
                    walk_rows(j, i - 1, resolved + (k,))
                    del yval[(k, j)]
            else:
                if contrib.denominator == 1:
                    walk_rows(j, i - 1, resolved)
        elif i == pj:
            if (mcol[j] + contrib).denominator == 1:
                walk_rows(j, i - 1, resolved)
        else:
            for g in _integer_window(contrib, mcol[j]):
                x[i][pj] = (g - contrib) / mcol[j]
                walk_rows(j, i - 1, resolved)
            x[i][pj] = Fraction(int(i == pj))

    def walk_columns(j):
        if j == n:
            if len(reps) >= max_reps:
                raise RuntimeError(
                    "cell enumeration exceeded the representative cap "
                    f"({max_reps}); the modulus is too large for exact summation"
                )
            xsuper = tuple(x[i][i + 1] for i in range(n - 1))
            ysuper = tuple(yval.get((i, i + 1), Fraction(0)) for i in range(n - 1))
            reps.append((xsuper, ysuper))
            return
        walk_rows(j, n - 1, ())

    walk_columns(0)
    return tuple(reps)


def kloosterman_sum(
    w: BlockWeylElement,
    m,
    n_idx,
    c,
    height_bound: int | None = None,
    conjugate: bool = False,
    max_reps: int = 2_000_000,
) -> KloostermanResult:
    """Exact Kloosterman sum for the cell of w at modulus c.

    Inadmissible moduli give the zero sum with zero terms, matching the
    vanishing convention.  In even dimension, moduli with negative first entry
    are identified with their central flip and yield zero here (the flip with
    positive first entry carries the class).  ``conjugate=True`` evaluates the
    complex-conjugate character on both sides, which negates every phase.
    """
    n = w.n
    m = tuple(int(v) for v in m)
    n_idx = tuple(int(v) for v in n_idx)
    c = tuple(int(v) for v in c)
    if len(c) != n - 1 or any(v == 0 for v in c):
        raise ValueError("modulus must be n-1 nonzero integers")
    cmax = max(abs(v) for v in c)
    if height_bound is None:
        height_bound = 4 * cmax * cmax
    if height_bound < cmax:
        raise ValueError("height bound must be at least max |c_i|")

    def zero(reason):
        return KloostermanResult(0j, 0, height_bound, True, (), reason)

    if not is_admissible_modulus(w, m, n_idx, c):
        return zero("inadmissible modulus")
    if n % 2 == 0 and c[0] < 0:
        return zero("non-canonical central sign; class carried by the flipped modulus")

    reps = _cell_representatives(n, w.perm, w.signs, c, max_reps)
    mmult = index_multipliers(m)
    nmult = index_multipliers(n_idx)
    sign = -1 if conjugate else 1
    phases = []
    for xsuper, ysuper in reps:
        ph = Fraction(0)
        for i in range(n - 1):
            ph += mmult[i] * xsuper[i] + nmult[i] * ysuper[i]
        ph = sign * ph
        phases.append(ph - math.floor(ph))
    value = sum(
        (cmath.exp(2j * cmath.pi * float(ph)) for ph in phases), start=0j
    )
    return KloostermanResult(value, len(reps), height_bound, True, tuple(phases))


def classical_kloosterman(m: int, nv: int, c: int) -> complex:
    """Residue-sum oracle: sum of e((m x + nv x^{-1})/c) over units mod c."""
    if c < 1:
        raise ValueError("modulus must be a positive integer")
    total = 0j
    for x in range(c):
        if math.gcd(x, c) != 1:
            continue
        xbar = pow(x, -1, c)
        ph = Fraction(m * x + nv * xbar, c)
        ph -= math.floor(ph)
        total += cmath.exp(2j * cmath.pi * float(ph))
    return total


def divisor_count(v: int) -> int:
    v = abs(v)
    count, d = 0, 1
    while d * d <= v:
        if v % d == 0:
            count += 1 if d * d == v else 2
        d += 1
    return count


def trivial_bound_margin(res: KloostermanResult, c) -> TrivialBoundMargin:
    """|value| / |c_1 ... c_{n-1}|, flagged when it exceeds four times the
    divisor count of the modulus product (a concrete heuristic envelope for
    the sub-polynomial trivial bound, not a theorem)."""
    prod = 1
    for v in c:
        prod *= int(v)
    prod = abs(prod)
    ratio = abs(res.value) / prod
    threshold = 4.0 * divisor_count(prod)
    return TrivialBoundMargin(ratio, threshold, ratio > threshold)


# ---------------------------------------------------------------------------
# Canonical representatives of explicit matrices (used by soundness tests)
# ---------------------------------------------------------------------------


def canonical_double_coset(gamma: ExactMatrix, w: BlockWeylElement) -> ExactMatrix:
    """The unique representative of the double coset of gamma whose x and y
    coordinates all lie in [0, 1)."""
    n = gamma.n
    x, t, wd, y = bruhat_decompose(gamma)
    if wd.perm != w.perm:
        raise ValueError("element does not lie in the requested cell")
    for d in range(1, n):
        for i in range(n - d):
            l = i + d
            k = math.floor(x[i, l])
            if k:
                x = ExactMatrix.from_entries(n, {(i, l): -k}) * x
    coords = sorted(w.lower_intersection_coords(), key=lambda ij: ij[1] - ij[0])
    for k_, j in coords:
        f = math.floor(y[k_, j])
        if f:
            y = y * ExactMatrix.from_entries(n, {(k_, j): -f})
    return x * t * wd.matrix() * y
