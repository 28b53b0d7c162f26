"""Structural group elements: signed Weyl elements, modulus/index diagonals,
the scale torus, box neighborhoods and exact Bruhat decomposition.

Conventions
-----------
A signed Weyl element ``w`` is stored by its column data: column ``j`` of the
matrix carries its single nonzero entry ``signs[j]`` in row ``perm[j]``.
Canonical representatives are chosen with determinant +1 (one sign on the
top-right entry when the unsigned permutation is odd), which reproduces the
classical cell representatives for n = 2.

A box neighborhood is the set ``{g : ||g - I||_inf < tau/X}``; its sharp
variant is the conjugate by the scale torus, so membership of ``g`` in the
sharp box means ``||a g a^{-1} - I||_inf < tau/X`` where ``a`` is the scale
diagonal.  Under this convention the entry at (i, j) is rescaled by
``X^(i-j)``: superdiagonal directions widen, subdiagonal directions tighten,
and the sharp box intersected with the upper unipotent group has the closed
form volume implemented in :func:`unipotent_box_volume`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .matrices import ExactMatrix, as_fraction


# ---------------------------------------------------------------------------
# Weyl elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockWeylElement:
    """Signed permutation matrix, with block-antidiagonal composition when present."""

    n: int
    perm: tuple
    signs: tuple
    composition: tuple | None = None

    def __post_init__(self):
        n = self.n
        if n < 2:
            raise ValueError("dimension must be >= 2")
        if sorted(self.perm) != list(range(n)):
            raise ValueError(f"perm {self.perm} is not a permutation of 0..{n - 1}")
        if len(self.signs) != n or any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be a tuple of +1/-1, one per column")
        comp = block_antidiagonal_composition_of_perm(self.perm)
        if self.composition is not None:
            if tuple(self.composition) != comp:
                raise ValueError(
                    f"declared composition {self.composition} does not match the "
                    f"block-antidiagonal form of the permutation ({comp})"
                )
        else:
            object.__setattr__(self, "composition", comp)

    # -- derived data ------------------------------------------------------

    def matrix(self) -> ExactMatrix:
        entries = {(self.perm[j], j): self.signs[j] for j in range(self.n)}
        rows = [[0] * self.n for _ in range(self.n)]
        for (i, j), s in entries.items():
            rows[i][j] = s
        return ExactMatrix(rows)

    def unsigned(self) -> "BlockWeylElement":
        return BlockWeylElement(self.n, self.perm, (1,) * self.n)

    def inverse_perm(self) -> tuple:
        inv = [0] * self.n
        for j, i in enumerate(self.perm):
            inv[i] = j
        return tuple(inv)

    def det(self) -> int:
        sign = 1
        p = self.perm
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if p[i] > p[j]:
                    sign = -sign
        for s in self.signs:
            sign *= s
        return sign

    def lower_intersection_coords(self):
        """Coordinates (i, j), i < j, spanning w^{-1} N^T w intersected with N."""
        p = self.perm
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n) if p[i] > p[j]]

    def upper_intersection_coords(self):
        """Coordinates (i, j), i < j, spanning w^{-1} N w intersected with N."""
        p = self.perm
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n) if p[i] < p[j]]


def block_antidiagonal_composition_of_perm(perm) -> tuple | None:
    """Composition (d_1, ..., d_k) when perm is the block-antidiagonal identity
    arrangement (block 1 in the top-right corner), else None."""
    n = len(perm)
    blocks_bottom_up = []
    cstart, rend = 0, n
    while cstart < n:
        d = rend - perm[cstart]
        if d < 1:
            return None
        if any(cstart + t >= n or perm[cstart + t] != rend - d + t for t in range(d)):
            return None
        blocks_bottom_up.append(d)
        cstart += d
        rend -= d
    return tuple(reversed(blocks_bottom_up))


def block_antidiagonal_composition(w: BlockWeylElement) -> tuple | None:
    """The composition of the unsigned permutation, or None if not block form."""
    return block_antidiagonal_composition_of_perm(w.perm)


def _det_fix_signs(n: int, perm) -> tuple:
    """All +1 except possibly the top-right column, chosen so the det is +1."""
    sign = 1
    for i in range(n):
        for j in range(i + 1, n):
            if perm[i] > perm[j]:
                sign = -sign
    signs = [1] * n
    if sign < 0:
        top_right_col = perm.index(0)
        signs[top_right_col] = -1
    return tuple(signs)


def identity_weyl(n: int) -> BlockWeylElement:
    return BlockWeylElement(n, tuple(range(n)), (1,) * n)


def long_weyl(n: int) -> BlockWeylElement:
    """Full antidiagonal element, signed to land in the determinant-one class."""
    perm = tuple(n - 1 - j for j in range(n))
    return BlockWeylElement(n, perm, _det_fix_signs(n, perm))


def corner_weyl(n: int) -> BlockWeylElement:
    """The composition (1, n-2, 1) element: swaps the two outer coordinates
    (with one sign making the determinant +1) and fixes the middle block."""
    perm = tuple([n - 1] + list(range(1, n - 1)) + [0])
    signs = [1] * n
    signs[n - 1] = -1
    return BlockWeylElement(n, perm, tuple(signs))


def weyl_from_composition(composition) -> BlockWeylElement:
    """Block-antidiagonal element for a composition, det-normalized to +1."""
    composition = tuple(int(d) for d in composition)
    if any(d < 1 for d in composition):
        raise ValueError("composition parts must be positive")
    n = sum(composition)
    perm = [0] * n
    rstart = 0
    for i, d in enumerate(composition):
        cstart = n - sum(composition[: i + 1])
        for t in range(d):
            perm[cstart + t] = rstart + t
        rstart += d
    perm = tuple(perm)
    return BlockWeylElement(n, perm, _det_fix_signs(n, perm))


def all_block_weyls(n: int):
    """The 2^(n-1) block-antidiagonal elements, one per composition of n."""
    out = []
    for bits in itertools.product((0, 1), repeat=n - 1):
        comp, run = [], 1
        for b in bits:
            if b:
                comp.append(run)
                run = 1
            else:
                run += 1
        comp.append(run)
        out.append(weyl_from_composition(comp))
    return out


# ---------------------------------------------------------------------------
# Modulus and index data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModulusAndIndex:
    """The pair (m, c): an index vector of n-1 positive integers and a modulus
    vector of n-1 nonzero integers, with the convention c_0 = c_n = 1."""

    n: int
    m: tuple
    c: tuple

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be >= 2")
        m = tuple(int(v) for v in self.m)
        c = tuple(int(v) for v in self.c)
        if len(m) != self.n - 1 or any(v < 1 for v in m):
            raise ValueError("index entries must be n-1 positive integers")
        if len(c) != self.n - 1 or any(v == 0 for v in c):
            raise ValueError("modulus entries must be n-1 nonzero integers")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "c", c)


def index_diagonal(mi: ModulusAndIndex) -> ExactMatrix:
    """diag(m_1...m_{n-1}, m_1...m_{n-2}, ..., m_1, 1) for the index vector."""
    return ExactMatrix.diagonal(index_diagonal_values(mi.m))


def index_diagonal_values(m) -> list:
    n = len(m) + 1
    vals = []
    for i in range(n):
        prod = Fraction(1)
        for k in range(n - 1 - i):
            prod *= m[k]
        vals.append(prod)
    return vals


def modulus_diagonal(mi: ModulusAndIndex) -> ExactMatrix:
    """diag(1/c_{n-1}, c_{n-1}/c_{n-2}, ..., c_2/c_1, c_1); determinant one."""
    return ExactMatrix.diagonal(modulus_diagonal_values(mi.c))


def modulus_diagonal_values(c) -> list:
    n = len(c) + 1
    ext = (1,) + tuple(c) + (1,)  # ext[k] = c_k with c_0 = c_n = 1
    return [Fraction(ext[n - a], ext[n - 1 - a]) for a in range(n)]


def central_flip(c) -> tuple:
    """The modulus whose diagonal is the negative of c's (even n only)."""
    if (len(c) + 1) % 2 != 0:
        raise ValueError("central flip exists only in even dimension")
    return tuple(-v if j % 2 == 0 else v for j, v in enumerate(c))


# ---------------------------------------------------------------------------
# Scale torus and box neighborhoods
# ---------------------------------------------------------------------------


def scale_diagonal(n: int, X) -> ExactMatrix:
    """diag(X^(1-n), X^(2-n), ..., X^(-1), 1)."""
    X = as_fraction(X)
    return ExactMatrix.diagonal([X ** (i - (n - 1)) for i in range(n)])


@dataclass(frozen=True)
class BoxNeighborhood:
    """Sup-norm box around the identity at radius tau/X, optionally conjugated
    by the scale torus (sharp) and/or taken modulo positive scalars."""

    n: int
    X: Fraction
    tau: Fraction
    sharp: bool = False
    mod_center: bool = False

    def __post_init__(self):
        X, tau = as_fraction(self.X), as_fraction(self.tau)
        if not X > 1:
            raise ValueError("scale X must exceed 1")
        if not (0 < tau < 1):
            raise ValueError("radius factor tau must lie in (0, 1)")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "tau", tau)

    @property
    def threshold(self) -> Fraction:
        return self.tau / self.X


def in_box(g: ExactMatrix, box: BoxNeighborhood) -> bool:
    """Exact membership test; for mod_center the scalar search is an interval
    intersection, never a numeric sweep."""
    if g.n != box.n:
        raise ValueError("dimension mismatch")
    t = box.threshold
    if box.sharp:
        X = box.X
        h = ExactMatrix(
            [
                [g[i, j] * X ** (i - j) for j in range(g.n)]
                for i in range(g.n)
            ]
        )
    else:
        h = g
    if not box.mod_center:
        return h.sup_distance_to_identity() < t

    # Each entry constraint |z*h_ij - delta_ij| < t is an open interval in the
    # positive scalar z; membership holds iff the intersection is nonempty.
    lo, hi = Fraction(0), None
    for i in range(h.n):
        for j in range(h.n):
            v = h[i, j]
            if i == j:
                if v <= 0:
                    return False
                lo = max(lo, (1 - t) / v)
                hi = (1 + t) / v if hi is None else min(hi, (1 + t) / v)
            elif v != 0:
                bound = t / abs(v)
                hi = bound if hi is None else min(hi, bound)
    return hi is None or lo < hi


def unipotent_box_volume(n: int, X, tau) -> Fraction:
    """Lebesgue volume of the sharp box intersected with the upper unipotent
    group: (2 tau)^(n(n-1)/2) * X^(n(n-1)(n-2)/6).

    Entry (i, j) of the sharp box allows |x_ij| < tau * X^(j-i-1); the X
    exponent is the sum of j-i-1 over i < j.
    """
    X, tau = as_fraction(X), as_fraction(tau)
    return (2 * tau) ** (n * (n - 1) // 2) * X ** (n * (n - 1) * (n - 2) // 6)


# ---------------------------------------------------------------------------
# Bruhat decomposition
# ---------------------------------------------------------------------------


def bruhat_decompose(g: ExactMatrix):
    """Exact decomposition g = x * t * w * y.

    x is upper unipotent, t diagonal (carrying all signs), w an unsigned
    permutation element, and y upper unipotent with w y w^{-1} lower
    triangular.  The permutation is fixed by the leftmost-lowest nonzero
    pivot rule, which is unambiguous for invertible input.
    """
    n = g.n
    a = [list(row) for row in g.rows]
    xinv_ops = []  # (i, k, f): row_i -= f * row_k, i < k
    y_ops = []  # (jp, j, f): col_j -= f * col_jp, jp < j
    perm = [None] * n
    used = [False] * n
    pivot_col_of_row = {}

    for j in range(n):
        piv = next((i for i in range(n - 1, -1, -1) if not used[i] and a[i][j] != 0), None)
        if piv is None:
            raise ValueError("matrix is singular")
        perm[j] = piv
        # unused rows above the pivot: clear with row operations
        for i in range(piv):
            if not used[i] and a[i][j] != 0:
                f = a[i][j] / a[piv][j]
                for c in range(j, n):
                    a[i][c] -= f * a[piv][c]
                xinv_ops.append((i, piv, f))
        # used rows: below the pivot clear by column ops (their pivot column is
        # earlier), above the pivot clear by row ops against the new pivot row
        for i in range(n):
            if used[i] and a[i][j] != 0:
                if i > piv:
                    jp = pivot_col_of_row[i]
                    f = a[i][j] / a[i][jp]
                    for r in range(n):
                        a[r][j] -= f * a[r][jp]
                    y_ops.append((jp, j, f))
                else:
                    f = a[i][j] / a[piv][j]
                    for c in range(j, n):
                        a[i][c] -= f * a[piv][c]
                    xinv_ops.append((i, piv, f))
        used[piv] = True
        pivot_col_of_row[piv] = j

    perm = tuple(perm)
    w = BlockWeylElement(n, perm, (1,) * n)
    diag_vals = [Fraction(0)] * n
    for j in range(n):
        diag_vals[perm[j]] = a[perm[j]][j]
    t = ExactMatrix.diagonal(diag_vals)

    # The eliminations computed (L_m ... L_1) g (R_1 ... R_m) = t * w, so
    # x inverts the row operations in application order and y inverts the
    # column operations in reverse application order.
    x = ExactMatrix.identity(n)
    for i, k, f in xinv_ops:
        x = x * ExactMatrix.from_entries(n, {(i, k): f})
    y = ExactMatrix.identity(n)
    for jp, j, f in reversed(y_ops):
        y = y * ExactMatrix.from_entries(n, {(jp, j): f})
    return x, t, w, y


def conjugation_jacobian(w: BlockWeylElement, a: ExactMatrix) -> Fraction:
    """Jacobian of x -> a x a^{-1} on the w-side unipotent cell: the product of
    |a_i / a_j| over the coordinates (i, j) spanning that cell."""
    if not a.is_diagonal():
        raise ValueError("conjugating element must be diagonal")
    if any(a[i, i] == 0 for i in range(a.n)):
        raise ValueError("conjugating element must be invertible")
    out = Fraction(1)
    for i, j in w.lower_intersection_coords():
        out *= abs(a[i, i] / a[j, j])
    return out
