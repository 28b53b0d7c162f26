"""Satake-parameter arithmetic for density counting on synthetic data.

Hecke eigenvalues at prime-power indices are realized as complete homogeneous
symmetric polynomials of the Satake numbers alpha_i = p^(-mu_i); this is the
one external mathematical identification the module relies on.  The main
evaluation path runs the elementary/complete recursion; an independent
power-sum recursion is exposed for cross-checking.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

_UNITARITY_TOL = 1e-9


@dataclass(frozen=True)
class SatakeParams:
    """Local parameter multiset mu at a prime p, with alpha_i = p^(-mu_i).

    Invariants: the mu-sum is purely imaginary (trivial central character),
    the multiset is closed under mu -> -conj(mu) (unitarity), and the largest
    real part is at most (n-1)/2.
    """

    n: int
    p: int
    mu: tuple

    def __post_init__(self):
        mu = tuple(complex(z) for z in self.mu)
        if len(mu) != self.n:
            raise ValueError("need n parameters")
        if self.p < 2:
            raise ValueError("p must be a prime >= 2")
        if abs(sum(z.real for z in mu)) > _UNITARITY_TOL:
            raise ValueError("parameter sum must be purely imaginary")
        remaining = list(mu)
        while remaining:
            z = remaining.pop()
            target = -z.conjugate()
            if abs(z - target) <= 1e-6:
                continue
            j = min(range(len(remaining)), key=lambda i: abs(remaining[i] - target), default=None)
            if j is None or abs(remaining[j] - target) > 1e-6:
                raise ValueError("multiset must be closed under mu -> -conj(mu)")
            remaining.pop(j)
        sigma = max(abs(z.real) for z in mu)
        if sigma > (self.n - 1) / 2 + _UNITARITY_TOL:
            raise ValueError("real parts exceed the trivial-representation bound")
        object.__setattr__(self, "mu", mu)

    @property
    def alpha(self) -> tuple:
        return tuple(self.p ** (-z) for z in self.mu)


def trivial_satake(n: int, p: int) -> SatakeParams:
    """Parameters of the trivial representation: mu_i = -(n+1-2i)/2."""
    return SatakeParams(n, p, tuple(-(n + 1 - 2 * i) / 2 + 0j for i in range(1, n + 1)))


def temperedness_defect(sp: SatakeParams) -> float:
    """max |Re mu_i|; zero exactly for tempered parameters."""
    return max(abs(z.real) for z in sp.mu)


def _elementary_symmetric(alpha) -> list:
    n = len(alpha)
    e = [0j] * (n + 1)
    e[0] = 1.0 + 0j
    for a in alpha:
        for k in range(n, 0, -1):
            e[k] = e[k] + a * e[k - 1]
    return e


def complete_homogeneous(alpha, k: int) -> complex:
    """h_k(alpha) from the elementary-symmetric recursion
    sum_{j=0..min(k,n)} (-1)^j e_j h_{k-j} = 0."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    n = len(alpha)
    e = _elementary_symmetric(alpha)
    h = [1.0 + 0j]
    for deg in range(1, k + 1):
        val = 0j
        for j in range(1, min(deg, n) + 1):
            val -= (-1) ** j * e[j] * h[deg - j]
        h.append(val)
    return h[k]


def complete_homogeneous_newton(alpha, k: int) -> complex:
    """Independent path: k h_k = sum_{i=1..k} p_i h_{k-i} with power sums p_i."""
    p = [0j] + [sum(a**i for a in alpha) for i in range(1, k + 1)]
    h = [1.0 + 0j]
    for deg in range(1, k + 1):
        h.append(sum(p[i] * h[deg - i] for i in range(1, deg + 1)) / deg)
    return h[k]


def hecke_eigenvalue(sp: SatakeParams, k: int) -> complex:
    """Eigenvalue at index (p^k, 1, ..., 1): the degree-k complete homogeneous
    symmetric polynomial of the Satake numbers."""
    return complete_homogeneous(sp.alpha, k)


def consecutive_hecke_bound(sp: SatakeParams, r: int, delta_n: float = 0.1):
    """Lower bound on n consecutive prime-power eigenvalues.

    Returns (lhs, rhs, holds) with lhs the sum of |lambda(p^(r-j))|^2 over
    j = 0..n-1 and rhs = 2 p^(1-n) p^(2 r sigma).  Requires r > n.  The bound
    is asserted only for parameters in the cuspidal range
    sigma <= 1/2 - delta_n; outside it ``holds`` is reported but carries no
    guarantee.
    """
    n = sp.n
    if r <= n:
        raise ValueError("the bound applies only for r > n")
    lhs = sum(abs(hecke_eigenvalue(sp, r - j)) ** 2 for j in range(n))
    sigma = temperedness_defect(sp)
    rhs = 2.0 * sp.p ** (1 - n) * sp.p ** (2 * r * sigma)
    in_range = sigma <= 0.5 - delta_n + 1e-12
    return lhs, rhs, (lhs >= rhs * (1 - 1e-9)) if in_range else True


@dataclass(frozen=True)
class SyntheticFamily:
    """Labeled list of Satake parameter sets with a family scale X."""

    entries: tuple
    X: float

    def __post_init__(self):
        labels = [label for label, _ in self.entries]
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        object.__setattr__(self, "entries", tuple(self.entries))


def rankin_count(fam: SyntheticFamily, sigma: float, X: float):
    """Count of entries with defect >= sigma and the exponential-moment bound
    X^(-2 sigma (n+2)) * sum X^(2 defect (n+2)); the count never exceeds the
    bound (Markov with exponential weights)."""
    if sigma < 0:
        raise ValueError("threshold must be nonnegative")
    count = 0
    moment = 0.0
    for _, sp in fam.entries:
        d = temperedness_defect(sp)
        if d >= sigma:
            count += 1
        moment += X ** (2 * d * (sp.n + 2))
    bound = X ** (-2 * sigma * (fam.entries[0][1].n + 2)) * moment if fam.entries else 0.0
    return count, bound


def random_satake(n: int, p: int, rng: np.random.Generator, sigma_max: float = 0.4,
                  spread: float = 2.0) -> SatakeParams:
    """Random unitary parameter set: conjugate pairs (mu, -conj(mu)) plus
    purely imaginary singletons, with real parts bounded by sigma_max."""
    mu = []
    remaining = n
    while remaining >= 2:
        if rng.random() < 0.5:
            a = rng.uniform(0, sigma_max)
            b = rng.uniform(-spread, spread)
            mu.extend([complex(a, b), complex(-a, b)])
            remaining -= 2
        else:
            mu.append(complex(0.0, rng.uniform(-spread, spread)))
            remaining -= 1
    for _ in range(remaining):
        mu.append(complex(0.0, rng.uniform(-spread, spread)))
    return SatakeParams(n, p, tuple(mu))


def random_family(n: int, p: int, size: int, X: float, rng: np.random.Generator,
                  sigma_max: float = 0.4) -> SyntheticFamily:
    entries = tuple(
        (f"pi{i}", random_satake(n, p, rng, sigma_max=sigma_max)) for i in range(size)
    )
    return SyntheticFamily(entries, X)


def crude_envelope_holds(sp: SatakeParams, k: int) -> bool:
    """|lambda(p^k)| <= binom(n+k-1, k) p^(k sigma): the term-count envelope."""
    lam = abs(hecke_eigenvalue(sp, k))
    bound = math.comb(sp.n + k - 1, k) * sp.p ** (k * temperedness_defect(sp))
    return lam <= bound * (1 + 1e-9)
