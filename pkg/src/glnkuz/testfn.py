"""Localized test functions built from a cutoff and a symbol transform.

The function is f(g) = chi(log g) * A(log g) / j(log g), where chi is a
compactly supported bump on the Lie algebra at radius scale X^(delta-1), A is
the Fourier transform of a plateau symbol, and j is the Jacobian of the
exponential map (j(0) = 1).  Symbols are tensor products of one identical 1-d
plateau bump over the n^2 entry coordinates, so the transform factors into
1-d cosine transforms, evaluated by adaptive quadrature and cached on a
spline grid.  The scaling is chosen so that the transform has effective
width X^(delta'-1): the sup norm grows like X^((1-delta') n^2), the L^1 mass
stays bounded, and the total integral is the symbol value at the origin.

Matrix logarithms are taken by inverse scaling and squaring: square roots
until the argument is within series range (zero roots on the natural domain
here), then the alternating series, with exp round-trips checked to 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, interpolate

from .montecarlo import McConfig, McEstimate, accumulate


# ---------------------------------------------------------------------------
# 1-d profiles
# ---------------------------------------------------------------------------


def smoothstep(t, order: int):
    """Polynomial step (regularized incomplete beta), C^order at both ends."""
    from scipy.special import betainc

    t = np.clip(t, 0.0, 1.0)
    return betainc(order + 1, order + 1, t)


@dataclass(frozen=True)
class BumpProfile:
    """1-d plateau bump: 1 on [-plateau, plateau], smoothstep to 0 at support."""

    plateau: float
    support: float
    order: int = 3

    def __post_init__(self):
        if not 0 < self.plateau < self.support:
            raise ValueError("need 0 < plateau < support")

    def __call__(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        ramp = (self.support - t) / (self.support - self.plateau)
        return np.where(t <= self.plateau, 1.0, smoothstep(ramp, self.order))


@lru_cache(maxsize=64)
def _bump_transform_table(plateau: float, support: float, order: int,
                          u_max: float = 80.0, du: float = 0.05):
    """Cosine-transform table of the bump with 1/(2 pi) normalization, plus a
    cubic spline through it.  Normalized so the transform integrates to the
    bump value at the origin."""
    bump = BumpProfile(plateau, support, order)
    grid = np.arange(0.0, u_max + du, du)
    vals = np.empty_like(grid)
    for k, u in enumerate(grid):
        if u == 0.0:
            v, _ = integrate.quad(bump, 0.0, support, limit=200)
        else:
            v, _ = integrate.quad(bump, 0.0, support, weight="cos", wvar=u, limit=200)
        vals[k] = v / math.pi  # (1/2pi) * 2 * int_0^inf
    spline = interpolate.CubicSpline(grid, vals, bc_type="natural")
    return grid, vals, spline


@dataclass(frozen=True)
class _TransformEvaluator:
    u_max: float
    spline: object
    at_zero: float

    def __call__(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        out = np.where(u <= self.u_max, self.spline(np.minimum(u, self.u_max)), 0.0)
        return out


def bump_transform(profile: BumpProfile) -> _TransformEvaluator:
    grid, vals, spline = _bump_transform_table(
        profile.plateau, profile.support, profile.order
    )
    return _TransformEvaluator(float(grid[-1]), spline, float(vals[0]))


# ---------------------------------------------------------------------------
# Cutoff and symbol specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffSpec:
    """Bump on the Lie algebra: identically 1 inside radius kappa1/X, supported
    inside radius kappa2 * X^(delta-1), in the entrywise sup norm."""

    n: int
    X: float
    delta: float
    kappa1: float = 0.5
    kappa2: float = 1.0
    order: int = 3

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.plateau_radius >= self.support_radius:
            raise ValueError("plateau must sit strictly inside the support")

    @property
    def plateau_radius(self) -> float:
        return self.kappa1 / self.X

    @property
    def support_radius(self) -> float:
        return self.kappa2 * self.X ** (self.delta - 1.0)

    def value(self, sup_norms):
        profile = BumpProfile(self.plateau_radius, self.support_radius, self.order)
        return profile(sup_norms)


@dataclass(frozen=True)
class SymbolSpec:
    """Tensor-product plateau symbol over the n^2 entry coordinates.

    The rescaled symbol entering the construction is identically 1 on the
    sup-norm ball of radius plateau_radius * X^(1-delta_prime) and supported
    inside falloff_radius * X^(1-delta_prime); its transform then carries
    total mass 1 per coordinate at an effective width X^(delta_prime-1).
    """

    n: int
    X: float
    delta_prime: float
    plateau_radius: float = 1.0
    falloff_radius: float = 2.0
    order: int = 3

    def __post_init__(self):
        if not 0 < self.delta_prime < 1:
            raise ValueError("delta_prime must lie in (0, 1)")
        if not 0 < self.plateau_radius < self.falloff_radius:
            raise ValueError("need 0 < plateau < falloff")

    @property
    def width(self) -> float:
        """Frequency scale of the rescaled symbol: X^(1-delta_prime)."""
        return float(self.X) ** (1.0 - self.delta_prime)

    def base_profile(self) -> BumpProfile:
        return BumpProfile(self.plateau_radius, self.falloff_radius, self.order)


def symbol_fourier(sym: SymbolSpec, x) -> np.ndarray:
    """Transform of the rescaled symbol at Lie-algebra points.

    x: (..., n, n) array of matrices; the value is the product over entry
    coordinates of W * B(W * x_ij) with W the symbol width and B the 1-d
    transform of the base profile.
    """
    B = bump_transform(sym.base_profile())
    x = np.asarray(x, dtype=float)
    W = sym.width
    vals = W * B(W * x)
    return vals.reshape(x.shape[:-2] + (-1,)).prod(axis=-1)


# ---------------------------------------------------------------------------
# Matrix log/exp and the exponential Jacobian (batched, near identity)
# ---------------------------------------------------------------------------


def matrix_log_batch(g, max_sqrt: int = 12, tol: float = 0.25):
    """Principal logarithm by inverse scaling and squaring, batched (N, n, n).

    Square roots (Denman-Beavers) are taken until ||g - I|| < tol, then the
    alternating series is summed; on this package's domains zero square roots
    are typically needed.  Returns (log, ok_mask).
    """
    g = np.asarray(g, dtype=float)
    N, n, _ = g.shape
    eye = np.eye(n)
    a = g.copy()
    k = np.zeros(N, dtype=int)
    ok = np.ones(N, dtype=bool)
    for _ in range(max_sqrt):
        norms = np.abs(a - eye).max(axis=(1, 2))
        need = norms >= tol
        if not need.any():
            break
        idx = np.where(need)[0]
        sub = a[idx]
        y = sub.copy()
        zm = np.broadcast_to(eye, sub.shape).copy()
        good = np.ones(len(idx), dtype=bool)
        for _ in range(60):
            try:
                yinv = np.linalg.inv(y)
                zinv = np.linalg.inv(zm)
            except np.linalg.LinAlgError:
                good[:] = False
                break
            y, zm = 0.5 * (y + zinv), 0.5 * (zm + yinv)
            if np.abs(y @ y - sub).max() < 1e-14 * (1 + np.abs(sub).max()):
                break
        a[idx] = y
        k[idx] += 1
        ok[idx] &= good
    norms = np.abs(a - eye).max(axis=(1, 2))
    ok &= norms < 0.9
    e = a - eye
    term = e.copy()
    out = e.copy()
    for p in range(2, 40):
        term = term @ e
        out = out + ((-1) ** (p + 1) / p) * term
        if np.abs(term).max() < 1e-18:
            break
    return out * (2.0 ** k)[:, None, None], ok


def matrix_exp_batch(y):
    """Series exponential, batched; ample on near-zero arguments."""
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    out = np.broadcast_to(np.eye(n), y.shape).copy()
    term = np.broadcast_to(np.eye(n), y.shape).copy()
    for p in range(1, 30):
        term = term @ y / p
        out = out + term
        if np.abs(term).max() < 1e-18:
            break
    return out


def exp_jacobian_batch(y):
    """Jacobian j of the exponential map at Y, batched: |det Phi(ad_Y)| with
    Phi(t) = (1 - exp(-t))/t; j(0) = 1."""
    y = np.asarray(y, dtype=float)
    N, n, _ = y.shape
    eye = np.eye(n)
    ad = np.einsum("sij,kl->siklj", y, eye).reshape(N, n * n, n * n) - np.einsum(
        "ij,slk->siklj", eye, y.transpose(0, 2, 1)
    ).reshape(N, n * n, n * n)
    phi = np.broadcast_to(np.eye(n * n), ad.shape).copy()
    term = np.broadcast_to(np.eye(n * n), ad.shape).copy()
    for p in range(1, 16):
        term = term @ (-ad) / (p + 1)
        phi = phi + term
    return np.abs(np.linalg.det(phi))


# ---------------------------------------------------------------------------
# The test function handle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunctionHandle:
    """Pointwise evaluator for the localized test function and bookkeeping."""

    cutoff: CutoffSpec
    symbol: SymbolSpec
    X: float
    table_meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.cutoff.n

    @property
    def support_radius_group(self) -> float:
        """Sup-norm radius on the group containing exp of the cutoff support."""
        r = self.cutoff.support_radius
        n = self.n
        return (math.exp(n * r) - 1.0) / n

    def value_batch(self, g) -> np.ndarray:
        """f(g) for a batch (N, n, n); exact zero outside the support image."""
        g = np.asarray(g, dtype=float)
        if g.ndim == 2:
            g = g[None]
        N, n, _ = g.shape
        out = np.zeros(N)
        close = np.abs(g - np.eye(n)).max(axis=(1, 2)) <= self.support_radius_group
        if not close.any():
            return out
        gi = g[close]
        Y, ok = matrix_log_batch(gi)
        back = matrix_exp_batch(Y)
        ok &= np.abs(back - gi).max(axis=(1, 2)) < 1e-12 * (1 + np.abs(gi).max())
        norms = np.abs(Y).max(axis=(1, 2))
        inside = ok & (norms < self.cutoff.support_radius)
        if inside.any():
            Yi = Y[inside]
            chi = self.cutoff.value(np.abs(Yi).max(axis=(1, 2)))
            aval = symbol_fourier(self.symbol, Yi)
            j = exp_jacobian_batch(Yi)
            vals = np.zeros(len(Y))
            vals[inside] = chi * aval / j
            out[np.where(close)[0]] = vals
        return out

    def value(self, g) -> float:
        return float(self.value_batch(np.asarray(g, dtype=float)[None])[0])

    def config_text(self) -> str:
        """Plain-text key-value serialization of the handle parameters."""
        lines = [
            f"n={self.n}",
            f"X={self.X}",
            f"delta={self.cutoff.delta}",
            f"deltaPrime={self.symbol.delta_prime}",
            f"kappa1={self.cutoff.kappa1}",
            f"kappa2={self.cutoff.kappa2}",
            f"R0={self.symbol.plateau_radius}",
            f"falloff={self.symbol.falloff_radius}",
            f"profileOrder={self.symbol.order}",
        ]
        return "\n".join(lines) + "\n"


def build_test_function(n: int, X: float, delta: float = 0.3,
                        delta_prime: float = 0.15, plateau_radius: float = 1.0,
                        falloff_radius: float = 2.0, order: int = 3) -> TestFunctionHandle:
    """Assemble the handle; the 1-d transform table is built (or fetched from
    the cache) at this point."""
    if not 0 < delta_prime < delta < 1:
        raise ValueError("need 0 < delta' < delta < 1")
    cutoff = CutoffSpec(n, float(X), delta)
    symbol = SymbolSpec(n, float(X), delta_prime, plateau_radius, falloff_radius, order)
    grid, vals, _ = _bump_transform_table(plateau_radius, falloff_radius, order)
    meta = {
        "grid_points": len(grid),
        "grid_step": float(grid[1] - grid[0]),
        "grid_max": float(grid[-1]),
        "transform_at_zero": float(vals[0]),
    }
    return TestFunctionHandle(cutoff, symbol, float(X), meta)


# ---------------------------------------------------------------------------
# Monte-Carlo functionals of the handle
# ---------------------------------------------------------------------------


def _core_radius(h: TestFunctionHandle) -> float:
    """Half-width of the box holding the bulk of the transform mass (a couple
    of main lobes of the 1-d transform)."""
    lobes = 2.5 * math.pi / h.symbol.plateau_radius
    return min(h.cutoff.support_radius, lobes / h.symbol.width)


def _mixture_sample(rng, size, n, r_full, r_core, p_core=0.7):
    """Two-component box mixture on the Lie algebra with importance weights.

    Samples come from the core box with probability p_core and from the full
    box otherwise; the returned weights are the reciprocal mixture density,
    so weighted averages are unbiased over the full box.
    """
    if r_core >= r_full * 0.999:
        Y = rng.uniform(-r_full, r_full, size=(size, n, n))
        return Y, np.full(size, (2.0 * r_full) ** (n * n))
    take_core = rng.random(size) < p_core
    Y = rng.uniform(-r_full, r_full, size=(size, n, n))
    Y[take_core] = rng.uniform(-r_core, r_core, size=(int(take_core.sum()), n, n))
    vol_core = (2.0 * r_core) ** (n * n)
    vol_full = (2.0 * r_full) ** (n * n)
    in_core = (np.abs(Y).max(axis=(1, 2)) <= r_core)
    dens = np.where(in_core, p_core / vol_core + (1 - p_core) / vol_full,
                    (1 - p_core) / vol_full)
    return Y, 1.0 / dens


def integral_over_group(h: TestFunctionHandle, mc: McConfig,
                        absolute: bool = False) -> McEstimate:
    """MC estimate of the group integral of f (or of |f|): samples the
    Lie-algebra support box through a core/full box mixture adapted to the
    transform width, weighting by the exponential Jacobian."""
    n = h.n
    r = h.cutoff.support_radius
    r_core = _core_radius(h)

    def evaluate(rng, size):
        Y, weight = _mixture_sample(rng, size, n, r, r_core)
        chi = h.cutoff.value(np.abs(Y).max(axis=(1, 2)))
        aval = symbol_fourier(h.symbol, Y)
        vals = chi * aval  # f(exp Y) j(Y) = chi(Y) A(Y); the Jacobians cancel
        if absolute:
            vals = np.abs(vals)
        return weight * vals

    return accumulate(evaluate, mc)


def sup_norm_estimate(h: TestFunctionHandle, mc: McConfig) -> float:
    """Grid/random-sample estimate of the sup norm of f (attained near the
    identity by construction)."""
    n = h.n
    r = h.cutoff.support_radius
    rng = np.random.default_rng(mc.seed)
    Y = rng.uniform(-r / 4, r / 4, size=(min(mc.samples, 20000), n, n))
    Y[0] = 0.0
    chi = h.cutoff.value(np.abs(Y).max(axis=(1, 2)))
    aval = symbol_fourier(h.symbol, Y)
    j = exp_jacobian_batch(Y)
    return float(np.abs(chi * aval / j).max())


def self_convolution_value(h: TestFunctionHandle, g, mc: McConfig) -> McEstimate:
    """MC value of (f * f~)(g) with f~(u) = conj(f(u^{-1})): the integral of
    f(u) conj(f(g^{-1} u)) du over the support intersection; exact zero when
    the supports cannot intersect."""
    n = h.n
    g = np.asarray(g, dtype=float)
    rho = h.support_radius_group
    # u and g^{-1}u both within rho of I forces ||g - I|| <= 2 rho (1 + rho)
    if np.abs(g - np.eye(n)).max() > 2.0 * rho * (1.0 + rho):
        return McEstimate(0.0, 0.0, 0, mc.seed)
    r = h.cutoff.support_radius
    r_core = _core_radius(h)
    ginv = np.linalg.inv(g)

    def evaluate(rng, size):
        Y, weight = _mixture_sample(rng, size, n, r, r_core)
        u = matrix_exp_batch(Y)
        f1 = h.value_batch(u)
        live = f1 != 0.0
        vals = np.zeros(size)
        if live.any():
            f2 = h.value_batch(ginv[None] @ u[live])
            j = exp_jacobian_batch(Y[live])
            vals[live] = f1[live] * f2 * j
        return weight * vals

    return accumulate(evaluate, mc)


def central_average(h: TestFunctionHandle, g, mc: McConfig, nodes: int = 13):
    """Quadrature (multiplicative measure) over positive scalars z of the
    self-convolution at z g, restricted to the z-interval that can meet the
    support."""
    n = h.n
    g = np.asarray(g, dtype=float)
    rho = 2.0 * h.support_radius_group * (1.0 + h.support_radius_group)
    # need all |z g_ii - 1| <= rho at least: z in a small bracket around 1
    diag = np.diag(g)
    if (diag <= 0).any():
        return 0.0, []
    z_lo = max((1.0 - rho) / diag.max(), 1e-9)
    z_hi = (1.0 + rho) / diag.min()
    if z_lo >= z_hi:
        return 0.0, []
    zs = np.linspace(z_lo, z_hi, nodes)
    fvals = []
    for i, z in enumerate(zs):
        seed = int(np.random.SeedSequence((mc.seed, 0xCE, i)).generate_state(1)[0])
        est = self_convolution_value(h, z * g, McConfig(mc.samples, seed, mc.chunk))
        fvals.append(est.real / z)  # d z / z
    total = float(np.trapezoid(fvals, zs))
    return total, fvals


def verify_test_function_properties(n: int, X_sweep, mc: McConfig,
                                    delta: float = 0.3, delta_prime: float = 0.15):
    """Sweep report: L^1 mass, sup norm, support radius and central average per
    scale, with fitted log-log growth exponents."""
    report = {"X": list(map(float, X_sweep)), "l1": [], "sup": [], "central": [],
              "support_radius": []}
    for i, X in enumerate(X_sweep):
        h = build_test_function(n, X, delta, delta_prime)
        seed = int(np.random.SeedSequence((mc.seed, 7, i)).generate_state(1)[0])
        l1 = integral_over_group(h, McConfig(mc.samples, seed, mc.chunk), absolute=True)
        sup = sup_norm_estimate(h, McConfig(20000, seed))
        cav, _ = central_average(h, np.eye(n), McConfig(max(mc.samples // 10, 2000), seed))
        report["l1"].append(l1.real)
        report["sup"].append(sup)
        report["central"].append(cav)
        report["support_radius"].append(h.support_radius_group)
    lx = np.log(report["X"])
    report["sup_exponent"] = float(np.polyfit(lx, np.log(report["sup"]), 1)[0])
    cav = np.array(report["central"])
    report["central_exponent"] = (
        float(np.polyfit(lx, np.log(np.maximum(cav, 1e-300)), 1)[0])
        if (cav > 0).all()
        else float("nan")
    )
    report["sup_exponent_target"] = (1.0 - delta_prime) * n * n
    report["central_exponent_cap"] = n * n - 1.0
    return report
