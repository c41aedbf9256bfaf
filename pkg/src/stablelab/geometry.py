"""Model domains, exact and regularized distance, dyadic bands, grid functions.

Domains are the four convex model geometries (half-line, interval, square,
disk).  They expose the exact distance-to-complement, analytic ray exits
(convexity gives a single crossing per ray), a mollified dyadic partition of
unity subordinate to distance bands, and two regularized-distance variants:

* kind="smooth": closed-form functions comparable to the distance with
  bounded Hessians (square corners excepted: there the function is only
  Lipschitz and checks exclude a corner neighborhood);
* kind="dyadic": the band sum  psi = sum_n e^{-n} zeta_n, whose Hessian obeys
  |D^2 psi| <= N / d  rather than a uniform bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .levy import quadrature_atoms
from ._quad import gl_panel, power_panel

E2 = math.e**2


class ConvexityError(AssertionError):
    pass


class PartitionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class HalfLine:
    kind = "halfline"
    dim = 1

    @property
    def diameter(self):
        return math.inf

    def dist(self, x):
        return np.maximum(np.asarray(x, dtype=float), 0.0)

    def contains(self, x):
        return np.asarray(x, dtype=float) > 0.0

    def ray_exit(self, x, theta):
        theta = float(np.ravel(theta)[0])
        if theta >= 0:
            return math.inf
        return float(x) / (-theta)

    def sample_interior(self, rng, n, extent=10.0):
        return rng.uniform(0.0, extent, n)


@dataclass(frozen=True)
class Interval:
    a: float
    b: float
    kind = "interval"
    dim = 1

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("need a < b")

    @property
    def diameter(self):
        return self.b - self.a

    def dist(self, x):
        x = np.asarray(x, dtype=float)
        return np.maximum(np.minimum(x - self.a, self.b - x), 0.0)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x > self.a) & (x < self.b)

    def ray_exit(self, x, theta):
        theta = float(np.ravel(theta)[0])
        if theta > 0:
            return (self.b - float(x)) / theta
        if theta < 0:
            return (float(x) - self.a) / (-theta)
        return math.inf

    def sample_interior(self, rng, n):
        return rng.uniform(self.a, self.b, n)


@dataclass(frozen=True)
class Square:
    side: float
    kind = "square"
    dim = 2

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError("side must be positive")

    @property
    def diameter(self):
        return self.side * math.sqrt(2.0)

    def dist(self, x):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        d = np.minimum(np.minimum(x1, self.side - x1), np.minimum(x2, self.side - x2))
        return np.maximum(d, 0.0)

    def contains(self, x):
        return self.dist(x) > 0.0

    def corner_distance(self, x):
        x = np.asarray(x, dtype=float)
        s = self.side
        best = np.full(x.shape[:-1], np.inf)
        for cx in (0.0, s):
            for cy in (0.0, s):
                best = np.minimum(best, np.hypot(x[..., 0] - cx, x[..., 1] - cy))
        return best

    def ray_exit(self, x, theta):
        x = np.asarray(x, dtype=float).ravel()
        theta = np.asarray(theta, dtype=float).ravel()
        r = math.inf
        for i in range(2):
            if theta[i] > 0:
                r = min(r, (self.side - x[i]) / theta[i])
            elif theta[i] < 0:
                r = min(r, x[i] / (-theta[i]))
        return r

    def sample_interior(self, rng, n):
        return rng.uniform(0.0, self.side, (n, 2))


@dataclass(frozen=True)
class Disk:
    radius: float
    kind = "disk"
    dim = 2

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def diameter(self):
        return 2.0 * self.radius

    def dist(self, x):
        x = np.asarray(x, dtype=float)
        return np.maximum(self.radius - np.hypot(x[..., 0], x[..., 1]), 0.0)

    def contains(self, x):
        return self.dist(x) > 0.0

    def ray_exit(self, x, theta):
        x = np.asarray(x, dtype=float).ravel()
        theta = np.asarray(theta, dtype=float).ravel()
        xt = float(x @ theta)
        disc = xt * xt + self.radius**2 - float(x @ x)
        return -xt + math.sqrt(max(disc, 0.0))

    def sample_interior(self, rng, n):
        pts = np.empty((0, 2))
        while pts.shape[0] < n:
            cand = rng.uniform(-self.radius, self.radius, (2 * n, 2))
            keep = np.hypot(cand[:, 0], cand[:, 1]) < self.radius
            pts = np.vstack([pts, cand[keep]])
        return pts[:n]


def dist(x, domain):
    """Exact Euclidean distance from x to the complement (0 outside)."""
    return domain.dist(x)


# ---------------------------------------------------------------------------
# grid functions (exterior-zero convention)


@dataclass
class GridFunction:
    """Values on a uniform interior-node grid; the function is zero outside D.

    1D (Interval): nodes x_i = a + (i+1) h, i = 0..n-1, h = (b-a)/(n+1).
    2D (Square):   tensor grid of the same 1D layout in each coordinate,
                   values[i, j] = u(x_i, y_j).
    """

    domain: object
    values: np.ndarray
    h: float
    nodes: object  # 1D: ndarray; 2D: (x_nodes, y_nodes)

    @classmethod
    def from_callable(cls, domain, n, fn):
        if domain.dim == 1:
            nodes, h = interval_nodes(domain, n)
            return cls(domain, np.asarray(fn(nodes), dtype=float), h, nodes)
        nodes, h = square_nodes(domain, n)
        X, Y = np.meshgrid(nodes, nodes, indexing="ij")
        return cls(domain, np.asarray(fn(X, Y), dtype=float), h, (nodes, nodes))

    def dist_nodes(self):
        if self.domain.dim == 1:
            return self.domain.dist(self.nodes)
        xn, yn = self.nodes
        X, Y = np.meshgrid(xn, yn, indexing="ij")
        return self.domain.dist(np.stack([X, Y], axis=-1))

    def cell_bounds(self):
        """1D cell intervals covering [a, b] exactly: interior cells of width h,
        end cells extended to the walls."""
        x = self.nodes
        lo = np.concatenate([[self.domain.a], 0.5 * (x[1:] + x[:-1])])
        hi = np.concatenate([0.5 * (x[1:] + x[:-1]), [self.domain.b]])
        return lo, hi


def interval_nodes(domain, n):
    h = (domain.b - domain.a) / (n + 1)
    return domain.a + h * np.arange(1, n + 1), h


def square_nodes(domain, n):
    h = domain.side / (n + 1)
    return h * np.arange(1, n + 1), h


# ---------------------------------------------------------------------------
# dyadic partition


def _smoothstep(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    out[s >= 1.0] = 1.0
    mid = (s > 0.0) & (s < 1.0)
    sm = s[mid]
    f = np.exp(-1.0 / sm)
    g = np.exp(-1.0 / (1.0 - sm))
    out[mid] = f / (f + g)
    return out


@dataclass
class DyadicPartition:
    """Mollified indicators of the distance bands {c1 e^{-n} < d < c2 e^{-n}}.

    zeta_n(x) = S(e^n d_x) with S a band profile that is exactly 0 outside
    (c1, c2), exactly 1 on [c1 + w, c2 - w], and smooth in between; w is the
    mollifier transition width.  sum_n zeta_n >= 1 as soon as the plateau is
    at least one e-fold long, i.e. log((c2-w)/(c1+w)) >= 1.
    """

    domain: object
    c1: float = 1.0
    c2: float = E2
    width: float = field(default=(E2 - 1.0) / 8.0)

    def band_profile(self, t):
        t = np.asarray(t, dtype=float)
        return _smoothstep((t - self.c1) / self.width) * _smoothstep((self.c2 - t) / self.width)

    def zeta(self, n, x):
        d = self.domain.dist(x)
        return self.band_profile(np.exp(float(n)) * d)

    def zeta_of_distance(self, n, d):
        return self.band_profile(np.exp(float(n)) * np.asarray(d, dtype=float))

    def active_range(self, d_min, d_max):
        """Integer band indices n with supp(zeta_n) intersecting [d_min, d_max]."""
        n_lo = math.floor(math.log(self.c1 / d_max)) if d_max > 0 else 0
        n_hi = math.ceil(math.log(self.c2 / d_min)) if d_min > 0 else 0
        return range(n_lo, n_hi + 1)

    def partition_sum(self, x):
        d = np.atleast_1d(np.asarray(self.domain.dist(x), dtype=float))
        pos = d[d > 0]
        if pos.size == 0:
            return np.zeros_like(d)
        total = np.zeros_like(d)
        for n in self.active_range(float(pos.min()), float(pos.max())):
            total += self.zeta_of_distance(n, d)
        return total


def build_partition(domain, c1=1.0, c2=E2, mollifier_width=None):
    """Construct and validate a dyadic partition.

    Requires c2/c1 > e.  Validation evaluates the support condition, the
    scaled-derivative growth of the band profile, and the lower bound
    sum_n zeta_n >= c on a log-spaced distance grid, and raises PartitionError
    naming the first uncovered point if the lower bound fails.
    """
    if not c2 / c1 > math.e:
        raise PartitionError("bands too narrow: need c2/c1 > e")
    width = (c2 - c1) / 8.0 if mollifier_width is None else mollifier_width
    if not 0 < width < 0.5 * (c2 - c1):
        raise PartitionError("mollifier width must lie in (0, (c2-c1)/2)")
    part = DyadicPartition(domain, c1, c2, width)
    # plateau must span at least one e-fold, otherwise zeta_3 can fail
    if math.log((c2 - width) / (c1 + width)) < 1.0:
        raise PartitionError("mollifier too wide: band plateau shorter than one e-fold")
    d_grid = np.exp(np.linspace(math.log(1e-6), math.log(10.0), 2000))
    total = np.zeros_like(d_grid)
    for n in part.active_range(d_grid.min(), d_grid.max()):
        total += part.zeta_of_distance(n, d_grid)
    k = int(np.argmin(total))
    if total[k] <= 0.5:
        raise PartitionError(f"partition lower bound fails near d={d_grid[k]!r}: sum={total[k]!r}")
    return part


# ---------------------------------------------------------------------------
# regularized distance


@dataclass
class RegularizedDistance:
    """Smooth positive function comparable to the distance.

    comparability: N^{-1} psi <= d <= N psi with the recorded N;
    hessian scaling: |D^2 psi| <= hessian_constant * d^{tau - 1}, checked on a
    boundary-graded grid (for kind="smooth" on the square this holds away
    from an excluded corner neighborhood).
    """

    domain: object
    kind: str
    comparability: float
    tau: float
    _fn: object

    def __call__(self, x):
        return self._fn(x)

    def hessian_norm(self, x, step=None):
        """Max absolute entry of the finite-difference Hessian at interior x."""
        if self.domain.dim == 1:
            x = float(x)
            h = step if step is not None else max(1e-6, 1e-3 * self.domain.dist(x))
            vals = self._fn(np.array([x - h, x, x + h]))
            return abs((vals[0] - 2.0 * vals[1] + vals[2]) / h**2)
        x = np.asarray(x, dtype=float).ravel()
        h = step if step is not None else max(1e-6, 1e-3 * float(self.domain.dist(x)))
        e = np.eye(2) * h
        f = lambda p: float(self._fn(p))
        H = np.empty((2, 2))
        for i in range(2):
            H[i, i] = (f(x + e[i]) - 2.0 * f(x) + f(x - e[i])) / h**2
        H[0, 1] = H[1, 0] = (
            f(x + e[0] + e[1]) - f(x + e[0] - e[1]) - f(x - e[0] + e[1]) + f(x - e[0] - e[1])
        ) / (4.0 * h**2)
        return float(np.max(np.abs(H)))


def _harmonic(u, v):
    return u * v / (u + v)


def regularized_distance(domain, partition=None, kind="smooth"):
    """Regularized distance of the requested kind (see module docstring)."""
    if kind == "smooth":
        if isinstance(domain, HalfLine):
            return RegularizedDistance(domain, kind, 1.0, 1.0, lambda x: domain.dist(x))
        if isinstance(domain, Interval):
            a, b = domain.a, domain.b

            def fn(x):
                x = np.asarray(x, dtype=float)
                return np.maximum((x - a) * (b - x), 0.0) / (b - a)

            return RegularizedDistance(domain, kind, 2.0, 1.0, fn)
        if isinstance(domain, Disk):
            R = domain.radius

            def fn(x):
                x = np.asarray(x, dtype=float)
                r2 = x[..., 0] ** 2 + x[..., 1] ** 2
                return np.maximum(R * R - r2, 0.0) / (2.0 * R)

            return RegularizedDistance(domain, kind, 2.0, 1.0, fn)
        if isinstance(domain, Square):
            s = domain.side

            def fn(x):
                x = np.asarray(x, dtype=float)
                p1 = np.maximum(x[..., 0] * (s - x[..., 0]), 0.0) / s
                p2 = np.maximum(x[..., 1] * (s - x[..., 1]), 0.0) / s
                denom = np.where(p1 + p2 > 0, p1 + p2, 1.0)
                return np.where((p1 > 0) & (p2 > 0), p1 * p2 / denom, 0.0)

            return RegularizedDistance(domain, kind, 4.0, 1.0, fn)
        raise TypeError(f"unsupported domain {domain!r}")
    if kind == "dyadic":
        part = partition if partition is not None else build_partition(domain)

        def fn(x):
            d = np.asarray(part.domain.dist(x), dtype=float)
            scalar = d.ndim == 0
            d = np.atleast_1d(d)
            out = np.zeros_like(d)
            pos = d > 0
            if np.any(pos):
                dmin, dmax = float(d[pos].min()), float(d[pos].max())
                for n in part.active_range(dmin, dmax):
                    out[pos] += math.exp(-n) * part.zeta_of_distance(n, d[pos])
            return float(out[0]) if scalar else out

        return RegularizedDistance(domain, kind, E2, 0.0, fn)
    raise ValueError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# convexity check


def convexity_gap_check(domain, sample_count=10000, seed=0, slack=1e-12):
    """Sample triples (x, y, t) and verify d_{(1-t)x+ty} >= (1-t) d_x + t d_y.

    Returns a report dict; raises ConvexityError on a violation beyond slack.
    """
    rng = np.random.default_rng(seed)
    x = domain.sample_interior(rng, sample_count)
    y = domain.sample_interior(rng, sample_count)
    t = rng.uniform(0.0, 1.0, sample_count)
    tt = t if domain.dim == 1 else t[:, None]
    z = (1.0 - tt) * x + tt * y
    margin = domain.dist(z) - ((1.0 - t) * domain.dist(x) + t * domain.dist(y))
    worst = float(np.min(margin))
    if worst < -slack:
        k = int(np.argmin(margin))
        raise ConvexityError(
            f"convexity gap violated by {-worst:.3e} at x={x[k]!r}, y={y[k]!r}, t={t[k]!r}"
        )
    return {"passed": True, "samples": sample_count, "worst_margin": worst}


# ---------------------------------------------------------------------------
# tail integral check


def _ray_kinks(domain, x, theta, lo, hi):
    """Radii in (lo, hi) where the nearest boundary feature changes along the ray."""
    kinks = []
    if isinstance(domain, Interval):
        th = float(np.ravel(theta)[0])
        if th != 0.0:
            r = ((domain.a + domain.b) / 2.0 - float(x)) / th
            if lo < r < hi:
                kinks.append(r)
    elif isinstance(domain, Square):
        x = np.asarray(x, dtype=float).ravel()
        theta = np.asarray(theta, dtype=float).ravel()
        s = domain.side
        # linear edge distances along the ray: value + slope * r
        lines = [
            (x[0], theta[0]),
            (s - x[0], -theta[0]),
            (x[1], theta[1]),
            (s - x[1], -theta[1]),
        ]
        for i in range(4):
            for j in range(i + 1, 4):
                (vi, si_), (vj, sj) = lines[i], lines[j]
                if si_ != sj:
                    r = (vj - vi) / (si_ - sj)
                    if lo < r < hi:
                        kinks.append(r)
    return sorted(set(kinks))


def _tail_lhs(domain, m, kappa1, kappa2, x, n_panel=24, n_edge=32):
    """sum_atoms w * int_{d_x}^inf d(x + r theta)^{kappa2} r^{-1-kappa1} dr.

    Power convention: kappa2 = 0 means integrand 1 on all of R^d (closed form);
    for kappa2 != 0 the integrand is supported where x + r theta lies in D.
    """
    rho = float(domain.dist(x))
    if rho <= 0:
        raise ValueError("x must be interior")
    dirs, ws = quadrature_atoms(m)
    if kappa2 == 0.0:
        return float(np.sum(ws)) * rho ** (-kappa1) / kappa1
    total = 0.0
    x_arr = np.asarray(x, dtype=float)

    def ray_points(theta, r):
        if domain.dim == 1:
            return float(x_arr) + r * float(np.ravel(theta)[0])
        return x_arr + np.multiply.outer(r, np.asarray(theta, dtype=float))

    for theta, w in zip(dirs, ws):
        rstar = domain.ray_exit(x_arr, theta)
        if rstar <= rho or not math.isfinite(rstar):
            if not math.isfinite(rstar):
                # half-line ray that never exits: distance grows linearly, and
                # kappa2 < kappa1 makes the integral converge; integrate to a
                # large radius then close with the asymptotic power
                R = max(100.0 * rho, 100.0)

                def fd_inf(r):
                    return domain.dist(ray_points(theta, r)) ** kappa2 * r ** (-1.0 - kappa1)

                edges = np.geomspace(rho, R, 40)
                for lo, hi in zip(edges[:-1], edges[1:]):
                    total += w * gl_panel(fd_inf, lo, hi, n_panel)
                # beyond R: d ~ r (up to the offset), integrand ~ r^{kappa2-1-kappa1}
                total += w * R ** (kappa2 - kappa1) / (kappa1 - kappa2)
            continue

        def fd(r):
            return domain.dist(ray_points(theta, r)) ** kappa2 * r ** (-1.0 - kappa1)

        edge = 0.1 * (rstar - rho)
        inner_hi = rstar - edge
        pieces = [rho] + _ray_kinks(domain, x_arr, theta, rho, inner_hi) + [inner_hi]
        for lo, hi in zip(pieces[:-1], pieces[1:]):
            total += w * gl_panel(fd, lo, hi, n_panel)
        # last panel: d(x + r theta) = (rstar - r) * g(r) with g smooth and
        # positive, so use the (rstar - r)^{kappa2} Gauss-Jacobi weight
        g = lambda r: fd(r) / (rstar - r) ** kappa2
        total += w * power_panel(g, inner_hi, rstar, kappa2, n_edge, at="upper")
    return total


def tail_integral_check(domain, m, kappa1, kappa2, x_samples, n_panel=24):
    """Ratios LHS(x) * d_x^{kappa1 - kappa2} over the samples, with a panel
    refinement to confirm the quadrature has settled (growth < 5%)."""
    if kappa1 <= 0:
        raise ValueError("kappa1 must be positive")
    if not (-1.0 < kappa2 < kappa1):
        raise ValueError("kappa2 must lie in (-1, kappa1)")
    rows = []
    for x in x_samples:
        rho = float(domain.dist(x))
        lhs = _tail_lhs(domain, m, kappa1, kappa2, x, n_panel)
        lhs_ref = _tail_lhs(domain, m, kappa1, kappa2, x, 2 * n_panel, 64)
        rows.append(
            {
                "x": x,
                "d_x": rho,
                "lhs": lhs,
                "ratio": lhs * rho ** (kappa1 - kappa2),
                "ratio_refined": lhs_ref * rho ** (kappa1 - kappa2),
            }
        )
    sup = max(r["ratio"] for r in rows)
    sup_ref = max(r["ratio_refined"] for r in rows)
    growth = abs(sup_ref - sup) / sup if sup else 0.0
    return {
        "rows": rows,
        "sup_ratio": sup,
        "sup_ratio_refined": sup_ref,
        "refinement_growth": growth,
        "passed": math.isfinite(sup) and growth < 0.05,
    }
