"""Distance-weighted Lebesgue/Sobolev norms, in integral and dyadic band form.

The order-0 norm is  ( int_D |u|^p d_x^(theta - d) dx )^(1/p)  with d_x the
distance to the complement.  The order-1 norm adds the term with |d_x Du|.
The dyadic form localizes to the mollified distance bands zeta_n and sums

    sum_n e^(-n (theta - d)) [ ||zeta_n u||_p^p + e^(-n gamma p) ||G (zeta_n u)||_p^p ]

where G is the grid fractional Laplacian of order gamma (gamma = 1 uses the
plain gradient).  Weights are integrated cell-wise: exactly in 1D (power
rule, with the log branch at exponent -1), by subdivision in wall-touching
2D cells, and with a linear-decay model of u inside boundary cells whenever
the bare weight is non-integrable there.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import GridFunction
from .levy import unit_pair_measure

_SUBDIV = 8  # subdivision of wall-touching 2D cells


class OutsideWindowError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedNormSpec:
    p: float
    theta: float
    order: float = 0.0
    domain: object = None

    def __post_init__(self):
        if not self.p > 1.0:
            raise ValueError("p must exceed 1")
        if not 0.0 <= self.order < 2.0:
            raise ValueError("order must lie in [0, 2)")


def admissible_theta_window(d, p):
    """The open theta window (d-1, d-1+p) of the elliptic estimate."""
    return (d - 1.0, d - 1.0 + p)


# ---------------------------------------------------------------------------
# exact cell weights


def _power_antideriv(t, E):
    t = np.asarray(t, dtype=float)
    if abs(E + 1.0) < 1e-14:
        return np.log(t)
    return t ** (E + 1.0) / (E + 1.0)


def _interval_weight(a0, b0, E):
    """int_{a0}^{b0} s^E ds for 0 <= a0 < b0 (a0 = 0 requires E > -1)."""
    if a0 <= 0.0:
        if E <= -1.0:
            return math.inf
        return b0 ** (E + 1.0) / (E + 1.0)
    return float(_power_antideriv(b0, E) - _power_antideriv(a0, E))


def _cell_weights_1d(gf, E):
    """Exact int_cell d_x^E dx for each 1D cell (inf where non-integrable)."""
    dom = gf.domain
    lo, hi = gf.cell_bounds()
    mid = 0.5 * (dom.a + dom.b)
    w = np.empty(len(lo))
    for i, (l, h) in enumerate(zip(lo, hi)):
        total = 0.0
        left_hi = min(h, mid)
        if l < left_hi:  # d = x - a on this part
            total += _interval_weight(l - dom.a, left_hi - dom.a, E)
        right_lo = max(l, mid)
        if right_lo < h:  # d = b - x
            total += _interval_weight(dom.b - h, dom.b - right_lo, E)
        w[i] = total
    return w


def _cell_weights_and_flags_2d(gf, E):
    """Per-cell weights int_cell d^E for the tensor grid; returns (w, wall)
    where wall marks cells touching the boundary (their weight uses subcell
    midpoints and is inf when E <= -1)."""
    dom = gf.domain
    xn, _ = gf.nodes
    n = len(xn)
    lo = np.concatenate([[0.0], 0.5 * (xn[1:] + xn[:-1])])
    hi = np.concatenate([0.5 * (xn[1:] + xn[:-1]), [dom.side]])
    w = np.empty((n, n))
    wall = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            touches = i in (0, n - 1) or j in (0, n - 1)
            wall[i, j] = touches
            if not touches:
                c = np.array([xn[i], xn[j]])
                w[i, j] = float(dom.dist(c)) ** E * (hi[i] - lo[i]) * (hi[j] - lo[j])
            else:
                if E <= -1.0:
                    w[i, j] = math.inf
                    continue
                sx = np.linspace(lo[i], hi[i], _SUBDIV + 1)
                sy = np.linspace(lo[j], hi[j], _SUBDIV + 1)
                cx = 0.5 * (sx[1:] + sx[:-1])
                cy = 0.5 * (sy[1:] + sy[:-1])
                X, Y = np.meshgrid(cx, cy, indexing="ij")
                dv = dom.dist(np.stack([X, Y], axis=-1))
                area = (sx[1] - sx[0]) * (sy[1] - sy[0])
                w[i, j] = float(np.sum(dv**E) * area)
    return w, wall, (lo, hi)


def _boundary_model_weights_2d(gf, E, p, cells, bounds):
    """For wall cells with E <= -1: int_cell (d / d_node)^p d^E, by subdivision."""
    dom = gf.domain
    xn, _ = gf.nodes
    lo, hi = bounds
    dn = gf.dist_nodes()
    out = {}
    for i, j in cells:
        sx = np.linspace(lo[i], hi[i], _SUBDIV + 1)
        sy = np.linspace(lo[j], hi[j], _SUBDIV + 1)
        cx = 0.5 * (sx[1:] + sx[:-1])
        cy = 0.5 * (sy[1:] + sy[:-1])
        X, Y = np.meshgrid(cx, cy, indexing="ij")
        dv = dom.dist(np.stack([X, Y], axis=-1))
        area = (sx[1] - sx[0]) * (sy[1] - sy[0])
        out[(i, j)] = float(np.sum(dv ** (E + p)) * area) / float(dn[i, j]) ** p
    return out


def weighted_power_sum(values, gf, p, E):
    """sum over cells of |values|^p * int_cell d^E, with the linear-decay
    boundary model (u ~ u_node d / d_node) in cells where the bare weight is
    non-integrable.  `values` must be node-aligned with gf."""
    vals = np.asarray(values, dtype=float)
    if gf.domain.dim == 1:
        w = _cell_weights_1d(gf, E)
        total = 0.0
        warned = False
        dn = gf.dist_nodes()
        lo, hi = gf.cell_bounds()
        for i in range(len(w)):
            if math.isfinite(w[i]):
                total += abs(vals[i]) ** p * w[i]
                continue
            if E + p <= -1.0:
                raise ValueError(
                    f"weight exponent {E} non-integrable even with linear decay (p={p})"
                )
            if not warned:
                warnings.warn(
                    "weight nonintegrable; relies on u decay", RuntimeWarning, stacklevel=3
                )
                warned = True
            # model u by its linear interpolant to zero at the wall
            wm = _cell_weights_1d(gf, E + p)[i]
            total += (abs(vals[i]) / dn[i]) ** p * wm
        return total
    w, wall, bounds = _cell_weights_and_flags_2d(gf, E)
    bad = ~np.isfinite(w)
    total = float(np.sum(np.abs(vals[~bad]) ** p * w[~bad]))
    if np.any(bad):
        if E + p <= -1.0:
            raise ValueError(
                f"weight exponent {E} non-integrable even with linear decay (p={p})"
            )
        warnings.warn("weight nonintegrable; relies on u decay", RuntimeWarning, stacklevel=3)
        cells = list(zip(*np.nonzero(bad)))
        wm = _boundary_model_weights_2d(gf, E, p, cells, bounds)
        for ij in cells:
            total += abs(vals[ij]) ** p * wm[ij]
    return total


# ---------------------------------------------------------------------------
# norms


def weighted_Lp(u, spec):
    """(int_D |u|^p d^(theta-d) dx)^(1/p), cell-wise exact weights."""
    E = spec.theta - u.domain.dim
    return weighted_power_sum(u.values, u, spec.p, E) ** (1.0 / spec.p)


def _gradient_norm(u):
    if u.domain.dim == 1:
        return np.gradient(u.values, u.h, edge_order=2)
    gx = np.gradient(u.values, u.h, axis=0, edge_order=2)
    gy = np.gradient(u.values, u.h, axis=1, edge_order=2)
    return np.hypot(gx, gy)


def weighted_sobolev_int(u, spec):
    """Sum over k <= order of || d^k D^k u ||_{L_p,theta} (order 0 or 1).

    Derivatives use centered differences with one-sided stencils at the
    first/last nodes (no exterior-zero ghost values), so non-vanishing
    traces are differentiated faithfully.
    """
    if spec.order not in (0, 0.0, 1, 1.0):
        raise ValueError("integral Sobolev form implemented for orders 0 and 1")
    total = weighted_Lp(u, spec)
    if spec.order >= 1:
        dvals = u.dist_nodes() * _gradient_norm(u)
        E = spec.theta - u.domain.dim
        total += weighted_power_sum(dvals, u, spec.p, E) ** (1.0 / spec.p)
    return total


_matrix_cache = {}


def _order_matrix(gamma, domain, n):
    """Grid fractional Laplacian of order gamma on the 1D interval grid."""
    from .operators import StableOperator, assemble_matrix_1d

    key = (round(float(gamma), 14), float(domain.a), float(domain.b), int(n))
    if key not in _matrix_cache:
        op = StableOperator(unit_pair_measure(gamma), normalization="fractional_laplacian")
        _matrix_cache[key] = assemble_matrix_1d(op, domain, n)[0]
    return _matrix_cache[key]


def dyadic_norm(u, spec, partition):
    """Band-sum realization of the weighted norm (see module docstring).

    Bands outside the grid's resolvable distance range are dropped; if the two
    extreme retained bands carry more than 1% of the total a truncation
    warning is issued.
    """
    if u.domain.dim != 1:
        raise ValueError("dyadic norm implemented on 1D domains")
    p, theta, gamma = spec.p, spec.theta, float(spec.order)
    d = u.domain.dim
    dn = u.dist_nodes()
    vol = _cell_weights_1d(u, 0.0)
    dmin, dmax = float(np.min(dn)), float(np.max(dn))
    bands = list(partition.active_range(dmin, dmax))
    if gamma > 0.0 and gamma != 1.0:
        A = _order_matrix(gamma, u.domain, len(u.values))
    grad = _gradient_norm(u) if gamma == 1.0 else None
    terms = []
    for n_band in bands:
        zu = partition.zeta_of_distance(n_band, dn) * u.values
        if not np.any(zu):
            terms.append(0.0)
            continue
        band = float(np.sum(np.abs(zu) ** p * vol))
        if gamma == 1.0:
            gz = np.gradient(zu, u.h, edge_order=2)
            band += math.exp(-n_band * gamma * p) * float(np.sum(np.abs(gz) ** p * vol))
        elif gamma > 0.0:
            band += math.exp(-n_band * gamma * p) * float(np.sum(np.abs(A @ zu) ** p * vol))
        terms.append(math.exp(-n_band * (theta - d)) * band)
    total = float(np.sum(terms))
    if total > 0.0 and len(terms) >= 2 and (terms[0] + terms[-1]) > 0.01 * total:
        warnings.warn(
            "dyadic norm truncation: extreme bands carry more than 1% of the sum",
            RuntimeWarning,
        )
    return total ** (1.0 / p)


# ---------------------------------------------------------------------------
# estimate ratios


def estimate_ratio(u, f, p, theta, alpha, D, weight="psi", allow_outside_window=False):
    """(||w^(-a/2) u|| + ||w^(a/2) G u||) / ||w^(a/2) f||  in L_{p,theta},

    with G the grid fractional Laplacian of order alpha and w either the
    smooth regularized distance (weight="psi") or the exact distance
    (weight="dist").  Boundedness of this scalar across theta, mesh, and
    right-hand sides is the checkable content of the elliptic estimate.
    """
    from .geometry import regularized_distance

    lo_w, hi_w = admissible_theta_window(D.dim, p)
    if not (lo_w < theta < hi_w) and not allow_outside_window:
        raise OutsideWindowError(
            f"theta={theta} outside admissible window ({lo_w}, {hi_w}); "
            "pass allow_outside_window=True to compute anyway"
        )
    if D.dim != 1:
        raise ValueError("estimate_ratio implemented on 1D domains")
    fv = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    if not np.any(fv):
        raise ValueError("estimate_ratio needs a nonzero right-hand side")
    if weight == "psi":
        psi = regularized_distance(D, kind="smooth")(u.nodes)
    elif weight == "dist":
        psi = u.dist_nodes()
    else:
        raise ValueError("weight must be 'psi' or 'dist'")
    A = _order_matrix(alpha, D, len(u.values))
    Gu = A @ u.values
    E = theta - D.dim
    num = weighted_power_sum(psi ** (-alpha / 2.0) * u.values, u, p, E) ** (1.0 / p)
    num += weighted_power_sum(psi ** (alpha / 2.0) * Gu, u, p, E) ** (1.0 / p)
    den = weighted_power_sum(psi ** (alpha / 2.0) * fv, u, p, E) ** (1.0 / p)
    if den == 0.0:
        raise ValueError("zero weighted right-hand side norm")
    return num / den


def parabolic_estimate_ratio(snapshots, f_snapshots, u0, dt, p, theta, alpha):
    """Zeroth-order parabolic inequality ratio for a time-stepped solution.

    LHS = sum_k dt * int |u^k|^p d^(theta-d-alpha p/2)
          + int |u^K|^p d^(theta-d-alpha p/2+alpha)
    RHS = sum_k dt * int |f^k|^p d^(theta-d+alpha p/2)
          + int |u0|^p d^(theta-d-alpha p/2+alpha)

    snapshots/f_snapshots are time-aligned GridFunction lists (post-initial
    steps); returns a dict with both sides and their ratio.
    """
    gf = snapshots[0]
    d = gf.domain.dim
    E_u = theta - d - alpha * p / 2.0
    E_T = E_u + alpha
    E_f = theta - d + alpha * p / 2.0
    lhs = 0.0
    for s in snapshots:
        lhs += dt * weighted_power_sum(s.values, s, p, E_u)
    lhs += weighted_power_sum(snapshots[-1].values, snapshots[-1], p, E_T)
    rhs = 0.0
    for s in f_snapshots:
        rhs += dt * weighted_power_sum(s.values, s, p, E_f)
    rhs += weighted_power_sum(u0.values, u0, p, E_T)
    if rhs == 0.0:
        raise ValueError("zero right-hand side in parabolic ratio")
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs}
