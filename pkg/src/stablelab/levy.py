"""Symmetric alpha-stable Levy measures, described by their spherical parts.

A measure is alpha together with a finite measure mu on the unit sphere,
given as a list of atoms (direction, weight) and/or a uniform density.  The
full Levy measure is the polar product  r^{-1-alpha} dr x mu(dtheta).

Normalization note: constructors here are "raw spectral" — weights are the
mu-weights and nothing else.  The rescaling that turns the raw 1D unit pair
into a fractional-Laplacian generator is applied *visibly*, either by
`fractional_laplacian_measure` or by the operator module's normalization tag;
the two conventions are never mixed silently.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._quad import legendre_rule

DIRECTION_TOL = 1e-12
WEIGHT_TOL = 1e-12


class DegenerateMeasureError(ValueError):
    pass


@dataclass
class SpectralMeasure:
    """Spherical part of a symmetric alpha-stable Levy measure.

    Parameters
    ----------
    alpha : stability index in (0, 2).
    dim : spatial dimension d >= 1.
    directions : (k, dim) array of unit vectors (renormalized on construction).
    weights : (k,) nonnegative atom weights.
    density : None, or ("uniform", total_mass) for a constant density on the
        sphere carrying the given total mass.
    """

    alpha: float
    dim: int
    directions: np.ndarray = field(default_factory=lambda: np.zeros((0, 1)))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    density: tuple | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError(f"alpha must lie in (0,2), got {self.alpha}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        self.directions = np.atleast_2d(np.asarray(self.directions, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.directions.size == 0:
            self.directions = np.zeros((0, self.dim))
        if self.directions.shape[0] != self.weights.shape[0]:
            raise ValueError("directions and weights length mismatch")
        if self.directions.shape[0] and self.directions.shape[1] != self.dim:
            raise ValueError("direction dimension mismatch")
        if np.any(self.weights < 0):
            raise ValueError("atom weights must be nonnegative")
        if self.directions.shape[0]:
            norms = np.linalg.norm(self.directions, axis=1)
            if np.any(norms == 0):
                raise ValueError("zero atom direction")
            if np.any(np.abs(norms - 1.0) > 1e-9):
                warnings.warn("renormalizing atom directions with |norm-1| > 1e-9")
            self.directions = self.directions / norms[:, None]
        if self.density is not None:
            kind, mass = self.density
            if kind != "uniform":
                raise ValueError(f"unsupported density kind {kind!r}")
            if mass < 0:
                raise ValueError("density mass must be nonnegative")
        if total_mass_unchecked(self) <= 0:
            raise DegenerateMeasureError("degenerate measure: total mass is zero")

    @property
    def n_atoms(self):
        return self.directions.shape[0]


def total_mass_unchecked(m):
    mass = float(np.sum(m.weights))
    if m.density is not None:
        mass += m.density[1]
    return mass


def total_mass(m: SpectralMeasure) -> float:
    """Total spherical mass Lambda = sum of atom weights + density mass."""
    return total_mass_unchecked(m)


def axis_measure(alpha, dim, weights=1.0):
    """Atoms at +-e_1, ..., +-e_d.

    `weights` is a scalar (all atoms equal) or a length-2d sequence ordered
    (+e_1, -e_1, +e_2, -e_2, ...).
    """
    dirs = []
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 1.0
        dirs.extend([e.copy(), -e])
    dirs = np.array(dirs)
    w = np.asarray(weights, dtype=float)
    if w.ndim == 0:
        w = np.full(2 * dim, float(w))
    if w.shape != (2 * dim,):
        raise ValueError(f"need scalar or {2 * dim} weights, got shape {w.shape}")
    return SpectralMeasure(alpha, dim, dirs, w)


def unit_pair_measure(alpha):
    """d=1 measure with atoms {(+1, 1), (-1, 1)}: the polar form of |y|^{-1-alpha} dy."""
    return axis_measure(alpha, 1, 1.0)


def uniform_measure(alpha, dim, mass=1.0):
    """Rotation-invariant measure of the given total mass (d=1: two equal atoms)."""
    if dim == 1:
        return axis_measure(alpha, 1, mass / 2.0)
    return SpectralMeasure(alpha, dim, np.zeros((0, dim)), np.zeros(0), ("uniform", mass))


def fractional_laplacian_measure(alpha):
    """d=1 measure whose raw operator equals -pi (-Delta)^{alpha/2}.

    The raw unit pair has Fourier symbol -c(alpha)|xi|^alpha with
    c(alpha) = pi / (sin(pi alpha/2) Gamma(1+alpha)); rescaling the weights by
    s(alpha) = pi / c(alpha) makes the symbol exactly -pi |xi|^alpha.
    """
    from .kernels import fl_scale

    return axis_measure(alpha, 1, fl_scale(alpha))


def scale_weights(m, c):
    """New measure with all weights (and density mass) multiplied by c > 0."""
    if c <= 0:
        raise ValueError("scale must be positive")
    density = None if m.density is None else (m.density[0], m.density[1] * c)
    return SpectralMeasure(m.alpha, m.dim, m.directions.copy(), m.weights * c, density)


def is_symmetric(m, tol=WEIGHT_TOL):
    """True iff the atom set is closed under negation with equal weights
    (uniform densities are symmetric by construction)."""
    for i in range(m.n_atoms):
        diff = np.linalg.norm(m.directions + m.directions[i], axis=1)
        j = int(np.argmin(diff)) if m.n_atoms else -1
        if m.n_atoms == 0 or diff[j] > 1e-9:
            return False
        if abs(m.weights[i] - m.weights[j]) > tol * max(1.0, m.weights[i]):
            return False
    return True


def symmetrize(m):
    """Average mu with its reflection: atoms become (mu(theta)+mu(-theta))/2."""
    dirs = np.vstack([m.directions, -m.directions]) if m.n_atoms else m.directions
    ws = np.concatenate([m.weights, m.weights]) / 2.0 if m.n_atoms else m.weights
    # merge duplicate directions
    merged_dirs, merged_ws = [], []
    for d, w in zip(dirs, ws):
        for k, md in enumerate(merged_dirs):
            if np.linalg.norm(md - d) <= 1e-9:
                merged_ws[k] += w
                break
        else:
            merged_dirs.append(d)
            merged_ws.append(w)
    dirs = np.array(merged_dirs) if merged_dirs else np.zeros((0, m.dim))
    return SpectralMeasure(m.alpha, m.dim, dirs, np.array(merged_ws), m.density)


def sphere_grid(dim, resolution):
    """Deterministic unit-vector grid: {+-1} (d=1), uniform angles (d=2),
    Fibonacci lattice (d>=3)."""
    if resolution < 16 and dim > 1:
        raise ValueError("sphere_resolution must be >= 16")
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        phi = 2.0 * np.pi * np.arange(resolution) / resolution
        return np.column_stack([np.cos(phi), np.sin(phi)])
    n = resolution
    k = np.arange(n, dtype=float)
    golden = (1.0 + np.sqrt(5.0)) / 2.0
    z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = 2.0 * np.pi * k / golden
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    if dim != 3:
        raise NotImplementedError("sphere grids implemented for d <= 3")
    return pts


def _uniform_density_alpha_average(alpha, dim, n=2048):
    """Average of |e . theta|^alpha over the unit sphere (any fixed e)."""
    if dim == 2:
        phi = 2.0 * np.pi * np.arange(n) / n
        return float(np.mean(np.abs(np.cos(phi)) ** alpha))
    # d >= 3: average of |cos(phi)|^alpha wrt sin^{d-2} measure on [0, pi]
    x, w = legendre_rule(200)
    phi = 0.5 * np.pi * (x + 1.0)
    sin_pow = np.sin(phi) ** (dim - 2)
    num = np.sum(w * np.abs(np.cos(phi)) ** alpha * sin_pow)
    den = np.sum(w * sin_pow)
    return float(num / den)


def directional_alpha_integral(m, rho):
    """int |theta . rho|^alpha mu(dtheta): atoms summed exactly, uniform density
    by its rotation-invariant average."""
    rho = np.asarray(rho, dtype=float).ravel()
    total = 0.0
    if m.n_atoms:
        total += float(np.sum(m.weights * np.abs(m.directions @ rho) ** m.alpha))
    if m.density is not None:
        total += m.density[1] * _uniform_density_alpha_average(m.alpha, m.dim)
    return total


def nondegeneracy_lambda(m, sphere_resolution=256):
    """Grid minimum over rho of int |rho . theta|^alpha mu(dtheta).

    The true infimum is <= the returned value, and the value is nonincreasing
    when the grid is refined by an integer factor (the coarse grid is a subset
    of the fine one).
    """
    if total_mass(m) <= 0:
        raise DegenerateMeasureError("degenerate measure")
    grid = sphere_grid(m.dim, sphere_resolution)
    density_part = 0.0
    if m.density is not None:
        density_part = m.density[1] * _uniform_density_alpha_average(m.alpha, m.dim)
    if m.n_atoms:
        vals = np.abs(grid @ m.directions.T) ** m.alpha @ m.weights
    else:
        vals = np.zeros(grid.shape[0])
    return float(np.min(vals) + density_part)


def quadrature_atoms(m, n_angular=64):
    """Atomic discretization of the measure for radial-by-direction quadrature:
    true atoms plus the uniform density split over a symmetric angle grid."""
    dirs = [m.directions] if m.n_atoms else []
    ws = [m.weights] if m.n_atoms else []
    if m.density is not None:
        if m.dim != 2:
            raise NotImplementedError("density quadrature atoms implemented for d=2")
        n = n_angular + (n_angular % 2)  # even, so the grid is symmetric
        phi = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        dirs.append(np.column_stack([np.cos(phi), np.sin(phi)]))
        ws.append(np.full(n, m.density[1] / n))
    return np.vstack(dirs), np.concatenate(ws)


@dataclass
class LevyFamily:
    """Piecewise-constant-in-time measure with a declared lower envelope.

    breakpoints = [t_0=0, t_1, ..., t_K]; pieces[k] is active on (t_k, t_{k+1}].
    """

    breakpoints: list
    pieces: list
    lower_envelope: SpectralMeasure

    def __post_init__(self):
        bp = list(self.breakpoints)
        if len(bp) != len(self.pieces) + 1:
            raise ValueError("need len(breakpoints) == len(pieces) + 1")
        if any(b2 <= b1 for b1, b2 in zip(bp[:-1], bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        alphas = {p.alpha for p in self.pieces} | {self.lower_envelope.alpha}
        dims = {p.dim for p in self.pieces} | {self.lower_envelope.dim}
        if len(alphas) != 1 or len(dims) != 1:
            raise ValueError("all pieces and the envelope must share alpha and dim")

    @property
    def alpha(self):
        return self.lower_envelope.alpha

    def piece_index_at(self, t):
        # piece k is active on (t_k, t_{k+1}]; clamp outside [t_0, t_K]
        k = int(np.searchsorted(self.breakpoints, t, side="left")) - 1
        return min(max(k, 0), len(self.pieces) - 1)

    def piece_at(self, t):
        return self.pieces[self.piece_index_at(t)]


def check_envelope(f: LevyFamily):
    """Verify every piece dominates the envelope atom-by-atom (and density mass).

    Returns (ok, report) where report lists any offending (piece, atom).
    """
    env = f.lower_envelope
    failures = []
    for k, piece in enumerate(f.pieces):
        for i in range(env.n_atoms):
            diff = np.linalg.norm(piece.directions - env.directions[i], axis=1)
            j = int(np.argmin(diff)) if piece.n_atoms else -1
            if piece.n_atoms == 0 or diff[j] > 1e-9:
                failures.append((k, i, "missing direction"))
            elif piece.weights[j] < env.weights[i] - WEIGHT_TOL:
                failures.append((k, i, f"weight {piece.weights[j]} < {env.weights[i]}"))
        if env.density is not None:
            pd = 0.0 if piece.density is None else piece.density[1]
            if pd < env.density[1] - WEIGHT_TOL:
                failures.append((k, -1, f"density mass {pd} < {env.density[1]}"))
    return (not failures), {"failures": failures}


def measure_to_json(m):
    return json.dumps(
        {
            "alpha": m.alpha,
            "dim": m.dim,
            "atoms": [
                {"dir": list(map(float, d)), "w": float(w)}
                for d, w in zip(m.directions, m.weights)
            ],
            "density": {"kind": "none"}
            if m.density is None
            else {"kind": m.density[0], "mass": m.density[1]},
        }
    )


def measure_from_json(text):
    obj = json.loads(text)
    atoms = obj.get("atoms", [])
    dirs = np.array([a["dir"] for a in atoms]) if atoms else np.zeros((0, obj["dim"]))
    ws = np.array([a["w"] for a in atoms]) if atoms else np.zeros(0)
    density = obj.get("density", {"kind": "none"})
    dens = None if density.get("kind", "none") == "none" else ("uniform", density["mass"])
    return SpectralMeasure(obj["alpha"], obj["dim"], dirs, ws, dens)
