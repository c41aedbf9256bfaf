"""Monte Carlo for symmetric stable processes with atomic spectral measures,
killed at domain exit.

Each +-theta atom pair with per-side weight w drives an independent 1D
symmetric alpha-stable increment along theta.  The per-step scale is

    sigma = (w_eff * c(alpha) * dt)^(1/alpha),      c(alpha) = pi / (sin(pi alpha / 2) Gamma(1 + alpha)),

where w_eff includes the operator normalization tag — this makes the step
characteristic function exp(dt * symbol) for the measure's symbol
-sum_pairs w_eff c(alpha) |xi . theta|^alpha, i.e. the paths have exactly the
generator evaluated by the operators module (verified by empirical_cf_check).
Standard 1D variables come from the Chambers-Mallows-Stuck transform.

Randomness is counter-based: block b of paths uses Philox key (seed, b), so
path results are reproducible regardless of scheduling or path count.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .kernels import fl_scale, symbol_constant
from .levy import is_symmetric

_BLOCK = 16384
_T_MAX = 50.0


class UnsupportedMeasureError(ValueError):
    pass


@dataclass
class PathConfig:
    measure: object
    dt: float
    seed: int
    n_paths: int
    domain: object
    normalization: str = "raw"

    def __post_init__(self):
        if self.measure.density is not None:
            raise UnsupportedMeasureError("path sampling needs an atoms-only measure")
        if not is_symmetric(self.measure):
            raise ValueError("measure must be symmetric")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_paths < 1000:
            raise ValueError("need at least 10^3 paths")
        if self.normalization not in ("raw", "fractional_laplacian"):
            raise ValueError("unknown normalization tag")

    def pairs(self):
        """(directions (k, d), per-side effective weights (k,)) with each
        +-theta pair listed once."""
        dirs = np.atleast_2d(np.asarray(self.measure.directions, dtype=float))
        ws = np.asarray(self.measure.weights, dtype=float)
        if self.normalization == "fractional_laplacian":
            ws = ws * fl_scale(self.measure.alpha)
        used = np.zeros(len(ws), dtype=bool)
        out_d, out_w = [], []
        for i in range(len(ws)):
            if used[i]:
                continue
            diff = np.linalg.norm(dirs + dirs[i], axis=1)
            j = int(np.argmin(np.where(used, np.inf, diff)))
            if diff[j] > 1e-9 or used[j]:
                raise ValueError("atoms are not closed under negation")
            used[i] = used[j] = True
            out_d.append(dirs[i])
            out_w.append(0.5 * (ws[i] + ws[j]))
        return np.array(out_d), np.array(out_w)

    def step_scales(self, dt):
        dirs, ws = self.pairs()
        alpha = self.measure.alpha
        return dirs, (ws * symbol_constant(alpha) * dt) ** (1.0 / alpha)

    def symbol(self, xi):
        """The generator's Fourier symbol at frequency xi (a negative number)."""
        dirs, ws = self.pairs()
        alpha = self.measure.alpha
        proj = np.abs(dirs @ np.atleast_1d(np.asarray(xi, dtype=float)))
        return -float(np.sum(ws * symbol_constant(alpha) * proj**alpha))


def _block_rng(seed, block):
    return np.random.Generator(
        np.random.Philox(key=np.array([seed, block], dtype=np.uint64))
    )


def _standard_stable(alpha, rng, n):
    """Symmetric standard alpha-stable (CF exp(-|xi|^alpha)), CMS transform."""
    V = rng.uniform(-math.pi / 2.0, math.pi / 2.0, n)
    if abs(alpha - 1.0) < 1e-12:
        return np.tan(V)
    W = rng.standard_exponential(n)
    return (
        np.sin(alpha * V)
        / np.cos(V) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * V) / W) ** ((1.0 - alpha) / alpha)
    )


def sample_increments(cfg, dt, rng, n):
    """n displacement vectors for one time step of length dt, shape (n, d)."""
    alpha = cfg.measure.alpha
    dirs, sigmas = cfg.step_scales(dt)
    out = np.zeros((n, cfg.measure.dim))
    if dt == 0.0:
        return out
    for theta, sigma in zip(dirs, sigmas):
        out += np.multiply.outer(sigma * _standard_stable(alpha, rng, n), theta)
    return out


def sample_increment(cfg, dt, rng):
    """A single displacement vector (see sample_increments)."""
    return sample_increments(cfg, dt, rng, 1)[0]


def empirical_cf_check(cfg, frequencies, n_samples=100_000, dt=None):
    """Empirical characteristic function of one increment vs exp(dt * symbol),
    at the given frequency vectors; a z-score <= 3 per frequency passes."""
    dt = cfg.dt if dt is None else dt
    rng = _block_rng(cfg.seed, 0)
    inc = sample_increments(cfg, dt, rng, n_samples)
    rows = []
    for xi in frequencies:
        xi_vec = np.atleast_1d(np.asarray(xi, dtype=float))
        phase = inc @ xi_vec
        emp = float(np.mean(np.cos(phase)))
        se = float(np.std(np.cos(phase), ddof=1) / math.sqrt(n_samples))
        target = math.exp(dt * cfg.symbol(xi_vec))
        z = abs(emp - target) / se if se > 0 else math.inf
        rows.append({"xi": xi, "empirical": emp, "target": target,
                     "stderr": se, "z": z})
    return {"rows": rows, "max_z": max(r["z"] for r in rows),
            "passed": all(r["z"] <= 3.0 for r in rows)}


def _position_array(cfg, x, n):
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    return np.tile(x_arr, (n, 1))


def _contains(domain, X):
    if domain.dim == 1:
        return domain.contains(X[:, 0])
    return domain.contains(X)


def killed_semigroup(cfg, f, t, x):
    """E[f(x + X_t); paths alive at t], with exit checked after every step.

    Returns (estimate, stderr).  t = 0 gives f(x) exactly; x outside D gives 0.
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if not bool(np.all(_contains(cfg.domain, x_arr[None, :]))):
        return 0.0, 0.0
    if t == 0.0:
        fx = f(x_arr[:1]) if cfg.domain.dim == 1 else f(x_arr[None, :])
        return float(np.ravel(fx)[0]), 0.0
    K = int(round(t / cfg.dt))
    if abs(K * cfg.dt - t) > 1e-9 * max(t, 1.0):
        raise ValueError("dt must divide t")
    alpha = cfg.measure.alpha
    dirs, sigmas = cfg.step_scales(cfg.dt)
    samples = np.empty(cfg.n_paths)
    done = 0
    block = 0
    while done < cfg.n_paths:
        nb = min(_BLOCK, cfg.n_paths - done)
        rng = _block_rng(cfg.seed, block)
        # dead paths are dropped from the working arrays; idx maps back
        X = _position_array(cfg, x_arr, nb)
        idx = np.arange(nb)
        vals = np.zeros(nb)
        for _ in range(K):
            if len(idx) == 0:
                break
            for theta, sigma in zip(dirs, sigmas):
                X += np.multiply.outer(
                    sigma * _standard_stable(alpha, rng, len(idx)), theta
                )
            still = _contains(cfg.domain, X)
            X = X[still]
            idx = idx[still]
        if len(idx):
            pos = X[:, 0] if cfg.domain.dim == 1 else X
            vals[idx] = np.asarray(f(pos), dtype=float)
        samples[done : done + nb] = vals
        done += nb
        block += 1
    est = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(cfg.n_paths))
    return est, se


def elliptic_representation(cfg, f, x, t_max=_T_MAX):
    """u(x) = -E[ int_0^kappa f(x + X_s) ds ]  by left-endpoint path-time
    quadrature, with exit checked after every step.

    Returns a report dict with the estimate, stderr, exit-time moments, and
    the fraction of paths truncated at t_max (a warning if positive).
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if not bool(np.all(_contains(cfg.domain, x_arr[None, :]))):
        return {"estimate": 0.0, "stderr": 0.0, "kappa_mean": 0.0,
                "kappa_sq_mean": 0.0, "kappa_sq_half_mean": 0.0,
                "kappa_sq_stderr": 0.0, "truncated_fraction": 0.0}
    alpha = cfg.measure.alpha
    dirs, sigmas = cfg.step_scales(cfg.dt)
    K_max = int(round(t_max / cfg.dt))
    acc_all = np.empty(cfg.n_paths)
    kappa_all = np.empty(cfg.n_paths)
    truncated = 0
    done = 0
    block = 0
    while done < cfg.n_paths:
        nb = min(_BLOCK, cfg.n_paths - done)
        rng = _block_rng(cfg.seed, block)
        # dead paths are dropped from the working arrays; idx maps back
        X = _position_array(cfg, x_arr, nb)
        idx = np.arange(nb)
        acc_live = np.zeros(nb)
        acc = np.zeros(nb)
        kappa = np.full(nb, K_max * cfg.dt)
        for k in range(K_max):
            if len(idx) == 0:
                break
            pos = X[:, 0] if cfg.domain.dim == 1 else X
            acc_live += cfg.dt * np.asarray(f(pos), dtype=float)
            for theta, sigma in zip(dirs, sigmas):
                X += np.multiply.outer(
                    sigma * _standard_stable(alpha, rng, len(idx)), theta
                )
            still = _contains(cfg.domain, X)
            if not np.all(still):
                dead = idx[~still]
                acc[dead] = acc_live[~still]
                kappa[dead] = (k + 1) * cfg.dt
                X, idx, acc_live = X[still], idx[still], acc_live[still]
        truncated += len(idx)
        acc[idx] = acc_live
        acc_all[done : done + nb] = acc
        kappa_all[done : done + nb] = kappa
        done += nb
        block += 1
    if truncated:
        warnings.warn(
            f"{truncated} of {cfg.n_paths} paths still alive at t_max={t_max}; "
            "occupation integral truncated",
            RuntimeWarning,
        )
    est = -float(np.mean(acc_all))
    se = float(np.std(acc_all, ddof=1) / math.sqrt(cfg.n_paths))
    k2 = kappa_all**2
    return {
        "estimate": est,
        "stderr": se,
        "kappa_mean": float(np.mean(kappa_all)),
        "kappa_sq_mean": float(np.mean(k2)),
        "kappa_sq_half_mean": float(np.mean(k2[: cfg.n_paths // 2])),
        "kappa_sq_stderr": float(np.std(k2, ddof=1) / math.sqrt(cfg.n_paths)),
        "truncated_fraction": truncated / cfg.n_paths,
    }
