"""Ground-truth spatio-temporal fields and the sensing function.

Two world flavours share the ``values(X, t)`` interface: a seeded
artificial generator superposing drifting sinusoids and gamma-shaped bumps
across a wide range of spatial scales, and a gridded dataset loaded from
CSV with bilinear-in-space / linear-in-time interpolation.  The module also
provides the simulated sensor (observation noise plus optional
localisation error) and the dense-resampling construction of the reference
hyper-parameter distribution used by the evaluation metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .belief import AdaptationConfig, Snapshot, default_belief_bounds, mcmc_hyperparams
from .mixture import GaussianMixture, fit_gm
from .seeds import child_seed


class GridRangeError(ValueError):
    """Dataset query outside the convex hull of the grid axes."""


# ---------------------------------------------------------------------------
# Artificial multi-scale field
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArtificialFieldSpec:
    """Seeded recipe for the drifting multi-scale generator."""

    bounds: tuple[float, float, float, float]
    n_components: int = 220
    seed: int = 0
    amp_range: tuple[float, float] = (0.3, 1.0)
    wavelength_frac: tuple[float, float] = (0.02, 1.0)   # sinusoid wavelengths / extent
    bump_scale_frac: tuple[float, float] = (0.01, 0.2)   # gamma scales / extent
    bump_shape: tuple[float, float] = (2.0, 6.0)
    drift_frac: float = 0.0005                           # max drift speed / extent per s
    spectral_slope: float = 0.8                          # amplitude ~ (scale / max scale)^slope
    scale_gradient: float = 0.0                          # >0: bump scales shrink across x (nonstationary)

    def to_json_dict(self) -> dict:
        return {
            "kind": "artificial",
            "bounds": list(self.bounds),
            "n_components": self.n_components,
            "seed": self.seed,
            "amp_range": list(self.amp_range),
            "wavelength_frac": list(self.wavelength_frac),
            "bump_scale_frac": list(self.bump_scale_frac),
            "bump_shape": list(self.bump_shape),
            "drift_frac": self.drift_frac,
            "spectral_slope": self.spectral_slope,
            "scale_gradient": self.scale_gradient,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ArtificialFieldSpec":
        return cls(
            bounds=tuple(doc["bounds"]),
            n_components=doc.get("n_components", 220),
            seed=doc.get("seed", 0),
            amp_range=tuple(doc.get("amp_range", (0.3, 1.0))),
            wavelength_frac=tuple(doc.get("wavelength_frac", (0.02, 1.0))),
            bump_scale_frac=tuple(doc.get("bump_scale_frac", (0.01, 0.2))),
            bump_shape=tuple(doc.get("bump_shape", (2.0, 6.0))),
            drift_frac=doc.get("drift_frac", 0.0005),
            spectral_slope=doc.get("spectral_slope", 0.8),
            scale_gradient=doc.get("scale_gradient", 0.0),
        )


def _log_uniform(rng, lo, hi, size):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size=size))


class ArtificialField:
    """Deterministic superposition of drifting sinusoids and gamma bumps."""

    def __init__(self, spec: ArtificialFieldSpec):
        self.spec = spec
        xmin, xmax, ymin, ymax = spec.bounds
        extent = max(xmax - xmin, ymax - ymin)
        rng = np.random.default_rng(spec.seed)
        m = spec.n_components
        n_sin = m - m // 2
        n_bump = m // 2

        wl = _log_uniform(rng, spec.wavelength_frac[0] * extent,
                          spec.wavelength_frac[1] * extent, n_sin)
        ang = rng.uniform(0.0, 2.0 * math.pi, n_sin)
        self.omega = (2.0 * math.pi / wl)[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
        self.phase = rng.uniform(0.0, 2.0 * math.pi, n_sin)
        self.sin_amp = rng.uniform(*spec.amp_range, n_sin) \
            * (wl / (spec.wavelength_frac[1] * extent)) ** spec.spectral_slope
        self.sin_vel = self._drift(rng, n_sin, extent)

        self.bump_center = np.column_stack([
            rng.uniform(xmin, xmax, n_bump), rng.uniform(ymin, ymax, n_bump)])
        self.bump_shape = rng.uniform(*spec.bump_shape, n_bump)
        self.bump_scale = _log_uniform(rng, spec.bump_scale_frac[0] * extent,
                                       spec.bump_scale_frac[1] * extent, n_bump)
        if spec.scale_gradient:
            # nonstationarity: bumps sharpen toward the high-x side
            u = (self.bump_center[:, 0] - xmin) / (xmax - xmin)
            self.bump_scale = self.bump_scale * np.exp(-spec.scale_gradient * u)
        self.bump_amp = rng.uniform(*spec.amp_range, n_bump) * rng.choice([-1.0, 1.0], n_bump) \
            * (self.bump_scale / (spec.bump_scale_frac[1] * extent)) ** spec.spectral_slope
        self.bump_vel = self._drift(rng, n_bump, extent)

    def _drift(self, rng, n, extent):
        speed = rng.uniform(0.0, self.spec.drift_frac * extent, n)
        ang = rng.uniform(0.0, 2.0 * math.pi, n)
        return speed[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])

    def values(self, X, t) -> np.ndarray:
        """Field value at locations X (n, 2) and time t (scalar or (n,))."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), X.shape[0]).astype(float)
        out = np.zeros(X.shape[0])
        for j in range(self.omega.shape[0]):
            shifted = X - t[:, None] * self.sin_vel[j]
            out += self.sin_amp[j] * np.sin(shifted @ self.omega[j] + self.phase[j])
        for j in range(self.bump_center.shape[0]):
            d = X - self.bump_center[j] - t[:, None] * self.bump_vel[j]
            r = np.hypot(d[:, 0], d[:, 1])
            out += self.bump_amp[j] * self._bump(r, self.bump_shape[j], self.bump_scale[j])
        return out

    @staticmethod
    def _bump(r, k, s):
        """Gamma-density shape normalised to peak 1 at its mode r = (k-1) s."""
        rm = (k - 1.0) * s
        with np.errstate(divide="ignore"):
            logg = (k - 1.0) * (np.log(r) - math.log(rm)) - (r - rm) / s
        return np.where(r > 0, np.exp(logg), 0.0)

    def lipschitz_bounds(self) -> tuple[float, float]:
        """(spatial, temporal) Lipschitz constants summed over components."""
        space = 0.0
        time = 0.0
        for j in range(self.omega.shape[0]):
            w = float(np.hypot(*self.omega[j]))
            space += self.sin_amp[j] * w
            time += self.sin_amp[j] * w * float(np.hypot(*self.sin_vel[j]))
        for j in range(self.bump_center.shape[0]):
            k, s = self.bump_shape[j], self.bump_scale[j]
            rm = (k - 1.0) * s
            slope = 0.0
            for r in (rm - s * math.sqrt(k - 1.0), rm + s * math.sqrt(k - 1.0)):
                if r > 0:
                    g = math.exp((k - 1.0) * (math.log(r) - math.log(rm)) - (r - rm) / s)
                    slope = max(slope, abs(g * ((k - 1.0) / r - 1.0 / s)))
            b = abs(self.bump_amp[j]) * slope
            space += b
            time += b * float(np.hypot(*self.bump_vel[j]))
        return space, time

    def estimate_std(self, n: int = 512, seed: int = 0, t_max: float = 0.0) -> float:
        """Sample std of the field over random locations (and times)."""
        rng = np.random.default_rng(seed)
        xmin, xmax, ymin, ymax = self.spec.bounds
        X = rng.uniform([xmin, ymin], [xmax, ymax], size=(n, 2))
        t = rng.uniform(0.0, t_max, n) if t_max > 0 else 0.0
        return float(np.std(self.values(X, t)))


# ---------------------------------------------------------------------------
# Gridded dataset
# ---------------------------------------------------------------------------


class GridDataset:
    """Rectilinear (x, y, t) grid of values with interpolation."""

    def __init__(self, x_axis, y_axis, t_axis, values):
        self.x_axis = np.asarray(x_axis, dtype=float)
        self.y_axis = np.asarray(y_axis, dtype=float)
        self.t_axis = np.asarray(t_axis, dtype=float)
        self.grid = np.asarray(values, dtype=float)
        shape = (self.x_axis.size, self.y_axis.size, self.t_axis.size)
        if self.grid.shape != shape:
            raise ValueError(f"values shape {self.grid.shape} does not match axes {shape}")
        for ax in (self.x_axis, self.y_axis, self.t_axis):
            if ax.size < 1 or (ax.size > 1 and not np.all(np.diff(ax) > 0)):
                raise ValueError("axes must be strictly increasing")
        if not np.all(np.isfinite(self.grid)):
            raise ValueError("grid values must be finite")

    @classmethod
    def from_csv(cls, path) -> "GridDataset":
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().strip()
            if header != "x,y,t,value":
                raise ValueError(f"expected header 'x,y,t,value', got {header!r}")
            rows = np.loadtxt(fh, delimiter=",", ndmin=2)
        if rows.shape[1] != 4:
            raise ValueError("dataset rows must have 4 columns")
        x_axis = np.unique(rows[:, 0])
        y_axis = np.unique(rows[:, 1])
        t_axis = np.unique(rows[:, 2])
        n = x_axis.size * y_axis.size * t_axis.size
        if rows.shape[0] != n:
            raise ValueError(f"grid incomplete: {rows.shape[0]} rows for {n} nodes")
        grid = np.full((x_axis.size, y_axis.size, t_axis.size), np.nan)
        ix = np.searchsorted(x_axis, rows[:, 0])
        iy = np.searchsorted(y_axis, rows[:, 1])
        it = np.searchsorted(t_axis, rows[:, 2])
        grid[ix, iy, it] = rows[:, 3]
        if np.any(np.isnan(grid)):
            raise ValueError("grid incomplete: duplicate rows leave unfilled nodes")
        return cls(x_axis, y_axis, t_axis, grid)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("x,y,t,value\n")
            for i, x in enumerate(self.x_axis):
                for j, y in enumerate(self.y_axis):
                    for k, t in enumerate(self.t_axis):
                        fh.write(f"{float(x)!r},{float(y)!r},{float(t)!r},"
                                 f"{float(self.grid[i, j, k])!r}\n")

    def _locate(self, axis: np.ndarray, q: np.ndarray, name: str):
        if np.any(q < axis[0]) or np.any(q > axis[-1]):
            raise GridRangeError(f"{name} query outside [{axis[0]}, {axis[-1]}]")
        if axis.size == 1:
            return np.zeros(q.shape, dtype=int), np.zeros_like(q)
        idx = np.clip(np.searchsorted(axis, q, side="right") - 1, 0, axis.size - 2)
        w = (q - axis[idx]) / (axis[idx + 1] - axis[idx])
        return idx, w

    def values(self, X, t) -> np.ndarray:
        """Bilinear-in-space, linear-in-time interpolation."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), X.shape[0]).astype(float)
        ix, wx = self._locate(self.x_axis, X[:, 0], "x")
        iy, wy = self._locate(self.y_axis, X[:, 1], "y")
        it, wt = self._locate(self.t_axis, t, "t")
        ix1 = np.minimum(ix + 1, self.x_axis.size - 1)
        iy1 = np.minimum(iy + 1, self.y_axis.size - 1)
        it1 = np.minimum(it + 1, self.t_axis.size - 1)
        out = np.zeros(X.shape[0])
        for dx, fx in ((ix, 1.0 - wx), (ix1, wx)):
            for dy, fy in ((iy, 1.0 - wy), (iy1, wy)):
                for dt, ft in ((it, 1.0 - wt), (it1, wt)):
                    out = out + self.grid[dx, dy, dt] * (fx * fy * ft)
        return out


# ---------------------------------------------------------------------------
# Sensor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SensorModel:
    """Observation noise and optional localisation error, both std-devs."""

    noise_std: float = 0.0
    localization_std: float = 0.0

    def __post_init__(self):
        if self.noise_std < 0 or self.localization_std < 0:
            raise ValueError("sensor std-devs must be non-negative")


def sense(world, x_commanded, t: float, sensor: SensorModel, seed):
    """One observation: returns (value, actual location).

    The actual location wobbles around the commanded one by the
    localisation error; the value is the field at the actual location plus
    observation noise.  Deterministic given the seed.
    """
    rng = np.random.default_rng(seed)
    x_cmd = np.asarray(x_commanded, dtype=float).reshape(2)
    x_act = x_cmd + sensor.localization_std * rng.standard_normal(2)
    y = float(world.values(x_act.reshape(1, 2), t)[0])
    y += sensor.noise_std * rng.standard_normal()
    return y, x_act


# ---------------------------------------------------------------------------
# Reference hyper-parameter distribution (evaluation only)
# ---------------------------------------------------------------------------


def oracle_posterior_gm(world, region, t: float, k: int, seed,
                        n_dense: int = 200, p: int = 1000, burn_in: int = 500,
                        thin: int = 1, proposal_std: float = 0.2,
                        bounds: np.ndarray | None = None,
                        reg_floor: float = 1e-6,
                        noise_std: float = 0.0) -> GaussianMixture:
    """Reference distribution over log hyper-parameters at time t.

    Densely samples the field, runs a wide-start MH chain on that batch,
    and fits a k-component mixture to the chain.  Pass the experiment's
    observation noise as noise_std so the reference reflects the same
    sensing process the robots use.  Evaluation convention only; robots
    never see this.
    """
    rng = np.random.default_rng(child_seed(seed, "dense"))
    X = region.uniform_sample(n_dense, rng)
    y = world.values(X, t)
    if noise_std > 0:
        y = y + noise_std * rng.standard_normal(n_dense)
    if bounds is None:
        std = max(float(np.std(y)), 1e-6)
        bounds = default_belief_bounds(std, region.extent)
    start = np.asarray(bounds, dtype=float).mean(axis=1)
    cfg = AdaptationConfig(p=p, k=k, burn_in=burn_in, thin=thin,
                           proposal_std=proposal_std, reg_floor=reg_floor)
    samples, _, _ = mcmc_hyperparams(
        Snapshot(X=X, y=y), start, cfg, child_seed(seed, "chain"))
    return fit_gm(samples, k, reg_floor, child_seed(seed, "fit"))
