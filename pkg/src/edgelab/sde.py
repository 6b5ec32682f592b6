"""Market-model simulators: geometric price with a mean-reverting risk premium,
a trending mean-reverting level, and plain geometric Brownian motion as control.

All schemes use exact transition densities where they exist (OU and log-normal
steps), so refining the grid does not change per-step distributions.  In the
joint price/premium model the premium entering the price drift is frozen at
its start-of-step value, an O(dt) approximation; the two driving noises are
independent.

Each path owns derived random streams keyed by its index, so a batch of paths
is bit-identical to simulating them one at a time in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Path, PathBundle, Seed, derive_stream, standard_normals

DEFAULT_HORIZON_YEARS = 10.0
DEFAULT_STEPS = 2500


@dataclass(frozen=True)
class StochasticDriftParams:
    """Joint dynamics: dS/S = (r + sigma * lam) dt + sigma dW,
    dlam = kappa (lambda_hat - lam) dt + sigma_hat dW_hat, with W and W_hat independent."""

    r: float
    sigma: float
    kappa: float
    lambda_hat: float
    sigma_hat: float
    lambda0: float
    s0: float

    def __post_init__(self) -> None:
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.kappa <= 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.sigma_hat < 0.0:
            raise ValueError(f"sigma_hat must be non-negative, got {self.sigma_hat}")
        if self.s0 <= 0.0:
            raise ValueError(f"initial price must be positive, got {self.s0}")


@dataclass(frozen=True)
class TrendOUParams:
    """Level dynamics dS = (mu - kappa (S - mu t)) dt + sigma dW: the deviation
    from the trend line mu*t reverts at rate kappa."""

    mu: float
    kappa: float
    sigma: float
    s0: float

    def __post_init__(self) -> None:
        if self.kappa <= 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class GridSpec:
    """Uniform time grid on [0, t_end] years with n_steps steps."""

    t_end: float = DEFAULT_HORIZON_YEARS
    n_steps: int = DEFAULT_STEPS

    def __post_init__(self) -> None:
        if self.t_end <= 0.0:
            raise ValueError(f"horizon must be positive, got {self.t_end}")
        if self.n_steps < 1:
            raise ValueError(f"need at least one step, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)


def ou_step_exact(x, mean: float, kappa: float, vol: float, dt: float, z):
    """One exact mean-reverting transition (not an Euler step).

    Returns mean + (x - mean) e^{-kappa dt} + vol sqrt((1 - e^{-2 kappa dt}) / (2 kappa)) z.
    Broadcasts over array-valued x and z.
    """
    if kappa <= 0.0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    decay = math.exp(-kappa * dt)
    step_sd = vol * math.sqrt(-math.expm1(-2.0 * kappa * dt) / (2.0 * kappa))
    return mean + (x - mean) * decay + step_sd * z


def _path_noise(seed: Seed, n_paths: int, n_steps: int, label: str, first_index: int) -> np.ndarray:
    """Stack per-path normal draws; row i comes from the stream of global path
    index first_index + i regardless of batching."""
    rows = np.empty((n_paths, n_steps), dtype=np.float64)
    for i in range(n_paths):
        child = derive_stream(seed, f"path:{first_index + i}")
        rows[i] = standard_normals(derive_stream(child, label), n_steps)
    return rows


def _stochastic_drift_core(
    params: StochasticDriftParams, grid: GridSpec, z_price: np.ndarray, z_lam: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    n_paths, n_steps = z_price.shape
    dt = grid.dt
    sqrt_dt = math.sqrt(dt)
    decay = math.exp(-params.kappa * dt)
    lam_sd = params.sigma_hat * math.sqrt(-math.expm1(-2.0 * params.kappa * dt) / (2.0 * params.kappa))

    lam = np.empty((n_paths, n_steps + 1), dtype=np.float64)
    log_s = np.empty((n_paths, n_steps + 1), dtype=np.float64)
    lam[:, 0] = params.lambda0
    log_s[:, 0] = math.log(params.s0)
    half_var = 0.5 * params.sigma**2
    for j in range(n_steps):
        lam_j = lam[:, j]
        log_s[:, j + 1] = (
            log_s[:, j]
            + (params.r + params.sigma * lam_j - half_var) * dt
            + params.sigma * sqrt_dt * z_price[:, j]
        )
        lam[:, j + 1] = params.lambda_hat + (lam_j - params.lambda_hat) * decay + lam_sd * z_lam[:, j]
    return np.exp(log_s), lam


def simulate_stochastic_drift_paths(
    params: StochasticDriftParams,
    grid: GridSpec,
    seed: Seed,
    n_paths: int,
    first_index: int = 0,
) -> tuple[PathBundle, PathBundle]:
    """Simulate n_paths joint (price, risk premium) paths on the grid."""
    z_price = _path_noise(seed, n_paths, grid.n_steps, "dW", first_index)
    z_lam = _path_noise(seed, n_paths, grid.n_steps, "dWhat", first_index)
    prices, lams = _stochastic_drift_core(params, grid, z_price, z_lam)
    times = grid.times()
    return PathBundle(times, prices), PathBundle(times, lams)


def simulate_stochastic_drift(
    params: StochasticDriftParams, grid: GridSpec, seed: Seed
) -> tuple[Path, Path]:
    """Single joint (price, risk premium) path; see the module note on schemes."""
    z_price = standard_normals(derive_stream(seed, "dW"), grid.n_steps)[None, :]
    z_lam = standard_normals(derive_stream(seed, "dWhat"), grid.n_steps)[None, :]
    prices, lams = _stochastic_drift_core(params, grid, z_price, z_lam)
    times = grid.times()
    return Path(times, prices[0]), Path(times, lams[0])


def _trend_ou_core(params: TrendOUParams, grid: GridSpec, z: np.ndarray) -> np.ndarray:
    n_paths, n_steps = z.shape
    dt = grid.dt
    decay = math.exp(-params.kappa * dt)
    step_sd = params.sigma * math.sqrt(-math.expm1(-2.0 * params.kappa * dt) / (2.0 * params.kappa))
    # X = S - mu t is a zero-mean OU process, stepped exactly.
    x = np.empty((n_paths, n_steps + 1), dtype=np.float64)
    x[:, 0] = params.s0
    for j in range(n_steps):
        x[:, j + 1] = x[:, j] * decay + step_sd * z[:, j]
    return x + params.mu * grid.times()[None, :]


def simulate_trend_ou_paths(
    params: TrendOUParams, grid: GridSpec, seed: Seed, n_paths: int, first_index: int = 0
) -> PathBundle:
    """Simulate n_paths trending mean-reverting level paths."""
    z = _path_noise(seed, n_paths, grid.n_steps, "dW", first_index)
    return PathBundle(grid.times(), _trend_ou_core(params, grid, z))


def simulate_trend_ou(params: TrendOUParams, grid: GridSpec, seed: Seed) -> Path:
    """Single trending mean-reverting level path."""
    z = standard_normals(derive_stream(seed, "dW"), grid.n_steps)[None, :]
    values = _trend_ou_core(params, grid, z)
    return Path(grid.times(), values[0])


def _gbm_core(mu: float, sigma: float, s0: float, grid: GridSpec, z: np.ndarray) -> np.ndarray:
    dt = grid.dt
    increments = (mu - 0.5 * sigma**2) * dt + sigma * math.sqrt(dt) * z
    log_s = np.concatenate(
        [np.full((z.shape[0], 1), math.log(s0)), np.cumsum(increments, axis=1) + math.log(s0)],
        axis=1,
    )
    return np.exp(log_s)


def simulate_gbm_paths(
    mu: float, sigma: float, s0: float, grid: GridSpec, seed: Seed, n_paths: int, first_index: int = 0
) -> PathBundle:
    """Simulate n_paths geometric Brownian motion paths (exact log-normal steps)."""
    if sigma < 0.0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if s0 <= 0.0:
        raise ValueError(f"initial price must be positive, got {s0}")
    z = _path_noise(seed, n_paths, grid.n_steps, "dW", first_index)
    return PathBundle(grid.times(), _gbm_core(mu, sigma, s0, grid, z))


def simulate_gbm(mu: float, sigma: float, s0: float, grid: GridSpec, seed: Seed) -> Path:
    """Single geometric Brownian motion path."""
    if sigma < 0.0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if s0 <= 0.0:
        raise ValueError(f"initial price must be positive, got {s0}")
    z = standard_normals(derive_stream(seed, "dW"), grid.n_steps)[None, :]
    return Path(grid.times(), _gbm_core(mu, sigma, s0, grid, z)[0])
