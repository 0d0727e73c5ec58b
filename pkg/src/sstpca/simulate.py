"""Generative models and Monte Carlo experiment drivers.

Covers the spiked low-rank model with symmetric Gaussian noise, two random
graph generators (block model and dot-product graphs with simplex latent
positions), an adversarially perturbed fit, and a seeded sweep harness
reporting aligned recovery errors across a parameter grid.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from ._parallel import ordered_map, spawn_seeds
from .decompose import Factor, FitDiagnostics, FitOptions, fit_single_factor
from .errors import BudgetExceeded, DimensionMismatch, InvalidParameter, InvalidProbability
from .linalg import (
    procrustes_aligned_rmse,
    random_stiefel,
    random_unit,
    sign_aligned_error,
)
from .tensor import SemiSymTensor, frob_norm, rank1_outer

U_MODES = ("sphere", "positive", "constant")


@dataclass(frozen=True)
class SpikeTruth:
    """Ground truth behind one simulated instance."""

    u_star: np.ndarray
    V_star: np.ndarray
    d: float
    sigma: float
    snr: float  # d / sqrt(p * log T)


def goe_noise(p: int, T: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetric Gaussian noise slices, shape (p, p, T).

    One draw per unordered off-diagonal pair with variance sigma^2;
    diagonal entries have variance 2 sigma^2.
    """
    iu = np.triu_indices(p, k=1)
    out = np.zeros((p, p, T))
    off = rng.normal(0.0, sigma, size=(T, iu[0].size))
    diag = rng.normal(0.0, sigma * np.sqrt(2.0), size=(T, p))
    out[iu[0], iu[1], :] = off.T
    out[iu[1], iu[0], :] = off.T
    out[np.arange(p), np.arange(p), :] = diag.T
    return out


def spike_model(
    p: int,
    T: int,
    r: int,
    d: float,
    sigma: float,
    u_mode: str = "sphere",
    rng: "np.random.Generator | None" = None,
) -> tuple[SemiSymTensor, SpikeTruth]:
    """Low-rank signal d * V o V o u plus symmetric Gaussian noise."""
    if rng is None:
        rng = np.random.default_rng()
    if u_mode not in U_MODES:
        raise InvalidParameter(f"u_mode must be one of {U_MODES}, got {u_mode!r}")
    if sigma < 0:
        raise InvalidParameter("sigma must be nonnegative")
    V_star = random_stiefel(p, r, rng)
    if u_mode == "constant":
        u_star = np.full(T, 1.0 / np.sqrt(T))
    else:
        u_star = random_unit(T, rng, positive=(u_mode == "positive"))
    data = rank1_outer(d, V_star, u_star).data + goe_noise(p, T, sigma, rng)
    snr = float(d / np.sqrt(p * np.log(T))) if T > 1 else float("inf")
    return SemiSymTensor(data, check=False), SpikeTruth(u_star, V_star, float(d), float(sigma), snr)


def _block_membership(p: int, n_blocks: int) -> np.ndarray:
    # Equal blocks when n_blocks divides p; the remainder pads the last block.
    size = p // n_blocks
    labels = np.repeat(np.arange(n_blocks), size)
    if labels.size < p:
        labels = np.concatenate([labels, np.full(p - labels.size, n_blocks - 1)])
    return labels


def sbm_expected_adjacency(p: int, n_blocks: int, p_in: float, q_out: float) -> np.ndarray:
    """Mean adjacency matrix of the block model, zero diagonal."""
    labels = _block_membership(p, n_blocks)
    same = labels[:, None] == labels[None, :]
    W = np.where(same, p_in, q_out).astype(np.float64)
    np.fill_diagonal(W, 0.0)
    return W


def sbm_series(
    p: int, T: int, n_blocks: int, p_in: float, q_out: float, rng: np.random.Generator
) -> SemiSymTensor:
    """T independent block-model adjacency slices."""
    if not (0.0 <= q_out <= p_in <= 1.0):
        raise InvalidProbability(f"need 0 <= q_out <= p_in <= 1, got p_in={p_in}, q_out={q_out}")
    probs = sbm_expected_adjacency(p, n_blocks, p_in, q_out)
    iu = np.triu_indices(p, k=1)
    edge_probs = probs[iu]
    out = np.zeros((p, p, T))
    draws = (rng.random(size=(T, iu[0].size)) < edge_probs[None, :]).astype(np.float64)
    out[iu[0], iu[1], :] = draws.T
    out[iu[1], iu[0], :] = draws.T
    return SemiSymTensor(out, check=False)


def dirichlet_latents(p: int, r: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """p latent positions on the (r-1)-simplex."""
    if r < 1:
        raise InvalidParameter(f"latent dimension r={r} must be at least 1")
    if alpha <= 0:
        raise InvalidParameter(f"alpha={alpha} must be positive")
    return rng.dirichlet(np.full(r, alpha), size=p)


def rdpg_series_from_latents(latents: np.ndarray, T: int, rng: np.random.Generator) -> SemiSymTensor:
    """Dot-product graph slices with fixed latent positions."""
    probs = latents @ latents.T
    p = probs.shape[0]
    iu = np.triu_indices(p, k=1)
    edge_probs = np.clip(probs[iu], 0.0, 1.0)
    out = np.zeros((p, p, T))
    draws = (rng.random(size=(T, iu[0].size)) < edge_probs[None, :]).astype(np.float64)
    out[iu[0], iu[1], :] = draws.T
    out[iu[1], iu[0], :] = draws.T
    return SemiSymTensor(out, check=False)


def rdpg_dirichlet_series(
    p: int, T: int, r: int, alpha: float, rng: np.random.Generator
) -> SemiSymTensor:
    """Dot-product graphs with Dirichlet latent positions fixed across slices."""
    return rdpg_series_from_latents(dirichlet_latents(p, r, alpha, rng), T, rng)


def fit_adversarial(
    X_signal: SemiSymTensor,
    opts: FitOptions,
    noise_budget: float,
    adversary,
) -> tuple[Factor, FitDiagnostics]:
    """Run the alternating fit with per-iteration adversarial perturbations.

    `adversary(k)` returns (E_V, e_u): a symmetric matrix added to the
    V-update target and a vector added to the u-update target. Operator
    norm of E_V and 2-norm of e_u must not exceed the budget.
    """
    if noise_budget < 0:
        raise DimensionMismatch("noise budget must be nonnegative")

    def perturb(k):
        E_V, e_u = adversary(k)
        E_V = np.asarray(E_V, dtype=np.float64)
        e_u = np.asarray(e_u, dtype=np.float64).ravel()
        if E_V.shape != (X_signal.p, X_signal.p):
            raise DimensionMismatch(f"E_V must be {X_signal.p} x {X_signal.p}, got {E_V.shape}")
        if e_u.shape[0] != X_signal.T:
            raise DimensionMismatch(f"e_u must have length {X_signal.T}, got {e_u.shape[0]}")
        E_V = (E_V + E_V.T) / 2.0
        opnorm = float(np.abs(np.linalg.eigvalsh(E_V)).max()) if np.any(E_V) else 0.0
        slack = 1.0 + 1e-12
        if opnorm > noise_budget * slack:
            raise BudgetExceeded(f"E_V operator norm {opnorm:.3e} exceeds budget {noise_budget:.3e}")
        e_norm = float(np.linalg.norm(e_u))
        if e_norm > noise_budget * slack:
            raise BudgetExceeded(f"e_u norm {e_norm:.3e} exceeds budget {noise_budget:.3e}")
        return E_V, e_u

    return fit_single_factor(X_signal, opts, _perturb=perturb)


@dataclass(frozen=True)
class SweepCell:
    p: int
    T: int
    r: int
    d: float
    sigma: float
    u_mode: str = "sphere"  # sphere | positive | constant
    init: str = "stable"  # stable | random | oracle


@dataclass
class SweepResult:
    cell: SweepCell
    reps: int
    u_err_mean: float
    u_err_sd: float
    armse_mean: float
    armse_sd: float
    recon_err_mean: float
    recon_err_sd: float
    iters_to_stat_mean: float
    iterations_mean: float
    converged_frac: float


def _stat_iteration(diag: FitDiagnostics, V_star: np.ndarray, armse_final: float) -> int:
    """First iterate whose aligned error reaches within 5% of the final one.

    One-sided: an early iterate that is temporarily better than the
    converged error already has final-level statistical accuracy.
    """
    for k, V in enumerate(diag.V_trace):
        _, a = procrustes_aligned_rmse(V, V_star)
        if a <= 1.05 * armse_final + 1e-15:
            return k + 1
    return diag.iterations


def _run_rep(cell: SweepCell, seed_seq, max_iter: int, tol: float):
    rng = np.random.default_rng(seed_seq)
    X, truth = spike_model(cell.p, cell.T, cell.r, cell.d, cell.sigma, cell.u_mode, rng)
    if cell.init == "oracle":
        init = truth.u_star
    elif cell.init == "random":
        init = random_unit(cell.T, rng)
    elif cell.init == "stable":
        init = "stable"
    else:
        raise InvalidParameter(f"unknown init scheme {cell.init!r}")
    opts = FitOptions(rank=cell.r, max_iter=max_iter, tol=tol, init=init, track_iterates=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        factor, diag = fit_single_factor(X, opts)
    u_err = sign_aligned_error(factor.u, truth.u_star) / np.sqrt(cell.T)
    _, armse = procrustes_aligned_rmse(factor.V, truth.V_star)
    signal = rank1_outer(truth.d, truth.V_star, truth.u_star)
    recon = frob_norm(factor.reconstruct().data - signal.data) / frob_norm(signal)
    return (
        u_err,
        armse,
        recon,
        _stat_iteration(diag, truth.V_star, armse),
        diag.iterations,
        1.0 if diag.converged else 0.0,
    )


def rate_sweep(
    cells,
    reps: int,
    seed: int,
    max_iter: int = 200,
    tol: float = 1e-8,
    n_threads: int = 1,
) -> list:
    """Mean and SD of recovery errors for every grid cell.

    Deterministic for a fixed seed: each (cell, rep) pair gets its own
    spawned RNG stream and aggregation runs in fixed replicate order.
    """
    cells = list(cells)
    if not cells or reps < 1:
        raise DimensionMismatch("need a nonempty grid and reps >= 1")
    cell_seeds = spawn_seeds(seed, len(cells))
    results = []
    for cell, cell_seed in zip(cells, cell_seeds):
        rep_seeds = cell_seed.spawn(reps)
        rows = ordered_map(
            lambda s, c=cell: _run_rep(c, s, max_iter, tol), rep_seeds, n_threads
        )
        arr = np.asarray(rows)
        results.append(
            SweepResult(
                cell=cell,
                reps=reps,
                u_err_mean=float(arr[:, 0].mean()),
                u_err_sd=float(arr[:, 0].std(ddof=1)) if reps > 1 else 0.0,
                armse_mean=float(arr[:, 1].mean()),
                armse_sd=float(arr[:, 1].std(ddof=1)) if reps > 1 else 0.0,
                recon_err_mean=float(arr[:, 2].mean()),
                recon_err_sd=float(arr[:, 2].std(ddof=1)) if reps > 1 else 0.0,
                iters_to_stat_mean=float(arr[:, 3].mean()),
                iterations_mean=float(arr[:, 4].mean()),
                converged_frac=float(arr[:, 5].mean()),
            )
        )
    return results


_SWEEP_METRICS = (
    ("u_err", "u_err_mean", "u_err_sd"),
    ("armse", "armse_mean", "armse_sd"),
    ("recon_err", "recon_err_mean", "recon_err_sd"),
    ("iters_to_stat", "iters_to_stat_mean", None),
    ("iterations", "iterations_mean", None),
    ("converged_frac", "converged_frac", None),
)


def sweep_rows(results) -> list:
    """Long-format rows, one per cell per metric."""
    rows = []
    for res in results:
        base = asdict(res.cell)
        base["reps"] = res.reps
        for name, mean_attr, sd_attr in _SWEEP_METRICS:
            row = dict(base)
            row["metric"] = name
            row["mean"] = getattr(res, mean_attr)
            row["sd"] = getattr(res, sd_attr) if sd_attr else ""
            rows.append(row)
    return rows


def write_sweep_csv(results, path) -> None:
    rows = sweep_rows(results)
    fields = ["p", "T", "r", "d", "sigma", "u_mode", "init", "reps", "metric", "mean", "sd"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
