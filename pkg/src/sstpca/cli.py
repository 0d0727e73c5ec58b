"""Command-line surface.

Five subcommands: ``decompose``, ``changepoint``, ``simulate``,
``benchmark``, and ``rank-select``. Every command writes one canonical
JSON artifact (sorted keys, no timestamps) so a fixed seed yields
byte-identical output across runs and thread counts; tabular side
products go to CSV. Exit codes: 0 success, 1 flagged non-convergence,
2 input error.

The worker thread count comes from ``--threads`` or the SSTPCA_THREADS
environment variable and is deliberately not part of the echoed config:
it never affects results.
"""

from __future__ import annotations

import csv
import dataclasses
import sys
import warnings
from dataclasses import dataclass

import click
import numpy as np

from . import __version__
from ._parallel import resolve_threads
from .changepoint import detect_changepoint, detection_snr
from .decompose import FitOptions, fit_single_factor
from .deflate import SCHEMES, fit_multi
from .errors import ParseError, SSTPCAError
from .fileio import (
    FORMATS,
    SCHEMA_VERSION,
    factor_to_dict,
    load_tensor,
    write_json,
    write_long_csv,
)
from .linalg import procrustes_aligned_rmse, random_stiefel, random_unit, sign_aligned_error
from .ranksel import rank_select_bic_trace
from .simulate import SweepCell, goe_noise, rate_sweep, spike_model, sweep_rows, write_sweep_csv
from .tensor import SemiSymTensor

_TUPLE_INT = ("ranks", "p_list", "r_list")
_TUPLE_FLOAT = ("d_list",)


@dataclass(frozen=True)
class RunConfig:
    """Serializable record of one command invocation.

    Round-trips losslessly through its JSON form; echoed verbatim into
    every results file.
    """

    command: str
    input: "str | None" = None
    format: "str | None" = None
    ranks: "tuple | None" = None
    scheme: str = "hotelling"
    seed: int = 0
    tol: float = 1e-8
    max_iter: int = 200
    init: str = "stable"
    eigen_scaled: bool = False
    edge_threshold: "float | None" = None
    output: "str | None" = None
    trace_csv: "str | None" = None
    cusum_csv: "str | None" = None
    csv_out: "str | None" = None
    data_out: "str | None" = None
    rank: "int | None" = None
    r_max: "int | None" = None
    k_max: "int | None" = None
    preset: "str | None" = None
    p: "int | None" = None
    T: "int | None" = None
    r: "int | None" = None
    d: "float | None" = None
    sigma: "float | None" = None
    tau: "int | None" = None
    u_mode: "str | None" = None
    seeds: "int | None" = None
    r_list: "tuple | None" = None
    p_list: "tuple | None" = None
    d_list: "tuple | None" = None
    reps: "int | None" = None

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key in _TUPLE_INT + _TUPLE_FLOAT:
            if out[key] is not None:
                out[key] = list(out[key])
        return out

    @classmethod
    def from_dict(cls, dct: dict) -> "RunConfig":
        kwargs = dict(dct)
        for key in _TUPLE_INT:
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(int(x) for x in kwargs[key])
        for key in _TUPLE_FLOAT:
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(float(x) for x in kwargs[key])
        return cls(**kwargs)

    def validate(self) -> None:
        if self.format is not None and self.format not in FORMATS:
            raise ParseError(f"unknown format {self.format!r}")
        if self.scheme not in SCHEMES:
            raise ParseError(f"unknown scheme {self.scheme!r}")
        if self.ranks is not None and any(r < 1 for r in self.ranks):
            raise ParseError("ranks must be positive")
        if self.tol <= 0 or self.max_iter < 1:
            raise ParseError("tol must be positive and max_iter at least 1")


def _payload(cfg: RunConfig, results: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        "command": cfg.command,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "results": results,
    }


def _diag_dict(diag) -> dict:
    return {
        "iterations": diag.iterations,
        "converged": diag.converged,
        "objective": [float(x) for x in diag.objective],
        "u_change": [float(x) for x in diag.u_change],
    }


def _thresholded_network(factor, threshold: float) -> list:
    W = factor.d * (factor.V @ factor.V.T)
    W[np.abs(W) < threshold] = 0.0
    return [float(x) for x in W.ravel(order="C")]


def _parse_int_list(text: str, flag: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as e:
        raise ParseError(f"{flag}: expected comma-separated integers, got {text!r}") from e


def _parse_float_list(text: str, flag: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as e:
        raise ParseError(f"{flag}: expected comma-separated numbers, got {text!r}") from e


@click.group()
@click.version_option(__version__)
def main():
    """Network-series tensor PCA toolkit."""


@main.command()
@click.option("--input", "input_", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="long-csv", type=click.Choice(FORMATS))
@click.option("--ranks", default="1", help="Comma-separated factor ranks, e.g. '3' or '3,2'.")
@click.option("--scheme", default="hotelling", type=click.Choice(SCHEMES))
@click.option("--seed", default=0, type=int)
@click.option("--tol", default=1e-8, type=float)
@click.option("--max-iter", default=200, type=int)
@click.option("--init", default="stable", type=click.Choice(["stable", "random"]))
@click.option("--eigen-scaled", is_flag=True, default=False)
@click.option("--edge-threshold", default=None, type=float,
              help="If set, emit principal networks with |edges| below this zeroed.")
@click.option("--output", required=True, type=click.Path())
@click.option("--trace-csv", default=None, type=click.Path())
def decompose(input_, fmt, ranks, scheme, seed, tol, max_iter, init, eigen_scaled,
              edge_threshold, output, trace_csv):
    """Fit a multi-factor decomposition to a tensor read from disk."""
    try:
        cfg = RunConfig(
            command="decompose", input=input_, format=fmt,
            ranks=_parse_int_list(ranks, "--ranks"), scheme=scheme, seed=seed,
            tol=tol, max_iter=max_iter, init=init, eigen_scaled=eigen_scaled,
            edge_threshold=edge_threshold, output=output, trace_csv=trace_csv,
        )
        cfg.validate()
        X = load_tensor(input_, fmt)
        opts = FitOptions(max_iter=max_iter, tol=tol, init=init, seed=seed,
                          eigen_scaled=eigen_scaled)
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always")
            dec = fit_multi(X, cfg.ranks, scheme, opts)
        results = {
            "p": X.p,
            "T": X.T,
            "scheme": scheme,
            "factors": [factor_to_dict(f, X.T) for f in dec.factors],
            "diagnostics": [_diag_dict(d) for d in dec.diagnostics],
            "residual_norms": [float(x) for x in dec.residual_norms],
            "cpve": [float(x) for x in dec.cpve],
            "residual_ratios": [float(x) for x in dec.residual_ratios],
        }
        if edge_threshold is not None:
            results["principal_networks"] = [
                _thresholded_network(f, edge_threshold) for f in dec.factors
            ]
        write_json(output, _payload(cfg, results))
        if trace_csv:
            with open(trace_csv, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["factor", "iteration", "objective", "u_change"])
                for k, diag in enumerate(dec.diagnostics):
                    for i, (obj, du) in enumerate(zip(diag.objective, diag.u_change)):
                        writer.writerow([k, i + 1, repr(obj), repr(du)])
        if not all(d.converged for d in dec.diagnostics):
            click.echo("warning: at least one factor did not converge", err=True)
            sys.exit(1)
    except SSTPCAError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)


@main.command()
@click.option("--input", "input_", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="long-csv", type=click.Choice(FORMATS))
@click.option("--rank", default=1, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--tol", default=1e-8, type=float)
@click.option("--max-iter", default=200, type=int)
@click.option("--edge-threshold", default=None, type=float)
@click.option("--output", required=True, type=click.Path())
@click.option("--cusum-csv", default=None, type=click.Path())
def changepoint(input_, fmt, rank, seed, tol, max_iter, edge_threshold, output, cusum_csv):
    """Locate the most likely mean shift in a network series."""
    try:
        cfg = RunConfig(
            command="changepoint", input=input_, format=fmt, rank=rank, seed=seed,
            tol=tol, max_iter=max_iter, edge_threshold=edge_threshold,
            output=output, cusum_csv=cusum_csv,
        )
        cfg.validate()
        X = load_tensor(input_, fmt)
        opts = FitOptions(max_iter=max_iter, tol=tol, init="stable", seed=seed)
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always")
            res = detect_changepoint(X, rank, opts)
        results = {
            "p": X.p,
            "T": X.T,
            "rank": rank,
            "tau_hat": res.tau_hat,
            "score": res.score,
            "u_hat": [float(x) for x in res.u_hat],
            "factor": factor_to_dict(res.factor, X.T - 1),
            "diagnostics": _diag_dict(res.diagnostics),
        }
        if edge_threshold is not None:
            results["principal_network"] = _thresholded_network(res.factor, edge_threshold)
        write_json(output, _payload(cfg, results))
        if cusum_csv:
            with open(cusum_csv, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["tau", "u_hat"])
                for t, val in enumerate(res.u_hat, start=1):
                    writer.writerow([t, repr(float(val))])
        if not res.diagnostics.converged:
            click.echo("warning: fit did not converge", err=True)
            sys.exit(1)
    except SSTPCAError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)


def _simulate_spike(cfg: RunConfig) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    X, truth = spike_model(cfg.p, cfg.T, cfg.r, cfg.d, cfg.sigma, cfg.u_mode, rng)
    if cfg.data_out:
        write_long_csv(X, cfg.data_out)
    return {
        "p": cfg.p,
        "T": cfg.T,
        "r": cfg.r,
        "d": truth.d,
        "sigma": truth.sigma,
        "snr": truth.snr,
        "u_star": [float(x) for x in truth.u_star],
        "V_star": [float(x) for x in truth.V_star.ravel(order="C")],
        "data_path": cfg.data_out,
    }


def _simulate_shift(cfg: RunConfig) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    tau = cfg.tau if cfg.tau is not None else cfg.T // 2
    V1 = random_stiefel(cfg.p, cfg.r, rng)
    V2 = random_stiefel(cfg.p, cfg.r, rng)
    M1 = cfg.d * (V1 @ V1.T)
    M2 = cfg.d * (V2 @ V2.T)
    noise = goe_noise(cfg.p, cfg.T, cfg.sigma, rng)
    data = np.empty((cfg.p, cfg.p, cfg.T))
    for t in range(cfg.T):
        data[:, :, t] = (M1 if t < tau else M2) + noise[:, :, t]
    X = SemiSymTensor(data, check=False)
    if cfg.data_out:
        write_long_csv(X, cfg.data_out)
    return {
        "p": cfg.p,
        "T": cfg.T,
        "r": cfg.r,
        "d": cfg.d,
        "sigma": cfg.sigma,
        "tau_star": tau,
        "detection_snr": detection_snr(M1, M2, tau, cfg.T, cfg.sigma) if cfg.sigma > 0 else None,
        "V1": [float(x) for x in V1.ravel(order="C")],
        "V2": [float(x) for x in V2.ravel(order="C")],
        "data_path": cfg.data_out,
    }


def _simulate_fig3(cfg: RunConfig) -> dict:
    """Computational-vs-statistical convergence traces at low SNR."""
    rows = []
    summary = {}
    master = np.random.SeedSequence(cfg.seed)
    for r in cfg.r_list:
        d = 15.0 * r ** (-0.25)
        stat_by_8 = 0
        comp_ge_15 = 0
        final_armses = []
        for s, child in enumerate(master.spawn(cfg.seeds)):
            rng = np.random.default_rng(child)
            X, truth = spike_model(cfg.p, cfg.T, r, d, cfg.sigma, "constant", rng)
            # Constant truth with a random positive-orthant start, so the
            # initialization is informative but not an oracle.
            u0 = random_unit(cfg.T, rng, positive=True)
            opts = FitOptions(rank=r, max_iter=cfg.max_iter, tol=cfg.tol,
                              init=u0, track_iterates=True)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                factor, diag = fit_single_factor(X, opts)
            _, final_armse = procrustes_aligned_rmse(factor.V, truth.V_star)
            final_armses.append(final_armse)
            hit_by_8 = False
            for k, (u_k, V_k) in enumerate(zip(diag.u_trace, diag.V_trace)):
                _, armse_k = procrustes_aligned_rmse(V_k, truth.V_star)
                u_err_k = float(sign_aligned_error(u_k, truth.u_star) / np.sqrt(cfg.T))
                rows.append([r, s, k + 1, repr(diag.objective[k]), repr(armse_k), repr(u_err_k)])
                if k < 8 and armse_k <= 1.05 * final_armse + 1e-15:
                    hit_by_8 = True
            stat_by_8 += hit_by_8
            comp_ge_15 += diag.iterations >= 15
        summary[str(r)] = {
            "d": d,
            "frac_stat_by_8": stat_by_8 / cfg.seeds,
            "frac_comp_ge_15": comp_ge_15 / cfg.seeds,
            "mean_final_armse": float(np.mean(final_armses)),
        }
    if cfg.csv_out:
        with open(cfg.csv_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "seed", "iteration", "objective", "armse", "u_err"])
            writer.writerows(rows)
    return {"per_rank": summary, "trace_csv": cfg.csv_out, "seeds": cfg.seeds}


@main.command()
@click.option("--preset", required=True, type=click.Choice(["spike", "shift", "fig3"]))
@click.option("--p", default=40, type=int)
@click.option("--t", "T", default=20, type=int)
@click.option("--r", default=1, type=int)
@click.option("--r-list", default="1,5", help="Ranks for the fig3 preset.")
@click.option("--d", default=3.0, type=float)
@click.option("--sigma", default=1.0, type=float)
@click.option("--tau", default=None, type=int, help="True shift index for the shift preset.")
@click.option("--u-mode", default="sphere", type=click.Choice(["sphere", "positive", "constant"]))
@click.option("--seeds", default=20, type=int, help="Replicates for the fig3 preset.")
@click.option("--seed", default=0, type=int)
@click.option("--tol", default=1e-8, type=float)
@click.option("--max-iter", default=200, type=int)
@click.option("--data-out", default=None, type=click.Path(), help="Where to write the long-csv tensor.")
@click.option("--csv", "csv_out", default=None, type=click.Path())
@click.option("--output", required=True, type=click.Path())
def simulate(preset, p, T, r, r_list, d, sigma, tau, u_mode, seeds, seed, tol,
             max_iter, data_out, csv_out, output):
    """Generate synthetic instances or convergence-trace experiments."""
    try:
        cfg = RunConfig(
            command="simulate", preset=preset, p=p, T=T, r=r,
            r_list=_parse_int_list(r_list, "--r-list"), d=d, sigma=sigma, tau=tau,
            u_mode=u_mode, seeds=seeds, seed=seed, tol=tol, max_iter=max_iter,
            data_out=data_out, csv_out=csv_out, output=output,
        )
        cfg.validate()
        if preset == "spike":
            results = _simulate_spike(cfg)
        elif preset == "shift":
            results = _simulate_shift(cfg)
        else:
            results = _simulate_fig3(cfg)
        write_json(output, _payload(cfg, results))
    except SSTPCAError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)


@main.command()
@click.option("--p-list", default="20,40", help="Comma-separated node counts.")
@click.option("--t", "T", default=20, type=int)
@click.option("--r", default=1, type=int)
@click.option("--d-list", default="8,16", help="Comma-separated signal strengths.")
@click.option("--sigma", default=1.0, type=float)
@click.option("--u-mode", default="sphere", type=click.Choice(["sphere", "positive", "constant"]))
@click.option("--init", default="stable", type=click.Choice(["stable", "random", "oracle"]))
@click.option("--reps", default=10, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--threads", default=None, type=int)
@click.option("--csv", "csv_out", default=None, type=click.Path())
@click.option("--output", required=True, type=click.Path())
def benchmark(p_list, T, r, d_list, sigma, u_mode, init, reps, seed, threads, csv_out, output):
    """Recovery-error sweep over a (p, d) grid of spiked instances."""
    try:
        cfg = RunConfig(
            command="benchmark", p_list=_parse_int_list(p_list, "--p-list"), T=T, r=r,
            d_list=_parse_float_list(d_list, "--d-list"), sigma=sigma, u_mode=u_mode,
            init=init, reps=reps, seed=seed, csv_out=csv_out, output=output,
        )
        cfg.validate()
        cells = [
            SweepCell(p=pp, T=T, r=r, d=dd, sigma=sigma, u_mode=u_mode, init=init)
            for pp in cfg.p_list
            for dd in cfg.d_list
        ]
        results = rate_sweep(cells, reps=reps, seed=seed, n_threads=resolve_threads(threads))
        if csv_out:
            write_sweep_csv(results, csv_out)
        write_json(output, _payload(cfg, {"rows": sweep_rows(results)}))
    except SSTPCAError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)


@main.command(name="rank-select")
@click.option("--input", "input_", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="long-csv", type=click.Choice(FORMATS))
@click.option("--r-max", default=5, type=int)
@click.option("--k-max", default=3, type=int)
@click.option("--scheme", default="hotelling", type=click.Choice(SCHEMES))
@click.option("--seed", default=0, type=int)
@click.option("--tol", default=1e-8, type=float)
@click.option("--max-iter", default=200, type=int)
@click.option("--output", required=True, type=click.Path())
def rank_select(input_, fmt, r_max, k_max, scheme, seed, tol, max_iter, output):
    """Choose factor ranks greedily by BIC."""
    try:
        cfg = RunConfig(
            command="rank-select", input=input_, format=fmt, r_max=r_max, k_max=k_max,
            scheme=scheme, seed=seed, tol=tol, max_iter=max_iter, output=output,
        )
        cfg.validate()
        X = load_tensor(input_, fmt)
        opts = FitOptions(max_iter=max_iter, tol=tol, init="stable", seed=seed)
        ranks, steps = rank_select_bic_trace(X, r_max, k_max, opts, scheme)
        def _finite(x):
            # RSS can be exactly zero on noiseless data; keep the JSON strict.
            return float(x) if np.isfinite(x) else None

        results = {
            "p": X.p,
            "T": X.T,
            "ranks": ranks,
            "steps": [
                {
                    "null_bic": _finite(step.null_bic),
                    "candidates": [[r, _finite(bic)] for r, bic in step.candidates],
                    "chosen_r": step.chosen_r,
                }
                for step in steps
            ],
        }
        write_json(output, _payload(cfg, results))
    except SSTPCAError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
