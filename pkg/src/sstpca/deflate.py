"""Multi-factor decomposition via successive deflation.

Three deflation schemes with different orthogonality guarantees:

  hotelling   subtract the fitted component; two-way orthogonality only
  projection  project the component out of all three modes; adds one-way
              orthogonality in both u and V
  schur       slicewise Schur complement against V, then project out u;
              additionally keeps later residuals orthogonal to earlier V

Residual norms never increase under hotelling/projection; schur shares the
guarantee only while every residual slice stays positive semi-definite.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .decompose import Factor, FitOptions, fit_single_factor
from .errors import DimensionMismatch, SingularSchurBlock, SSTPCAError
from .tensor import SemiSymTensor, frob_norm, new_from_slices, ttm, ttv3

SCHEMES = ("hotelling", "projection", "schur")
SCHUR_COND_LIMIT = 1e12


@dataclass
class Decomposition:
    """Ordered factors plus the per-step residual bookkeeping.

    residual_norms[k] is the Frobenius norm of the residual before fitting
    factor k (so it has K+1 entries). cpve[k] is the explained fraction
    1 - ||X^{k+1}||^2 / ||X||^2; the raw residual ratio is also kept since
    both conventions appear in reports.
    """

    factors: list = field(default_factory=list)
    scheme: str = "hotelling"
    residual_norms: list = field(default_factory=list)
    cpve: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def residual_ratios(self) -> list:
        total = self.residual_norms[0] ** 2
        if total == 0:
            return [0.0 for _ in self.cpve]
        return [n**2 / total for n in self.residual_norms[1:]]


@dataclass(frozen=True)
class OrthogonalityReport:
    """Residual alignment with a removed factor; all entries nonnegative.

    two_way is |<X_next, V o V o u>|; u_one_way is the Frobenius norm of
    the u-weighted slice sum; v_one_way_* are the norms of the mode-1 and
    mode-2 products with V.
    """

    two_way: float
    u_one_way: float
    v_one_way_mode1: float
    v_one_way_mode2: float


def _check_factor_dims(X: SemiSymTensor, f: Factor) -> None:
    if f.V.shape[0] != X.p:
        raise DimensionMismatch(f"factor V has {f.V.shape[0]} rows, tensor has p={X.p}")
    if f.u.shape[0] != X.T:
        raise DimensionMismatch(f"factor u has length {f.u.shape[0]}, tensor has T={X.T}")


def deflate(X: SemiSymTensor, f: Factor, scheme: str) -> SemiSymTensor:
    """Remove a fitted factor from X under the given scheme."""
    _check_factor_dims(X, f)
    if scheme == "hotelling":
        W = f.d * (f.V @ f.V.T)
        W = (W + W.T) / 2.0
        out = X.data - W[:, :, None] * f.u[None, None, :]
    elif scheme == "projection":
        P = np.eye(X.p) - f.V @ f.V.T
        P = (P + P.T) / 2.0
        Pu = np.eye(X.T) - np.outer(f.u, f.u)
        out = ttm(ttm(ttm(X, P, 1), P, 2), Pu, 3)
    elif scheme == "schur":
        V = f.V
        slices = []
        for t in range(X.T):
            A = X.slice(t)
            block = V.T @ A @ V
            with np.errstate(divide="ignore", invalid="ignore"):
                cond = np.linalg.cond(block)
            if not np.isfinite(cond) or cond >= SCHUR_COND_LIMIT:
                raise SingularSchurBlock(t, cond=float(cond))
            AV = A @ V
            slices.append(A - AV @ np.linalg.solve(block, AV.T))
        tilde = np.stack(slices, axis=-1)
        Pu = np.eye(X.T) - np.outer(f.u, f.u)
        out = ttm(tilde, Pu, 3)
    else:
        raise DimensionMismatch(f"unknown deflation scheme {scheme!r}")
    # Revalidate so floating-point asymmetry cannot accumulate over steps.
    return new_from_slices(np.moveaxis(out, 2, 0))


def orthogonality_report(X_next: SemiSymTensor, f: Factor) -> OrthogonalityReport:
    """Measure how much of a removed factor survives in the residual."""
    _check_factor_dims(X_next, f)
    recon_dir = f.V @ f.V.T
    two_way = abs(float(np.einsum("ijt,ij,t->", X_next.data, recon_dir, f.u)))
    u_one_way = float(np.linalg.norm(ttv3(X_next, f.u)))
    v1 = float(np.linalg.norm(ttm(X_next, f.V, 1)))
    v2 = float(np.linalg.norm(ttm(X_next, f.V, 2)))
    return OrthogonalityReport(two_way, u_one_way, v1, v2)


def slices_all_psd(X: SemiSymTensor, tol: float = 1e-10) -> bool:
    stacked = np.moveaxis(X.data, 2, 0)
    return bool(np.linalg.eigvalsh(stacked).min() >= -tol * max(1.0, frob_norm(X)))


def fit_multi(
    X: SemiSymTensor, ranks, scheme: str = "hotelling", opts: FitOptions | None = None
) -> Decomposition:
    """Fit K factors greedily, deflating between fits."""
    if scheme not in SCHEMES:
        raise DimensionMismatch(f"unknown deflation scheme {scheme!r}")
    ranks = [int(r) for r in ranks]
    if not ranks:
        raise DimensionMismatch("need at least one rank")
    if opts is None:
        opts = FitOptions()

    total_norm = frob_norm(X)
    dec = Decomposition(scheme=scheme, residual_norms=[total_norm])
    residual = X
    for k, r in enumerate(ranks):
        if scheme == "schur" and not slices_all_psd(residual):
            warnings.warn(
                f"residual before factor {k} is not slicewise PSD; "
                "Schur deflation may increase the residual norm",
                stacklevel=2,
            )
        try:
            factor, diag = fit_single_factor(residual, opts.with_rank(r))
            residual = deflate(residual, factor, scheme)
        except SSTPCAError as e:
            e.args = (f"factor {k}: {e}",)
            raise
        dec.factors.append(factor)
        dec.diagnostics.append(diag)
        dec.residual_norms.append(frob_norm(residual))
        dec.cpve.append(1.0 - dec.residual_norms[-1] ** 2 / total_norm**2)

    scales = [f.d for f in dec.factors]
    if any(b > a for a, b in zip(scales, scales[1:])):
        warnings.warn("fitted scales are not monotone decreasing", stacklevel=2)
    return dec


def reconstruct(dec: Decomposition, p: int, T: int) -> SemiSymTensor:
    """Sum of all fitted components as a tensor."""
    acc = np.zeros((p, p, T))
    for f in dec.factors:
        acc = acc + f.reconstruct().data
    return SemiSymTensor(acc, check=False)
