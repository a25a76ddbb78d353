"""Lower-orthant probabilities ``P(W < u)`` for ``W ~ N(0, S)`` with ``S`` PSD.

Sequential conditioning on a pivoted Cholesky factor, integrated with
randomized (scrambled Sobol) quasi-Monte Carlo. Covariances of deficient rank
are handled directly: rows beyond the rank only bound the variable of their
last nonzero factor column, and rows of zero variance become indicators.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import qmc


class DimensionTooLarge(ValueError):
    """Raised when the orthant dimension exceeds the configured cap."""


@dataclass(frozen=True)
class QmcParams:
    n_points: int = 1024
    n_shifts: int = 8
    seed: int = 0
    max_dim: int = 64
    rank_tol: float = 1e-10

    def __post_init__(self):
        if self.n_points < 2 or self.n_points & (self.n_points - 1):
            raise ValueError("n_points must be a power of two")
        if self.n_shifts < 2:
            raise ValueError("n_shifts must be at least 2 to estimate an error")


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    std_error: float
    route: str

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0) or self.std_error < 0:
            raise ValueError(f"invalid estimate {self.value} +/- {self.std_error}")

    @property
    def exact(self):
        return self.std_error == 0.0


def _pivoted_cholesky(cov, upper=None, tol=1e-10):
    """Factor ``cov[perm][:, perm] = L L^T`` with ``L`` of shape ``(d, rank)``.

    With ``upper`` given, each step picks the remaining row with the smallest
    marginal probability given the truncated means so far (Genz ordering);
    otherwise the largest residual variance is chosen.
    """
    cov = np.asarray(cov, dtype=float)
    d = cov.shape[0]
    scale = max(float(np.max(np.diag(cov))) if d else 0.0, 1e-300)
    resid = np.array(cov, copy=True)
    perm = np.arange(d)
    L = np.zeros((d, d))
    mean = np.zeros(d)
    rank = 0
    for j in range(d):
        diag = np.diag(resid)[j:]
        live = diag > tol * scale
        if not live.any():
            break
        cand = np.flatnonzero(live) + j
        if upper is None:
            pick = cand[np.argmax(np.diag(resid)[cand])]
        else:
            b = (upper[perm[cand]] - L[cand, :j] @ mean[:j]) / np.sqrt(np.diag(resid)[cand])
            pick = cand[np.argmin(ndtr(b))]
        if pick != j:
            perm[[j, pick]] = perm[[pick, j]]
            resid[[j, pick]] = resid[[pick, j]]
            resid[:, [j, pick]] = resid[:, [pick, j]]
            L[[j, pick]] = L[[pick, j]]
        piv = np.sqrt(resid[j, j])
        L[j, j] = piv
        L[j + 1:, j] = resid[j + 1:, j] / piv
        resid[j + 1:, j + 1:] -= np.outer(L[j + 1:, j], L[j + 1:, j])
        if upper is not None:
            b = (upper[perm[j]] - L[j, :j] @ mean[:j]) / piv
            pb = max(ndtr(b), 1e-300)
            mean[j] = -np.exp(-0.5 * b * b) / np.sqrt(2 * np.pi) / pb
        rank += 1
    return L[:, :rank], perm


class _Plan:
    """Per-column constraint groups derived from a trapezoidal factor."""

    def __init__(self, L, tol):
        d, r = L.shape
        self.L = L
        self.rank = r
        norms = np.abs(L).max(axis=1, initial=0.0)
        mask = np.abs(L) > tol * np.maximum(norms, 1e-300)[:, None]
        has = mask.any(axis=1)
        last = np.full(d, -1)
        if r:
            last = np.where(has, r - 1 - np.argmax(mask[:, ::-1], axis=1), -1)
        self.indicator_rows = np.flatnonzero(~has)
        self.groups = []
        for j in range(r):
            rows = np.flatnonzero(last == j)
            coef = L[rows, j]
            self.groups.append((rows, coef, L[rows, :j]))


def _integrate(plan, upper, uniforms):
    """Estimates for each upper vector (rows of ``upper``) and each point batch.

    ``uniforms`` has shape ``(shifts, points, rank)``; returns ``(Q, shifts)``.
    """
    upper = np.atleast_2d(upper)
    Q = upper.shape[0]
    S, N, r = uniforms.shape
    gate = np.ones(Q)
    if plan.indicator_rows.size:
        gate = (upper[:, plan.indicator_rows] > 0).all(axis=1).astype(float)
    if r == 0:
        return np.repeat(gate[:, None], S, axis=1)
    f = np.ones((Q, S, N))
    z = np.zeros((Q, S, N, r))
    for j, (rows, coef, prev) in enumerate(plan.groups):
        shift = z[..., :j] @ prev.T if j else 0.0
        bound = (upper[:, None, None, rows] - shift) / coef
        pos = coef > 0
        hi = np.min(np.where(pos, bound, np.inf), axis=-1, initial=np.inf)
        lo = np.max(np.where(pos, -np.inf, bound), axis=-1, initial=-np.inf)
        a, b = ndtr(lo), ndtr(hi)
        width = np.clip(b - a, 0.0, None)
        f *= width
        w = a + uniforms[None, :, :, j] * width
        z[..., j] = ndtri(np.clip(w, 1e-300, 1 - 1e-16))
    return gate[:, None] * f.mean(axis=2)


def _uniforms(dim, params, seed):
    ss = np.random.SeedSequence([params.seed, seed])
    out = np.empty((params.n_shifts, params.n_points, dim))
    for s, child in enumerate(ss.spawn(params.n_shifts)):
        if dim:
            out[s] = qmc.Sobol(dim, scramble=True, seed=np.random.default_rng(child)).random(params.n_points)
    return out


def _summarize(per_shift, route="gaussian_cdf"):
    vals = np.clip(per_shift.mean(axis=-1), 0.0, 1.0)
    k = per_shift.shape[-1]
    se = per_shift.std(axis=-1, ddof=1) / np.sqrt(k)
    return vals, se


def mvn_cdf(upper, covariance, qmc_params=QmcParams()):
    """``P(W_1 < u_1, ..., W_d < u_d)`` for ``W ~ N(0, covariance)``.

    Raises
    ------
    DimensionTooLarge
        When ``d`` exceeds ``qmc_params.max_dim``.
    """
    upper = np.asarray(upper, dtype=float).reshape(-1)
    cov = np.asarray(covariance, dtype=float)
    d = upper.size
    if cov.shape != (d, d):
        raise ValueError(f"covariance shape {cov.shape} does not match {d} bounds")
    if d > qmc_params.max_dim:
        raise DimensionTooLarge(f"dimension {d} exceeds cap {qmc_params.max_dim}")
    if d == 0:
        return OracleEstimate(1.0, 0.0, "gaussian_cdf")
    finite = np.isfinite(upper)
    if (upper == -np.inf).any():
        return OracleEstimate(0.0, 0.0, "gaussian_cdf")
    if not finite.all():
        keep = np.flatnonzero(finite)
        return mvn_cdf(upper[keep], cov[np.ix_(keep, keep)], qmc_params)
    L, perm = _pivoted_cholesky(cov, upper, qmc_params.rank_tol)
    plan = _Plan(L, 1e-9)
    per_shift = _integrate(plan, upper[perm][None], _uniforms(plan.rank, qmc_params, d))[0]
    if plan.rank <= 1:
        # one-dimensional integrand is constant in the uniform: exact
        per_shift = per_shift[:1]
        return OracleEstimate(float(np.clip(per_shift[0], 0, 1)), 0.0, "gaussian_cdf")
    val, se = _summarize(per_shift)
    return OracleEstimate(float(val), float(se), "gaussian_cdf")


class OrthantIntegrator:
    """Batched orthant probabilities for one fixed covariance.

    The pivot order and the QMC point set are fixed at construction, so a
    given upper vector always yields the same estimate whatever batch it is
    evaluated in.
    """

    def __init__(self, covariance, qmc_params=QmcParams(), seed=0):
        cov = np.asarray(covariance, dtype=float)
        d = cov.shape[0]
        if d > qmc_params.max_dim:
            raise DimensionTooLarge(f"dimension {d} exceeds cap {qmc_params.max_dim}")
        self.dim = d
        self.params = qmc_params
        L, self.perm = _pivoted_cholesky(cov, None, qmc_params.rank_tol)
        self.plan = _Plan(L, 1e-9)
        self.rank = self.plan.rank
        self._u = _uniforms(self.rank, qmc_params, seed)
        if self.rank <= 1:
            self._u = self._u[:1]

    def __call__(self, upper, batch=64):
        """Values and standard errors for the rows of ``upper``."""
        upper = np.atleast_2d(np.asarray(upper, dtype=float))
        if upper.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} bounds, got {upper.shape[1]}")
        vals = np.empty(upper.shape[0])
        ses = np.zeros(upper.shape[0])
        up = upper[:, self.perm]
        for s in range(0, up.shape[0], batch):
            part = up[s:s + batch]
            per_shift = _integrate(self.plan, np.where(np.isneginf(part), -1e300, part), self._u)
            if per_shift.shape[1] == 1:
                vals[s:s + batch] = np.clip(per_shift[:, 0], 0, 1)
            else:
                vals[s:s + batch], ses[s:s + batch] = _summarize(per_shift)
        return vals, ses
