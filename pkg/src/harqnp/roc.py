"""Alpha-beta curves of decodability tests and comparisons between them.

``alpha`` is the rate of rejecting decodable receptions and ``beta`` the rate
of accepting undecodable ones. Randomizing at a tied threshold moves
linearly between adjacent deterministic operating points, so each curve is
the piecewise-linear lower envelope through those points.
"""

from dataclasses import dataclass, field

import numpy as np

ALPHA_GRID = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5)


class DegenerateInput(ValueError):
    """Raised when a curve cannot be formed, e.g. one outcome class is empty."""


def binomial_se(x, n):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.clip(x * (1 - x), 0, None) / max(n, 1))


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Deterministic operating points sorted by ``alpha``; ``beta`` nonincreasing.

    Equal-``alpha`` runs (vertical segments) are kept in order of decreasing
    ``beta`` so the lower envelope takes the last of them.
    """

    alpha: np.ndarray
    beta: np.ndarray
    kind: str
    n_success: int
    n_failure: int
    p: int = None
    thresholds: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        a, b = self.alpha, self.beta
        if a.shape != b.shape or a.size < 2:
            raise ValueError("curve needs matching alpha and beta arrays with at least 2 points")
        if (np.diff(a) < -1e-15).any() or (np.diff(b) > 1e-15).any():
            raise ValueError("curve must have nondecreasing alpha and nonincreasing beta")

    @property
    def se_alpha(self):
        return binomial_se(self.alpha, self.n_success)

    @property
    def se_beta(self):
        return binomial_se(self.beta, self.n_failure)

    @property
    def points(self):
        return list(zip(self.alpha.tolist(), self.beta.tolist()))

    @property
    def trial_count(self):
        return self.n_success + self.n_failure

    def beta_at(self, alpha):
        """Lower-envelope ``beta`` at each requested ``alpha`` in [0, 1]."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        a, b = self.alpha, self.beta
        # last index with a[j] <= alpha: the bottom of any vertical run there
        j = np.searchsorted(a, alpha, side="right") - 1
        j = np.clip(j, 0, a.size - 1)
        nxt = np.clip(j + 1, 0, a.size - 1)
        span = a[nxt] - a[j]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(span > 0, (alpha - a[j]) / span, 0.0)
        return b[j] + np.clip(frac, 0, 1) * (b[nxt] - b[j])

    def se_beta_at(self, alpha):
        return binomial_se(self.beta_at(alpha), self.n_failure)


def _clean(values):
    v = np.array([np.nan if x is None else x for x in values], dtype=float) \
        if isinstance(values, list) else np.asarray(values, dtype=float)
    if np.isnan(v).any():
        raise DegenerateInput("statistic contains missing values")
    return v


def roc_from_scores(scores, success, kind="", p=None):
    """Build the curve from statistic values and full-length decoding outcomes."""
    s = _clean(scores)
    y = np.asarray(success, dtype=bool)
    if s.shape != y.shape:
        raise ValueError("scores and outcomes differ in length")
    n_a, n_n = int(y.sum()), int((~y).sum())
    if n_a == 0 or n_n == 0:
        raise DegenerateInput("both decodable and undecodable trials are required")
    levels, inverse = np.unique(s, return_inverse=True)
    acc_a = np.bincount(inverse, weights=y, minlength=levels.size)[::-1].cumsum()
    acc_n = np.bincount(inverse, weights=~y, minlength=levels.size)[::-1].cumsum()
    # accept-nothing point, then thresholds from the highest level down
    alpha = np.concatenate([[1.0], 1.0 - acc_a / n_a])
    beta = np.concatenate([[0.0], acc_n / n_n])
    alpha, beta = alpha[::-1], beta[::-1]
    thresholds = np.concatenate([[np.inf], levels[::-1]])[::-1]
    return RocCurve(np.clip(alpha, 0, 1), np.clip(beta, 0, 1), kind, n_a, n_n, p, thresholds)


def binary_test_point(scores, success):
    """Operating point of a 0/1 predictor: ``(alpha, beta, se_alpha, se_beta)``."""
    s = _clean(scores)
    if not np.isin(s, (0.0, 1.0)).all():
        raise ValueError("binary_test_point needs a 0/1 statistic")
    y = np.asarray(success, dtype=bool)
    n_a, n_n = int(y.sum()), int((~y).sum())
    if n_a == 0 or n_n == 0:
        raise DegenerateInput("both decodable and undecodable trials are required")
    alpha = 1.0 - s[y].mean()
    beta = s[~y].mean()
    return alpha, beta, float(binomial_se(alpha, n_a)), float(binomial_se(beta, n_n))


def sup_distance(a, b, grid=None):
    """Largest vertical gap between two curves over ``grid`` (default: all breakpoints)."""
    if grid is None:
        grid = np.unique(np.concatenate([a.alpha, b.alpha]))
    return float(np.max(np.abs(a.beta_at(grid) - b.beta_at(grid))))


def point_to_curve_distance(alpha, beta, curve):
    """``(d_alpha, d_beta)``: gaps from a point to the curve along each axis."""
    d_beta = beta - float(curve.beta_at(alpha)[0])
    grid = np.linspace(0, 1, 20001)
    betas = curve.beta_at(grid)
    # alpha at which the curve reaches this beta (leftmost)
    hit = np.flatnonzero(betas <= beta)
    d_alpha = alpha - grid[hit[0]] if hit.size else alpha - 1.0
    return d_alpha, d_beta


@dataclass
class DominanceReport:
    reference: str
    alpha_grid: tuple
    betas: dict
    std_errors: dict
    violations: list
    mean_gaps: dict
    ranking: list

    def to_text(self):
        kinds = list(self.betas)
        head = "alpha     " + "".join(f"{k:>14}" for k in kinds)
        lines = [f"reference: {self.reference}", head]
        for j, a in enumerate(self.alpha_grid):
            row = "".join(f"{self.betas[k][j]:>14.6g}" for k in kinds)
            lines.append(f"{a:<10g}{row}")
        lines.append("ranking by mean gap: " + ", ".join(
            f"{k} ({self.mean_gaps[k]:.4g})" for k in self.ranking))
        if self.violations:
            for kind, a, gap, tol in self.violations:
                lines.append(f"VIOLATION {kind} beats {self.reference} at alpha={a}: "
                             f"gap {gap:.4g} beyond tolerance {tol:.4g}")
        else:
            lines.append("no curve beats the reference beyond 3 standard errors")
        return "\n".join(lines)


def dominance_report(curves, reference="np_exact", alpha_grid=ALPHA_GRID,
                     gap_range=(0.01, 0.1), n_sigma=3.0):
    """Tabulate ``beta`` on ``alpha_grid`` and compare every curve to the reference.

    ``curves`` maps kind to :class:`RocCurve`. A curve is flagged when its
    ``beta`` falls below the reference by more than ``n_sigma`` combined
    standard errors. Curves are ranked by their mean ``beta`` gap over grid
    points inside ``gap_range``.
    """
    if reference not in curves:
        raise KeyError(f"reference curve {reference!r} missing")
    grid = np.asarray(alpha_grid, dtype=float)
    ref = curves[reference]
    ref_b, ref_se = ref.beta_at(grid), ref.se_beta_at(grid)
    betas, ses, gaps, violations = {}, {}, {}, []
    window = (grid >= gap_range[0]) & (grid <= gap_range[1])
    for kind, curve in curves.items():
        b, se = curve.beta_at(grid), curve.se_beta_at(grid)
        betas[kind], ses[kind] = b, se
        gap = b - ref_b
        gaps[kind] = float(gap[window].mean()) if window.any() else float(gap.mean())
        tol = n_sigma * np.sqrt(se**2 + ref_se**2)
        for a, g, tl in zip(grid, gap, tol):
            if g < -tl and kind != reference:
                violations.append((kind, float(a), float(g), float(tl)))
    ranking = sorted(gaps, key=lambda k: gaps[k])
    return DominanceReport(reference, tuple(grid.tolist()), betas, ses, violations, gaps, ranking)
