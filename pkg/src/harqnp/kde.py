"""Gaussian product-kernel density estimate of successful received prefixes.

All successful prefixes are first mapped onto the all-zero codeword by the
sign flip ``y -> y * x_i`` (``x_i`` the BPSK prefix of the sent codeword),
which preserves the channel law and the decoding regions of a linear code
under a symmetric decoder. The pooled cloud then estimates a single
component of the success-conditioned prefix density.
"""

from dataclasses import dataclass

import numpy as np

from .channel import modulate


@dataclass(frozen=True, eq=False)
class KdeModel:
    training_points: np.ndarray
    bandwidth: np.ndarray
    kernel: str = "gaussian"

    def __post_init__(self):
        if self.training_points.shape[0] == 0:
            raise ValueError("training set is empty")
        if not (self.bandwidth > 0).all():
            raise ValueError("bandwidths must be positive")
        scaled = self.training_points / self.bandwidth
        object.__setattr__(self, "_scaled", scaled)
        object.__setattr__(self, "_half_sq", 0.5 * (scaled**2).sum(axis=1))
        norm = np.log(self.training_points.shape[0]) + np.log(self.bandwidth).sum() \
            + 0.5 * self.dim * np.log(2 * np.pi)
        object.__setattr__(self, "_log_norm", norm)

    @property
    def dim(self):
        return self.training_points.shape[1]

    @property
    def size(self):
        return self.training_points.shape[0]

    def log_density(self, Z, batch=256):
        """Log density at the rows of ``Z``."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if Z.shape[1] != self.dim:
            raise ValueError(f"points have dimension {Z.shape[1]}, model has {self.dim}")
        out = np.empty(Z.shape[0])
        for s in range(0, Z.shape[0], batch):
            zs = Z[s:s + batch] / self.bandwidth
            expo = zs @ self._scaled.T
            expo -= self._half_sq
            top = expo.max(axis=1)
            expo -= top[:, None]
            np.exp(expo, out=expo)
            out[s:s + batch] = np.log(expo.sum(axis=1)) + top - 0.5 * (zs**2).sum(axis=1)
        return out - self._log_norm

    def density(self, Z):
        return np.exp(self.log_density(Z))


@dataclass(frozen=True, eq=False)
class SuccessRegression:
    """Kernel regression of decoding success on the reflected prefix.

    ``log_ratio(z)`` estimates ``log P(success | z) / P(success)`` as the
    log ratio of two kernel densities with a shared bandwidth: one over
    successful training prefixes and one over all of them. The smoothing
    bias of the two estimates cancels in the ratio.
    """

    points: np.ndarray
    success: np.ndarray
    bandwidth: np.ndarray

    def __post_init__(self):
        ok = np.asarray(self.success, dtype=bool)
        if ok.shape != (self.points.shape[0],) or not ok.any():
            raise ValueError("need one success flag per point and at least one success")
        object.__setattr__(self, "success", ok)
        scaled = self.points / self.bandwidth
        object.__setattr__(self, "_scaled", scaled)
        object.__setattr__(self, "_half_sq", 0.5 * (scaled**2).sum(axis=1))
        object.__setattr__(self, "_log_share", np.log(ok.size / ok.sum()))

    @property
    def dim(self):
        return self.points.shape[1]

    def log_ratio(self, Z, batch=256):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if Z.shape[1] != self.dim:
            raise ValueError(f"points have dimension {Z.shape[1]}, model has {self.dim}")
        out = np.empty(Z.shape[0])
        for s in range(0, Z.shape[0], batch):
            zs = Z[s:s + batch] / self.bandwidth
            expo = zs @ self._scaled.T
            expo -= self._half_sq
            expo -= expo.max(axis=1, keepdims=True)
            np.exp(expo, out=expo)
            with np.errstate(divide="ignore"):
                out[s:s + batch] = np.log(expo[:, self.success].sum(axis=1)) - np.log(expo.sum(axis=1))
        return out + self._log_share


def reflect(y_p, codewords):
    """Map received prefixes onto the all-zero codeword: ``y * x_i`` elementwise."""
    y_p = np.asarray(y_p, dtype=float)
    return y_p * modulate(np.asarray(codewords)[..., : y_p.shape[-1]])


def scott_bandwidth(points, floor=1e-3):
    n, d = points.shape
    std = points.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
    return np.maximum(std * n ** (-1.0 / (d + 4)), floor)


def kde_regression_fit(prefixes, sent, success, code, floor=1e-3, min_per_dim=10):
    """Fit :class:`SuccessRegression` from all training prefixes and their outcomes.

    Bandwidths follow Scott's rule on the pooled reflected prefixes.
    """
    prefixes = np.atleast_2d(np.asarray(prefixes, dtype=float))
    sent = np.asarray(sent, dtype=np.int64)
    if prefixes.shape[0] < min_per_dim * prefixes.shape[1]:
        raise ValueError(
            f"{prefixes.shape[0]} samples is fewer than {min_per_dim} per dimension ({prefixes.shape[1]})"
        )
    pts = reflect(prefixes, code.codebook[sent])
    return SuccessRegression(pts, np.asarray(success, dtype=bool), scott_bandwidth(pts, floor))


def kde_fit(prefixes, sent, code, bandwidth_rule="scott", floor=1e-3, min_per_dim=10):
    """Fit the single-component KDE from successful prefixes.

    Parameters
    ----------
    prefixes : array_like, shape (N, p)
        Received prefixes of trials that decoded successfully.
    sent : array_like of int, shape (N,)
        Message index sent in each trial.
    bandwidth_rule : {"scott"} or array_like
        Scott's rule per dimension, or explicit bandwidths.
    """
    prefixes = np.atleast_2d(np.asarray(prefixes, dtype=float))
    sent = np.asarray(sent, dtype=np.int64)
    if prefixes.shape[0] == 0:
        raise ValueError("no successful prefixes to fit")
    if prefixes.shape[0] < min_per_dim * prefixes.shape[1]:
        raise ValueError(
            f"{prefixes.shape[0]} samples is fewer than {min_per_dim} per dimension ({prefixes.shape[1]})"
        )
    pts = reflect(prefixes, code.codebook[sent])
    if isinstance(bandwidth_rule, str):
        if bandwidth_rule != "scott":
            raise ValueError(f"unknown bandwidth rule {bandwidth_rule!r}")
        bw = scott_bandwidth(pts, floor)
    else:
        bw = np.maximum(np.broadcast_to(np.asarray(bandwidth_rule, dtype=float), (pts.shape[1],)), floor)
    return KdeModel(pts, np.array(bw, dtype=float))
