"""Problem-agnostic unscented-transform machinery."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from . import backend
from .errors import NotPsd, SingularInnovation

MAX_CONDITION = 1e12
# negative eigenvalues smaller than this are rounding noise of a zero matrix
PSD_ATOL = 1e-24


@dataclass(frozen=True)
class UtParams:
    """Scaling parameters of the unscented transform.

    ``dof`` is the effective dimension ``n`` entering every formula; for the
    navigation filter that is the augmented tangent dimension 21.
    """

    lam: float
    alpha: float
    beta: float
    dof: int

    def __post_init__(self):
        if self.dof < 1:
            raise ValueError("dof must be a positive integer")
        if not self.dof + self.lam > 0.0:
            raise ValueError(f"dof + lambda must be positive (got {self.dof} + {self.lam})")

    @classmethod
    def default(cls, dof: int) -> "UtParams":
        """``lambda = 3 - dof``, ``alpha = 1e-4``, ``beta = 2``."""
        return cls(lam=3.0 - dof, alpha=1e-4, beta=2.0, dof=dof)


@dataclass(frozen=True)
class SigmaSet:
    points: NDArray
    wm: NDArray
    wc: NDArray

    def __post_init__(self):
        n = len(self.wm)
        if len(self.points) != n or len(self.wc) != n or n % 2 != 1:
            raise ValueError("sigma set needs 2*dof + 1 points with matching weights")
        if abs(float(np.sum(self.wm)) - 1.0) > 1e-12:
            raise ValueError("mean weights must sum to one")

    @property
    def dof(self) -> int:
        return (len(self.wm) - 1) // 2


@dataclass(frozen=True)
class GaussianJoint:
    """Joint Gaussian over ``(a, b)`` in block form."""

    mean_a: NDArray
    mean_b: NDArray
    P_a: NDArray
    P_b: NDArray
    P_ab: NDArray


def symmetrize(P: ArrayLike) -> NDArray:
    P = np.asarray(P, dtype=float)
    return 0.5 * (P + P.T)


def eig_floor(P: ArrayLike, floor: float = 0.0) -> NDArray:
    """Clip the eigenvalues of a symmetric matrix from below."""
    evals, evecs = np.linalg.eigh(symmetrize(P))
    if evals[0] >= floor:
        return symmetrize(P)
    return symmetrize((evecs * np.maximum(evals, floor)) @ evecs.T)


def sqrt_psd(M: ArrayLike, atol: float = PSD_ATOL) -> NDArray:
    """Matrix square root ``U sqrt(S) V^T`` from the SVD ``M = U S V^T``.

    Raises
    ------
    NotPsd
        If ``M`` has an eigenvalue below ``-(1e-6 * trace(M) + atol)``.
    """
    M = np.asarray(M, dtype=float)
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-8 * (1.0 + np.max(np.abs(M), initial=0.0)):
        raise ValueError("matrix is not symmetric")
    M = symmetrize(M)
    U, s, Vt = np.linalg.svd(M)
    # for symmetric M the eigenvalue sign is the sign of u_i . v_i
    signs = np.einsum("ki,ik->i", U, Vt)
    if np.any(s * signs < -(1e-6 * abs(np.trace(M)) + atol)):
        raise NotPsd("matrix has a significantly negative eigenvalue")
    return (U * np.sqrt(s)) @ Vt


def ut_weights(params: UtParams) -> tuple[NDArray, NDArray]:
    n, lam = params.dof, params.lam
    wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
    wc = wm.copy()
    wm[0] = lam / (lam + n)
    wc[0] = wm[0] + 1.0 - params.alpha**2 + params.beta
    return wm, wc


def sigma_offsets(P: ArrayLike, params: UtParams) -> NDArray:
    """Signed offsets ``0, +cols, -cols`` of ``sqrt((n + lambda) P)`` as rows."""
    P = np.asarray(P, dtype=float)
    S = sqrt_psd((params.dof + params.lam) * P)
    return np.concatenate([np.zeros((1, P.shape[0])), S.T, -S.T])


def euclidean_sigma_points(mean: ArrayLike, P: ArrayLike, params: UtParams) -> SigmaSet:
    mean = np.asarray(mean, dtype=float)
    if params.dof != mean.shape[0]:
        raise ValueError(f"params.dof = {params.dof} does not match dimension {mean.shape[0]}")
    wm, wc = ut_weights(params)
    return SigmaSet(mean + sigma_offsets(P, params), wm, wc)


def ut_estimate_moments(
    sigma: SigmaSet,
    residual: Callable[[NDArray, NDArray], NDArray] | None = None,
    mean_fn: Callable[[NDArray, NDArray], NDArray] | None = None,
    floor: bool = False,
) -> tuple[NDArray, NDArray]:
    """Weighted mean and covariance of a (transformed) sigma set.

    ``residual(points, mean)`` maps the points to row differences; it defaults
    to plain subtraction. ``mean_fn(points, wm)`` overrides the weighted sum,
    for points that live on a manifold.
    """
    pts = np.asarray(sigma.points, dtype=float)
    if mean_fn is None:
        mean = backend.weighted_sum(sigma.wm, pts)
    else:
        mean = mean_fn(pts, sigma.wm)
    d = pts - mean if residual is None else residual(pts, mean)
    P = symmetrize(backend.weighted_outer(sigma.wc, d, d))
    return mean, (eig_floor(P) if floor else P)


def kalman_gain(P_ab: ArrayLike, P_b: ArrayLike) -> tuple[NDArray, float]:
    """Solve ``K P_b = P_ab`` without forming an inverse.

    Returns the gain and the 2-norm condition number of ``P_b``.
    """
    P_b = symmetrize(P_b)
    evals = np.linalg.eigvalsh(P_b)
    if not np.all(np.isfinite(evals)) or evals[0] <= 0.0:
        raise SingularInnovation("innovation covariance is not positive definite")
    cond = float(evals[-1] / evals[0])
    if cond > MAX_CONDITION:
        raise SingularInnovation(f"innovation covariance condition number {cond:.3g} exceeds {MAX_CONDITION:.0e}")
    try:
        cf = scipy.linalg.cho_factor(P_b)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation(str(exc)) from exc
    K = scipy.linalg.cho_solve(cf, np.asarray(P_ab, dtype=float).T).T
    return K, cond


def gaussian_condition(joint: GaussianJoint, b_obs: ArrayLike) -> tuple[NDArray, NDArray]:
    """Mean and covariance of ``a`` given ``b = b_obs``."""
    K, _ = kalman_gain(joint.P_ab, joint.P_b)
    mean = np.asarray(joint.mean_a, dtype=float) + K @ (np.asarray(b_obs, dtype=float) - joint.mean_b)
    cov = symmetrize(joint.P_a - K @ joint.P_b @ K.T)
    return mean, cov
