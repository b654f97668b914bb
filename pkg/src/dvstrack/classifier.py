"""Online Gaussian naive Bayes over compressed features.

Each feature has one Gaussian per class. With equal class priors the
score of a feature vector is the summed log-likelihood ratio, and the
per-class Gaussians drift towards each new batch with learning factor
``lam`` (``lam = 1`` keeps the old model, ``lam = 0`` replaces it).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

DEFAULT_LAMBDA = 0.85
DEFAULT_SIGMA_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class ClassifierParams:
    mu1: np.ndarray
    sigma1: np.ndarray
    mu0: np.ndarray
    sigma0: np.ndarray
    lam: float = DEFAULT_LAMBDA
    sigma_floor: float = DEFAULT_SIGMA_FLOOR

    def __post_init__(self):
        if not 0 <= self.lam <= 1:
            raise ValueError("lam must lie in [0, 1]")
        if not self.sigma_floor > 0:
            raise ValueError("sigma_floor must be positive")
        for name in ("mu1", "sigma1", "mu0", "sigma0"):
            a = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not (len(self.mu1) == len(self.sigma1) == len(self.mu0) == len(self.sigma0)):
            raise ValueError("parameter vectors must have equal length")

    @property
    def n(self) -> int:
        return len(self.mu1)

    def to_text(self) -> str:
        lines = ["feature,mu1,sigma1,mu0,sigma0"]
        for i, row in enumerate(zip(self.mu1, self.sigma1, self.mu0, self.sigma0)):
            lines.append(f"{i}," + ",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def _log_gauss(v, mu, sigma):
    return -np.log(sigma) - 0.5 * ((v - mu) / sigma) ** 2


def score(params: ClassifierParams, v) -> np.ndarray | float:
    """Log-likelihood ratio H(v), for one vector ``(n,)`` or a batch ``(k, n)``.

    The shared ``-0.5 log(2 pi)`` term and the uniform prior cancel.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != params.n:
        raise ValueError(f"expected {params.n} features, got {v.shape[-1]}")
    h = (_log_gauss(v, params.mu1, params.sigma1) - _log_gauss(v, params.mu0, params.sigma0)).sum(axis=-1)
    return float(h) if h.ndim == 0 else h


def batch_estimate(features, sigma_floor: float = DEFAULT_SIGMA_FLOOR) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature population mean and standard deviation (divide by the
    sample count), sigma floored.

    ``features`` is ``(k, n)``; returns two length-``n`` arrays.
    """
    V = np.asarray(features, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[0] == 0:
        raise ValueError("batch_estimate needs at least one sample")
    mu = V.mean(axis=0)
    sigma = np.sqrt(((V - mu) ** 2).mean(axis=0))
    return mu, np.maximum(sigma, sigma_floor)


def _blend(mu_old, sigma_old, mu_new, sigma_new, lam, floor):
    mu = lam * mu_old + (1 - lam) * mu_new
    var = lam * sigma_old**2 + (1 - lam) * sigma_new**2 + lam * (1 - lam) * (mu_old - mu_new) ** 2
    return mu, np.maximum(np.sqrt(var), floor)


def update(params: ClassifierParams, positive, negative) -> ClassifierParams:
    """Blend each class's Gaussians towards the batch estimates of the new
    positive and negative samples; returns new parameters."""
    floor = params.sigma_floor
    mu1_hat, s1_hat = batch_estimate(positive, floor)
    mu0_hat, s0_hat = batch_estimate(negative, floor)
    mu1, s1 = _blend(params.mu1, params.sigma1, mu1_hat, s1_hat, params.lam, floor)
    mu0, s0 = _blend(params.mu0, params.sigma0, mu0_hat, s0_hat, params.lam, floor)
    return replace(params, mu1=mu1, sigma1=s1, mu0=mu0, sigma0=s0)


def init_params(positive, negative, lam: float = DEFAULT_LAMBDA,
                sigma_floor: float = DEFAULT_SIGMA_FLOOR) -> ClassifierParams:
    mu1, s1 = batch_estimate(positive, sigma_floor)
    mu0, s0 = batch_estimate(negative, sigma_floor)
    return ClassifierParams(mu1, s1, mu0, s0, lam, sigma_floor)
