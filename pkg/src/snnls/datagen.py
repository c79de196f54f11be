"""Synthetic S-NNLS instances: signal laws, dictionary ensembles, noise."""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import toeplitz

from .exceptions import DomainError
from .posterior import Problem

NOISELESS_VARIANCE = 1e-6
CAUCHY_CLIP = 1e6

SIGNAL_KINDS = ("rect-gaussian", "nn-cauchy", "nn-laplace", "nn-gamma", "chi-square-2",
                "bernoulli-two-point")
DICT_KINDS = ("gaussian", "rademacher")


@dataclass(frozen=True)
class SignalDistribution:
    """Law of the non-zero entries. All draws are >= 0.

    ``nn-gamma`` is Gamma(shape, scale) with defaults shape=1, scale=2;
    ``nn-cauchy`` and ``nn-laplace`` take ``|.|`` of a location-0, scale-1 law.
    """

    kind: str = "rect-gaussian"
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise DomainError(f"unknown signal distribution {self.kind!r}")

    def param(self, name, default):
        return dict(self.params).get(name, default)

    def sample(self, rng, size):
        """Draw ``size`` values; returns ``(values, n_clipped)``."""
        k = self.kind
        clipped = 0
        if k == "rect-gaussian":
            v = np.abs(rng.standard_normal(size)) * math.sqrt(self.param("scale", 1.0))
        elif k == "nn-cauchy":
            v = np.abs(rng.standard_cauchy(size)) * self.param("scale", 1.0)
            clipped = int(np.sum(v > CAUCHY_CLIP))
            v = np.minimum(v, CAUCHY_CLIP)
        elif k == "nn-laplace":
            v = np.abs(rng.laplace(0.0, self.param("scale", 1.0), size))
        elif k == "nn-gamma":
            v = rng.gamma(self.param("shape", 1.0), self.param("scale", 2.0), size)
        elif k == "chi-square-2":
            v = rng.chisquare(self.param("df", 2.0), size)
        else:  # bernoulli-two-point
            v = np.where(rng.random(size) < 0.5, 0.5, 1.5)
        return v, clipped


@dataclass(frozen=True)
class DictionaryEnsemble:
    kind: str = "gaussian"
    rho: float = 0.0
    normalize: bool = True

    def __post_init__(self):
        if self.kind not in DICT_KINDS:
            raise DomainError(f"unknown dictionary ensemble {self.kind!r}")
        if not 0.0 <= self.rho < 1.0:
            raise DomainError(f"rho must lie in [0, 1), got {self.rho}")

    @property
    def correlated(self):
        return self.rho > 0

    def sample(self, rng, n, m):
        if self.kind == "gaussian":
            phi = rng.standard_normal((n, m))
        else:
            phi = np.where(rng.random((n, m)) < 0.5, 1.0, -1.0)
        if self.rho > 0:
            phi = phi @ toeplitz_cholesky(m, self.rho).T
        if self.normalize:
            phi = normalize_columns(phi)
        return phi


def toeplitz_cholesky(m, rho):
    """Lower Cholesky factor of the ``m x m`` matrix ``T_ij = rho**|i-j|``."""
    if rho == 0:
        return np.eye(m)
    return np.linalg.cholesky(toeplitz(rho ** np.arange(m)))


def normalize_columns(phi):
    norms = np.linalg.norm(phi, axis=0)
    norms[norms == 0] = 1.0
    return phi / norms


def noise_variance_for_snr(clean, snr_db):
    """``sigma2`` with ``10 log10(||clean||^2 / (N sigma2)) == snr_db``."""
    return float(clean @ clean) / (clean.size * 10.0 ** (snr_db / 10.0))


@dataclass
class TrialSpec:
    """One benchmark configuration. ``snr_db=None`` means the noiseless setting."""

    n: int = 100
    m: int = 400
    k: int = 10
    signal: SignalDistribution = field(default_factory=SignalDistribution)
    dictionary: DictionaryEnsemble = field(default_factory=DictionaryEnsemble)
    snr_db: float = None
    solvers: tuple = ("da", "lmmse", "gamp-sp", "l1", "nnomp")
    trials: int = 10
    master_seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise DomainError("n and m must be positive")
        if not 0 <= self.k <= self.m:
            raise DomainError(f"cardinality k={self.k} must lie in [0, m={self.m}]")
        if self.trials < 0:
            raise DomainError("trials must be >= 0")

    @property
    def noiseless(self):
        return self.snr_db is None


def trial_seed(master_seed, trial_index):
    """Per-trial RNG seed, a pure function of (master seed, trial index)."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(trial_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def gen_instance(spec, trial_index):
    """Draw ``(problem, x_gen, info)`` for one trial, fully determined by the seed pair."""
    seed = trial_seed(spec.master_seed, trial_index)
    rng = np.random.default_rng(seed)
    phi = spec.dictionary.sample(rng, spec.n, spec.m)
    x = np.zeros(spec.m)
    support = rng.choice(spec.m, size=spec.k, replace=False)
    vals, clipped = spec.signal.sample(rng, spec.k)
    x[support] = vals
    clean = phi @ x
    if spec.noiseless:
        # exact measurements; sigma2 only enters the solvers as a small noise level
        sigma2 = NOISELESS_VARIANCE
        y = clean.copy()
    else:
        sigma2 = noise_variance_for_snr(clean, spec.snr_db)
        if sigma2 <= 0:
            sigma2 = NOISELESS_VARIANCE
        y = clean + math.sqrt(sigma2) * rng.standard_normal(spec.n)
    problem = Problem(phi, y, sigma2, column_normalized=spec.dictionary.normalize)
    return problem, x, {"seed": seed, "clipped": clipped}
