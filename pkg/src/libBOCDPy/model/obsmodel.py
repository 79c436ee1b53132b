# "model/obsmodel.py" from libBOCDPy by the libBOCDPy Contributors
#
# Conjugate Gaussian observation models. Each data segment gets a normal-inverse-gamma prior: the noise variance is
# drawn from a scaled inverse chi-squared law with v0 degrees of freedom and scale sigma0_sq, and the regression
# coefficients (or the intercept) are normal with covariance equal to the noise variance divided by k0. The segment
# parameters then integrate out analytically, which gives the segment marginal likelihoods the recursions need.

from dataclasses import asdict, dataclass, fields
from enum import Enum

import numpy as np
from scipy.special import gammaln

from ..errors import ConfigError, InputError
from ..shared import _check_positive


_LOG_2PI = float(np.log(2.0 * np.pi))


class ModelVariant(str, Enum):
    """
    The supported observation model families.
    """
    INTERCEPT_ONLY = "gaussian-intercept-only"
    LINEAR_REGRESSION = "gaussian-linear-regression"


@dataclass(frozen=True)
class ObsModelConfig:
    """
    Hyperparameters of the conjugate observation model.

    Attributes
    ----------
    variant : ModelVariant
        Intercept-only (the default) or linear regression on a feature row.
    sigma0_sq : float
        Prior scale of the noise variance.
    v0 : float
        Prior degrees of freedom of the noise variance.
    k0 : float
        Prior precision scale of the intercept or coefficients, relative to the noise variance.
    feature_dim : int
        The length of the feature row. Must be 0 exactly for the intercept-only variant.
    mu0 : float
        Prior mean of the intercept. The regression variant uses a zero prior mean.
    """
    variant: ModelVariant = ModelVariant.INTERCEPT_ONLY
    sigma0_sq: float = 0.25
    v0: float = 1.0
    k0: float = 0.01
    feature_dim: int = 0
    mu0: float = 0.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "variant", ModelVariant(self.variant))
        except ValueError:
            raise ConfigError(f"Unknown observation model variant: {self.variant!r}.")
        _check_positive("sigma0_sq", self.sigma0_sq)
        _check_positive("v0", self.v0)
        _check_positive("k0", self.k0)
        if self.feature_dim < 0:
            raise ConfigError(f"feature_dim must be nonnegative, got {self.feature_dim}.")
        if (self.feature_dim == 0) != (self.variant is ModelVariant.INTERCEPT_ONLY):
            raise ConfigError("feature_dim must be 0 for the intercept-only model and positive for the regression "
                              "model.")

    @property
    def is_regression(self) -> bool:
        return self.variant is ModelVariant.LINEAR_REGRESSION

    @property
    def a0(self) -> float:
        """Shape of the inverse-gamma prior on the noise variance."""
        return 0.5 * self.v0

    @property
    def b0(self) -> float:
        """Rate of the inverse-gamma prior on the noise variance."""
        return 0.5 * self.v0 * self.sigma0_sq

    def to_dict(self) -> dict:
        values = asdict(self)
        values["variant"] = self.variant.value
        return values

    @classmethod
    def from_dict(cls, values: dict) -> "ObsModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"Unknown observation model settings: {', '.join(sorted(unknown))}.")
        return cls(**values)


@dataclass(frozen=True, eq=False)
class SuffStats:
    """
    Sufficient statistics of one contiguous data segment. Instances are immutable; push() and merge() return new ones.

    Attributes
    ----------
    n : int
        The number of observations in the segment.
    mean : float
        Running mean of the values (intercept-only model).
    m2 : float
        Running sum of squared deviations from the mean (intercept-only model).
    xtx : np.ndarray, optional
        Feature cross-product matrix (regression model).
    xty : np.ndarray, optional
        Feature-value cross-product vector (regression model).
    yty : float
        Sum of squared values (regression model).
    """
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0
    xtx: np.ndarray | None = None
    xty: np.ndarray | None = None
    yty: float = 0.0

    @property
    def feature_dim(self) -> int:
        return 0 if self.xtx is None else self.xtx.shape[0]


def _check_features(x, feature_dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != feature_dim:
        raise InputError(f"Expected {feature_dim} features but got {x.shape[0]}.")
    return x


def _intercept_log_marginal(cfg: ObsModelConfig, n, mean, m2) -> np.ndarray:
    # Vectorised over segments. n = 0 gives exactly 0.
    n = np.asarray(n, dtype=float)
    kn = cfg.k0 + n
    an = cfg.a0 + 0.5 * n
    bn = cfg.b0 + 0.5 * np.asarray(m2) + 0.5 * (cfg.k0 * n / kn) * (np.asarray(mean) - cfg.mu0) ** 2
    return (-0.5 * n * _LOG_2PI + 0.5 * (np.log(cfg.k0) - np.log(kn)) + cfg.a0 * np.log(cfg.b0) - an * np.log(bn)
            + gammaln(an) - gammaln(cfg.a0))


def _regression_log_marginal(cfg: ObsModelConfig, n, xtx, xty, yty) -> np.ndarray:
    # Vectorised over a leading axis of segments: xtx is (m, p, p), xty is (m, p).
    n = np.asarray(n, dtype=float)
    p = cfg.feature_dim
    lam = xtx + cfg.k0 * np.eye(p)
    _, logdet = np.linalg.slogdet(lam)
    beta = np.linalg.solve(lam, xty[..., None])[..., 0]
    # The residual term is nonnegative in exact arithmetic, so flooring at b0 only removes rounding error.
    bn = np.maximum(cfg.b0 + 0.5 * (np.asarray(yty) - np.sum(xty * beta, axis=-1)), cfg.b0)
    an = cfg.a0 + 0.5 * n
    value = (-0.5 * n * _LOG_2PI + 0.5 * (p * np.log(cfg.k0) - logdet) + cfg.a0 * np.log(cfg.b0) - an * np.log(bn)
             + gammaln(an) - gammaln(cfg.a0))
    return np.where(n == 0, 0.0, value)


def empty_stats(cfg: ObsModelConfig) -> SuffStats:
    """
    Creates the statistics of an empty segment.

    Parameters
    ----------
    cfg : ObsModelConfig
        The observation model the statistics belong to.

    Returns
    -------
    SuffStats
        Statistics with n = 0, whose log marginal likelihood is 0.
    """
    if cfg.is_regression:
        p = cfg.feature_dim
        return SuffStats(xtx=np.zeros((p, p)), xty=np.zeros(p))
    return SuffStats()


def push(stats: SuffStats, y: float, x=()) -> SuffStats:
    """
    Appends one observation to a segment.

    Parameters
    ----------
    stats : SuffStats
        The statistics of the segment so far.
    y : float
        The new value.
    x : array_like
        The new feature row. Must be empty for the intercept-only model.

    Returns
    -------
    SuffStats
        The statistics of the segment with y appended.
    """
    x = _check_features(x, stats.feature_dim)
    y = float(y)
    if stats.xtx is not None:
        return SuffStats(n=stats.n + 1, xtx=stats.xtx + np.outer(x, x), xty=stats.xty + y * x,
                         yty=stats.yty + y * y)
    # Welford update, the same arithmetic the segment cache applies to every suffix at once.
    n = stats.n + 1
    delta = y - stats.mean
    mean = stats.mean + delta / n
    return SuffStats(n=n, mean=mean, m2=stats.m2 + delta * (y - mean))


def merge(a: SuffStats, b: SuffStats) -> SuffStats:
    """
    Combines the statistics of two disjoint segments. The result does not depend on the order of the arguments beyond
    floating point rounding.

    Parameters
    ----------
    a : SuffStats
        The first segment.
    b : SuffStats
        The second segment.

    Returns
    -------
    SuffStats
        The statistics of both segments together.
    """
    if a.feature_dim != b.feature_dim:
        raise InputError("Cannot merge statistics built for different feature dimensions.")
    if a.xtx is not None:
        return SuffStats(n=a.n + b.n, xtx=a.xtx + b.xtx, xty=a.xty + b.xty, yty=a.yty + b.yty)
    n = a.n + b.n
    if n == 0:
        return SuffStats()
    delta = b.mean - a.mean
    mean = a.mean + delta * b.n / n
    m2 = a.m2 + b.m2 + delta * delta * a.n * b.n / n
    return SuffStats(n=n, mean=mean, m2=m2)


def log_marginal(stats: SuffStats, cfg: ObsModelConfig) -> float:
    """
    Computes the log marginal likelihood of a segment with the segment parameters integrated out.

    Parameters
    ----------
    stats : SuffStats
        The statistics of the segment.
    cfg : ObsModelConfig
        The observation model.

    Returns
    -------
    float
        The log marginal likelihood. Exactly 0 for an empty segment.
    """
    if stats.feature_dim != cfg.feature_dim:
        raise InputError(f"Statistics have {stats.feature_dim} features but the model expects {cfg.feature_dim}.")
    if stats.n == 0:
        return 0.0
    if cfg.is_regression:
        return float(_regression_log_marginal(cfg, np.array([stats.n]), stats.xtx[None], stats.xty[None],
                                              np.array([stats.yty]))[0])
    return float(_intercept_log_marginal(cfg, stats.n, stats.mean, stats.m2))


def log_predictive(stats_prev: SuffStats, y: float, x, cfg: ObsModelConfig) -> float:
    """
    Computes the log posterior predictive density of y given the earlier part of its segment, as the ratio of the two
    marginal likelihoods.

    Parameters
    ----------
    stats_prev : SuffStats
        The statistics of the segment before y.
    y : float
        The new value.
    x : array_like
        The new feature row.
    cfg : ObsModelConfig
        The observation model.

    Returns
    -------
    float
        The log predictive density.
    """
    return log_marginal(push(stats_prev, y, x), cfg) - log_marginal(stats_prev, cfg)
