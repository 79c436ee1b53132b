# "engine/hyperparams.py" from libBOCDPy by the libBOCDPy Contributors
#
# The tunables shared by the recursion engines and the detector.

from dataclasses import dataclass, asdict, fields

from ..errors import ConfigError
from ..shared import _check_probability


@dataclass(frozen=True)
class Hyperparams:
    """
    Prior, search range and alerting parameters. The defaults reproduce the simulation benchmark setting.

    Attributes
    ----------
    p0 : float
        Prior probability of a change of unknown type at any time step.
    q0 : float
        Prior probability that an anomaly ends, used while the most recent change is a start within delta_t steps.
    delta_t : int
        The longest admissible collective anomaly.
    u_a : int
        Cap of the anomaly search range, which holds at most u_a + 1 run lengths.
    u_c : int
        Cap of the change point search range, which holds at most u_c + 1 durations.
    lambda_a : float
        Anomaly posterior threshold. Values of 1 or above make anomalies undetectable.
    lambda_c : float
        Change point posterior threshold. Values of 1 or above make change points undetectable.
    delta : int
        Localization tolerance around the MAP change point, in time steps.
    confirm_lag : int
        Number of observations that must follow a change point before it is alerted.
    anomaly_confirm_lag : int
        Number of retained observations that must follow an anomaly before its record is released.
    trunc_mass : float, optional
        When set, the oldest change point durations are dropped once their posterior tail mass falls below this.
    min_range_len : int
        Truncation never shrinks the change point search range below this many entries.
    """
    p0: float = 0.1
    q0: float = 0.2
    delta_t: int = 4
    u_a: int = 27
    u_c: int = 299
    lambda_a: float = 0.5
    lambda_c: float = 0.5
    delta: int = 0
    confirm_lag: int = 5
    anomaly_confirm_lag: int = 0
    trunc_mass: float | None = None
    min_range_len: int = 300

    def __post_init__(self):
        _check_probability("p0", self.p0)
        _check_probability("q0", self.q0)
        if self.delta_t < 1:
            raise ConfigError(f"delta_t must be at least 1, got {self.delta_t}.")
        if not self.delta_t < self.u_a < self.u_c:
            raise ConfigError(f"Search caps must satisfy delta_t < u_a < u_c, got delta_t={self.delta_t}, "
                              f"u_a={self.u_a}, u_c={self.u_c}.")
        for name in ("lambda_a", "lambda_c"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}.")
        for name in ("delta", "confirm_lag", "anomaly_confirm_lag"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative, got {getattr(self, name)}.")
        if self.trunc_mass is not None:
            _check_probability("trunc_mass", self.trunc_mass)
            if self.min_range_len < self.delta_t + 3:
                raise ConfigError(f"min_range_len must be at least delta_t + 3 = {self.delta_t + 3}, got "
                                  f"{self.min_range_len}.")

    @property
    def checkpoint_horizon(self) -> int:
        """The number of past steps the detector keeps checkpoints and endpoint histories for."""
        return self.u_a + self.delta_t + 2 + self.anomaly_confirm_lag

    def replace(self, **changes) -> "Hyperparams":
        """
        Returns a copy with some fields changed, validated again.
        """
        values = asdict(self)
        unknown = set(changes) - set(values)
        if unknown:
            raise ConfigError(f"Unknown hyperparameters: {', '.join(sorted(unknown))}.")
        values.update(changes)
        return Hyperparams(**values)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "Hyperparams":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"Unknown hyperparameters: {', '.join(sorted(unknown))}.")
        return cls(**values)
