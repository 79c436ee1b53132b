# "model/features.py" from libBOCDPy by the libBOCDPy Contributors
#
# Helpers that turn raw stream columns into what the observation models expect: hour-of-day design rows for the
# regression model and min-max scaling against fixed, user-supplied bounds.

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, InputError


HOUR_OF_DAY_DIM = 25


def hour_of_day_design(day_index: float, hour: int) -> np.ndarray:
    """
    Builds the design row for hourly data: the day index followed by 24 hour-of-day indicators. The indicators sum to
    one, so they carry the intercept and no separate constant column is needed.

    Parameters
    ----------
    day_index : float
        The (possibly scaled) index of the day the observation belongs to.
    hour : int
        The hour of the day, 0 to 23.

    Returns
    -------
    np.ndarray
        The feature row, of length 25.
    """
    if not 0 <= hour <= 23 or int(hour) != hour:
        raise InputError(f"Hour of day must be an integer from 0 to 23, got {hour}.")
    row = np.zeros(HOUR_OF_DAY_DIM)
    row[0] = float(day_index)
    row[1 + int(hour)] = 1.0
    return row


@dataclass(frozen=True)
class MinMaxScaler:
    """
    Maps values into [0, 1] using bounds fixed in advance. Bounds learnt from the stream itself would make the output
    at time t depend on later data, so they always come from configuration. Values outside the bounds are not clipped.

    Attributes
    ----------
    lower : float
        The value mapped to 0.
    upper : float
        The value mapped to 1.
    """
    lower: float
    upper: float

    def __post_init__(self):
        if not np.isfinite(self.lower) or not np.isfinite(self.upper) or not self.upper > self.lower:
            raise ConfigError(f"Min-max bounds must be finite with upper > lower, got ({self.lower}, {self.upper}).")

    def transform(self, value):
        """
        Scales a value or an array of values.
        """
        return (np.asarray(value, dtype=float) - self.lower) / (self.upper - self.lower)

    def inverse(self, value):
        return np.asarray(value, dtype=float) * (self.upper - self.lower) + self.lower

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper}
