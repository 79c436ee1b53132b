# "cli/config.py" from libBOCDPy by the libBOCDPy Contributors
#
# The run configuration read by the command line: hyperparameters, observation model, engine choice, input handling
# and paths, stored as JSON.

import json
import logging
import pathlib

from ..bound.hyperbound import q0_upper_bound, spurious_alarm_rate
from ..detect.detector import ENGINES
from ..engine.hyperparams import Hyperparams
from ..errors import ConfigError
from ..model.features import HOUR_OF_DAY_DIM, MinMaxScaler
from ..model.obsmodel import ModelVariant, ObsModelConfig

_LOG = logging.getLogger(__name__)

FEATURE_MODES = ("hour-of-day",)
ENDPOINT_MODES = ("sequential", "joint")


class RunConfig:
    """
    A RunConfig object bundles everything a detection run is configured with. A default RunConfig reproduces the
    simulation setting; call load() to read a JSON configuration into it.

    Attributes
    ----------
    hp : Hyperparams
        The hyperparameters.
    obs_cfg : ObsModelConfig
        The observation model.
    engine : str
        "bocd-ar", "bocd" or "bocpd".
    endpoint_mode : str
        "sequential" or "joint".
    retain_collective : bool
        Whether collective anomalies are put back into the series once classified.
    strict : bool
        Whether a malformed input row aborts the run instead of being reported and skipped.
    features : str, optional
        How feature rows are built. "hour-of-day" derives them from timestamps; None reads any extra CSV columns.
    value_bounds : MinMaxScaler, optional
        Fixed bounds for min-max scaling of values.
    feature_bounds : list[MinMaxScaler], optional
        Fixed bounds for min-max scaling of each feature column.
    input_path : str, optional
        The CSV file to read. None reads standard input.
    output_path : str, optional
        The file to write event records to. None writes standard output.
    posterior_dump : str, optional
        A file to write the run length posterior of every step to.
    """
    def __init__(self):
        self.hp: Hyperparams = Hyperparams()
        self.obs_cfg: ObsModelConfig = ObsModelConfig()
        self.engine: str = "bocd-ar"
        self.endpoint_mode: str = "sequential"
        self.retain_collective: bool = False
        self.strict: bool = False
        self.features: str | None = None
        self.value_bounds: MinMaxScaler | None = None
        self.feature_bounds: list | None = None
        self.input_path: str | None = None
        self.output_path: str | None = None
        self.posterior_dump: str | None = None

    def load(self, text: str) -> None:
        """
        Loads a JSON configuration. Missing keys keep their defaults.

        Parameters
        ----------
        text : str
            The JSON text.
        """
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Configuration is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigError("Configuration must be a JSON object.")
        self._from_dict(data)

    @classmethod
    def from_file(cls, path: str | pathlib.Path) -> "RunConfig":
        """
        Creates a RunConfig from a JSON file.
        """
        path = pathlib.Path(path)
        if not path.exists():
            raise ConfigError(f"Configuration file {path} does not exist.")
        config = cls()
        config.load(path.read_text())
        return config

    @classmethod
    def application(cls) -> "RunConfig":
        """
        Creates the configuration of the hourly search-interest setting: regression on a day index plus hour-of-day
        indicators, long anomalies and posterior-tail truncation of the change point search range.
        """
        config = cls()
        config.hp = Hyperparams(p0=0.001, q0=0.02, delta_t=32, u_a=192, u_c=5000, lambda_a=0.5, lambda_c=0.5,
                                delta=6, confirm_lag=6, anomaly_confirm_lag=32, trunc_mass=0.001,
                                min_range_len=1000)
        config.obs_cfg = ObsModelConfig(ModelVariant.LINEAR_REGRESSION, sigma0_sq=1e-4, v0=0.01, k0=1e-4,
                                        feature_dim=HOUR_OF_DAY_DIM)
        config.features = "hour-of-day"
        return config

    def _from_dict(self, data: dict) -> None:
        known = {"schema", "hyperparams", "obs_model", "engine", "endpoint_mode", "retain_collective", "strict",
                 "features", "normalize", "io"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(sorted(unknown))}.")
        if data.get("schema", 1) != 1:
            raise ConfigError(f"Unsupported configuration schema {data['schema']!r}.")
        try:
            if "hyperparams" in data:
                self.hp = Hyperparams.from_dict(data["hyperparams"])
            if "obs_model" in data:
                self.obs_cfg = ObsModelConfig.from_dict(data["obs_model"])
            normalize = data.get("normalize")
            if normalize is not None:
                value = normalize.get("value")
                self.value_bounds = MinMaxScaler(**value) if value is not None else None
                features = normalize.get("features")
                self.feature_bounds = [MinMaxScaler(**b) for b in features] if features is not None else None
        except (TypeError, AttributeError) as e:
            raise ConfigError(f"Invalid configuration value: {e}")
        self.engine = data.get("engine", self.engine)
        self.endpoint_mode = data.get("endpoint_mode", self.endpoint_mode)
        self.retain_collective = bool(data.get("retain_collective", self.retain_collective))
        self.strict = bool(data.get("strict", self.strict))
        self.features = data.get("features", self.features)
        io = data.get("io", {})
        self.input_path = io.get("input", self.input_path)
        self.output_path = io.get("output", self.output_path)
        self.posterior_dump = io.get("posterior_dump", self.posterior_dump)
        self.validate()

    def to_dict(self) -> dict:
        normalize = None
        if self.value_bounds is not None or self.feature_bounds is not None:
            normalize = {
                "value": self.value_bounds.to_dict() if self.value_bounds is not None else None,
                "features": [b.to_dict() for b in self.feature_bounds] if self.feature_bounds is not None else None,
            }
        return {
            "schema": 1,
            "hyperparams": self.hp.to_dict(),
            "obs_model": self.obs_cfg.to_dict(),
            "engine": self.engine,
            "endpoint_mode": self.endpoint_mode,
            "retain_collective": self.retain_collective,
            "strict": self.strict,
            "features": self.features,
            "normalize": normalize,
            "io": {"input": self.input_path, "output": self.output_path, "posterior_dump": self.posterior_dump},
        }

    def dump(self) -> str:
        """
        Dumps the RunConfig back into JSON text that load() reads back unchanged.

        Returns
        -------
        str
            The JSON text.
        """
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def validate(self) -> None:
        """
        Checks the settings against each other. Raises ConfigError on a conflict.
        """
        if self.engine not in ENGINES:
            raise ConfigError(f"Unknown engine {self.engine!r}; expected one of {', '.join(ENGINES)}.")
        if self.endpoint_mode not in ENDPOINT_MODES:
            raise ConfigError(f"Unknown endpoint mode: {self.endpoint_mode!r}.")
        if self.endpoint_mode == "joint" and self.engine != "bocd-ar":
            raise ConfigError(f"Joint endpoints are only supported by the bocd-ar engine, not {self.engine!r}.")
        if self.features is not None and self.features not in FEATURE_MODES:
            raise ConfigError(f"Unknown feature mode {self.features!r}; expected one of {', '.join(FEATURE_MODES)}.")
        if self.features == "hour-of-day" and self.obs_cfg.feature_dim != HOUR_OF_DAY_DIM:
            raise ConfigError(f"Hour-of-day features need the regression model with feature_dim "
                              f"{HOUR_OF_DAY_DIM}, got feature_dim {self.obs_cfg.feature_dim}.")
        if self.feature_bounds is not None and len(self.feature_bounds) != self.obs_cfg.feature_dim:
            raise ConfigError(f"Expected {self.obs_cfg.feature_dim} feature bounds, got {len(self.feature_bounds)}.")

    def check_bound(self) -> bool:
        """
        Warns when q0 is large enough for the prior alone to push the anomaly posterior past lambda_a right after a
        change point.

        Returns
        -------
        bool
            True when the bound holds.
        """
        hp = self.hp
        if hp.lambda_a >= 1.0:
            return True
        rate = spurious_alarm_rate(hp.p0, hp.q0, hp.delta_t)
        if rate < hp.lambda_a:
            return True
        _LOG.warning("q0=%g gives a spurious alarm rate of %.3f, at or above lambda_a=%g; keep q0 below %.4g",
                     hp.q0, rate, hp.lambda_a, q0_upper_bound(hp.p0, hp.delta_t, hp.lambda_a))
        return False
