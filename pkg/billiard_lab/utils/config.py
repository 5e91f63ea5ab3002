import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from billiard_lab.utils.enums import ExperimentKind, MapKind
from billiard_lab.utils.errors import ConfigError


class Config:
    """
    Represents a config dictionary that can be also saved.
    """

    def __init__(self, dic):
        self._dic = dic

    def __getitem__(self, key):
        return self._dic.get(key)

    def __repr__(self) -> str:
        return self._dic.__repr__()

    def get(self, key, default=None):
        return self._dic.get(key, default)

    def to_dict(self) -> Dict[str, Any]:
        return json.loads(json.dumps(self._dic))

    def save(self):
        """
        Persists any changes.
        """
        pass


class FileConfig(Config):
    """
    Config file that can be read from and written to a file.
    """

    def __init__(self, filename):
        self.filename = filename
        try:
            with open(filename, "r", encoding="UTF-8") as f:
                super().__init__(json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config file {filename}: {e}")

    def save(self):
        with open(self.filename, "w", encoding="UTF-8") as f:
            json.dump(self._dic, f, ensure_ascii=False, indent=2)


def instance_path() -> str:
    """
    Directory holding config_base.json and the example tables.
    BILLIARD_LAB_INSTANCE overrides the default next to the package.
    """
    override = os.environ.get("BILLIARD_LAB_INSTANCE")
    if override:
        return override
    repo_root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    candidate = os.path.join(repo_root, "instance")
    if os.path.isdir(candidate):
        return candidate
    return os.path.join(os.getcwd(), "instance")


_settings: Optional[Config] = None


def settings() -> Config:
    """
    Numeric defaults of the laboratory, loaded once from instance/config_base.json.
    """
    global _settings
    if _settings is None:
        _settings = FileConfig(os.path.join(instance_path(), "config_base.json"))
    return _settings


def load_settings(directory: Optional[str] = None, filename: str = "config_base.json") -> FileConfig:
    """
    (Re)loads the numeric defaults from a config file of the given instance directory.
    """
    global _settings
    _settings = FileConfig(os.path.join(directory or instance_path(), filename))
    return _settings


def install_settings(dic: Dict[str, Any]) -> Config:
    """
    Replaces the numeric defaults by an in-memory copy, e.g. the settings of the parent
    process in a worker.
    """
    global _settings
    _settings = Config(dic)
    return _settings


# Fields that change how a run is executed but not what it computes
_EXECUTION_FIELDS = ("workers", "out", "timeout", "plot")


@dataclass
class ExperimentConfig:
    """
    Everything needed to run (and re-run) one experiment.

    The table is given either as a `family:key=val,...` shorthand or as the path of a
    table definition file. Budgets left at None fall back to config_base.json.
    """
    experiment: ExperimentKind
    table: str
    seed: int
    out: str
    samples: Optional[int] = None
    n_max: Optional[int] = None
    r_max: Optional[int] = None
    workers: int = 1
    rule: Optional[str] = None
    f: str = "free-path"
    g: Optional[str] = None
    map_kind: MapKind = MapKind.full
    chains: int = 1
    start: Optional[str] = None
    collisions: int = 100
    curves: Optional[int] = None
    resolution: Optional[int] = None
    timeout: Optional[float] = None
    plot: bool = True
    table_definition: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.experiment, str):
            self.experiment = parse_enum(ExperimentKind, self.experiment, "experiment")
        if isinstance(self.map_kind, str):
            self.map_kind = parse_enum(MapKind, self.map_kind, "map kind")
        self.validate()

    def validate(self):
        """
        Checks budgets, seed and output directory.

        Raises
        ------
        ConfigError
            if any of the invariants does not hold.
        """
        if self.seed is None:
            raise ConfigError("a master seed is required")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError(f"seed {self.seed} is not a 64 bit unsigned integer")
        for name in ("samples", "n_max", "r_max", "curves", "resolution"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.workers < 1 or self.chains < 1 or self.collisions < 1:
            raise ConfigError("workers, chains and collisions must be positive")
        if self.timeout is not None and self.timeout <= 0:
            raise ConfigError("timeout must be positive")
        os.makedirs(self.out, exist_ok=True)
        if not os.access(self.out, os.W_OK):
            raise ConfigError(f"output directory {self.out} is not writable")

    def to_dict(self) -> Dict[str, Any]:
        dic = dataclasses.asdict(self)
        dic["experiment"] = self.experiment.value
        dic["map_kind"] = self.map_kind.value
        return dic

    def config_hash(self) -> str:
        """
        SHA-256 of the canonical JSON of the fields that determine the results.
        Worker count, output directory, timeout and plotting are left out so a re-run
        with a different partition of work reproduces the same provenance header.
        """
        dic = {k: v for k, v in self.to_dict().items() if k not in _EXECUTION_FIELDS}
        canonical = json.dumps(dic, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("UTF-8")).hexdigest()[:16]

    @staticmethod
    def from_dict(dic: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(ExperimentConfig)}
        unknown = set(dic) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return ExperimentConfig(**dic)
        except TypeError as e:
            raise ConfigError(f"incomplete config: {e}")

    @staticmethod
    def from_file(filename: str, **overrides) -> "ExperimentConfig":
        dic = FileConfig(filename).to_dict()
        dic.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig.from_dict(dic)


def parse_enum(enum_type, value: str, what: str):
    """
    Looks up an enum member by its value.

    Raises
    ------
    ConfigError
        if value is not one of the member values.
    """
    for member in enum_type:
        if member.value == value:
            return member
    supported = ", ".join(m.value for m in enum_type)
    raise ConfigError(f"unsupported {what} {value} (supported: {supported})")
