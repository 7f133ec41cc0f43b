"""Run configuration: strict JSON with embedded defaults and units.

Every section maps onto one parameter object; keys not listed in
:data:`SCHEMA` are rejected, and errors name the file line that holds the
offending key.
"""

import dataclasses
import json
import re

from hazardops.errors import ConfigurationError, HazardOpsError
from hazardops.excitation import GroundMotionParams
from hazardops.harness import DatasetConfig
from hazardops.harness.experiment import MODEL_KINDS
from hazardops.operators import TrainSchedule
from hazardops.operators.deeponet import DEFAULTS as DEEPONET_DEFAULTS
from hazardops.operators.fno import DEFAULTS as FNO_DEFAULTS
from hazardops.structural import ShearBuildingModel

BUILDING_UNITS = {
    "n_stories": "-", "story_height": "in", "floor_weight": "kip", "initial_stiffness": "kip/in",
    "post_yield_ratio": "-", "yield_force": "kip", "r0": "-", "cr1": "-", "cr2": "-",
    "damping_ratio": "-", "gravity": "in/s^2",
}
GROUND_UNITS = {
    "arias_intensity": "in/s (pi/2g * int a^2 dt, a in in/s^2)", "effective_duration": "s", "t_mid": "s",
    "omega_mid": "rad/s", "omega_prime": "rad/s^2", "filter_damping": "-", "dt": "s", "n_t": "samples",
    "gravity": "in/s^2",
}
DATASET_UNITS = {
    "n_samples": "records", "train_fraction": "-", "master_seed": "-", "drop_head": "samples",
    "stride": "samples", "response": "displacement|velocity|acceleration|story_drift",
    "retry_offset": "-", "max_retries": "-", "workers": "processes", "chunk": "records",
}
SCHEDULE_UNITS = {
    "epochs": "-", "batch_size": "samples", "lr": "-", "decay": "-", "decay_every": "epochs",
    "sa": "bool (set by the model kind)", "sa_lr": "-", "sa_init": "-", "sa_per_channel": "bool",
    "seed": "-", "record_lambda": "bool",
}
FNO_UNITS = {k: "-" for k in FNO_DEFAULTS}
FNO_UNITS.update(k_max="modes", padding="samples", d_v="channels", activation="relu|tanh|gelu|identity")
DEEPONET_UNITS = {k: "-" for k in DEEPONET_DEFAULTS}
DEEPONET_UNITS.update(n_t="samples (defaults to the data length)", p="basis functions",
                      activation="relu|tanh|gelu|identity", n_ch="floors from the top")


def _defaults(cls):
    return {f.name: f.default for f in dataclasses.fields(cls)}


SCHEMA = {
    "building": (_defaults(ShearBuildingModel), BUILDING_UNITS),
    "ground_motion": (_defaults(GroundMotionParams), GROUND_UNITS),
    "dataset": (_defaults(DatasetConfig), DATASET_UNITS),
    "schedule": (_defaults(TrainSchedule), SCHEDULE_UNITS),
    "fno": (dict(FNO_DEFAULTS), FNO_UNITS),
    "deeponet": (dict(DEEPONET_DEFAULTS), DEEPONET_UNITS),
    "stage1_schedule": ({}, {}),
}
TOP_LEVEL = {"model": ("fno", "one of " + "|".join(MODEL_KINDS)),
             "residual": (False, "bool, DeepFNOnet stage 2 learns Y - G(F)"),
             "output_dir": ("runs", "path")}


class ConfigError(ConfigurationError):
    """Configuration problem, optionally anchored to a line of the source file."""

    def __init__(self, message, source=None, line=None):
        self.source, self.line = source, line
        where = f"{source or '<config>'}:{line}: " if line else (f"{source}: " if source else "")
        super().__init__(where + message)


def help_text():
    """Every key with its default and unit, grouped by section."""
    lines = ["configuration keys (JSON; section.key = default [unit]):"]
    for key, (default, unit) in TOP_LEVEL.items():
        lines.append(f"  {key} = {json.dumps(default)} [{unit}]")
    for section, (defaults, units) in SCHEMA.items():
        if section == "stage1_schedule":
            lines.append("  stage1_schedule.* = schedule.* [DeepFNOnet stage 1; same keys as schedule]")
            continue
        for key, default in defaults.items():
            lines.append(f"  {section}.{key} = {json.dumps(default)} [{units.get(key, '-')}]")
    return "\n".join(lines)


def _line_of(text, keys):
    """1-based line of the last key in ``keys``, searched after its parents."""
    if text is None:
        return None
    pos = 0
    for key in keys:
        m = re.compile(r'"' + re.escape(key) + r'"\s*:').search(text, pos)
        if m is None:
            return None
        pos = m.end()
    return text.count("\n", 0, pos) + 1


_TYPES = {bool: (bool,), int: (int,), float: (int, float), str: (str,), tuple: (list,), list: (list,)}


def _check_type(value, default, where, text, source, keys):
    if default is None or value is None:
        return value
    allowed = _TYPES.get(type(default), (type(default),))
    if isinstance(value, bool) and bool not in allowed:
        allowed = ()
    if not isinstance(value, allowed):
        raise ConfigError(f"{where} expects {type(default).__name__}, got {json.dumps(value)}",
                          source, _line_of(text, keys))
    return value


@dataclasses.dataclass
class RunConfig:
    building: ShearBuildingModel
    ground_motion: GroundMotionParams
    dataset: DatasetConfig
    schedule: TrainSchedule
    stage1_schedule: TrainSchedule
    fno: dict
    deeponet: dict
    model: str = "fno"
    residual: bool = False
    output_dir: str = "runs"

    def to_dict(self):
        return {"building": self.building.to_dict(), "ground_motion": self.ground_motion.to_dict(),
                "dataset": self.dataset.to_dict(), "schedule": self.schedule.to_dict(),
                "stage1_schedule": self.stage1_schedule.to_dict(), "fno": self.fno,
                "deeponet": self.deeponet, "model": self.model, "residual": self.residual,
                "output_dir": self.output_dir}


def parse_config(data=None, text=None, source=None):
    """Validate a mapping (or JSON ``text``) into a :class:`RunConfig`."""
    if data is None:
        if text is None:
            data = {}
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", source, exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object", source, 1)
    for key in data:
        if key not in SCHEMA and key not in TOP_LEVEL:
            raise ConfigError(f"unknown key '{key}'", source, _line_of(text, [key]))
    sections = {}
    for section, (defaults, _) in SCHEMA.items():
        given = data.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"section '{section}' must be an object", source, _line_of(text, [section]))
        allowed = defaults if section != "stage1_schedule" else SCHEMA["schedule"][0]
        for key, value in given.items():
            if key not in allowed:
                raise ConfigError(f"unknown key '{section}.{key}'", source, _line_of(text, [section, key]))
            _check_type(value, allowed[key], f"{section}.{key}", text, source, [section, key])
        sections[section] = given
    for key, (default, _) in TOP_LEVEL.items():
        if key in data:
            _check_type(data[key], default, key, text, source, [key])
    model = data.get("model", "fno")
    if model not in MODEL_KINDS:
        raise ConfigError(f"model must be one of {MODEL_KINDS}, got '{model}'", source, _line_of(text, ["model"]))

    def build(section, factory):
        try:
            return factory(**sections[section])
        except (HazardOpsError, TypeError, ValueError) as exc:
            raise ConfigError(f"section '{section}': {exc}", source, _line_of(text, [section])) from None

    schedule = build("schedule", TrainSchedule)
    stage1 = dict(schedule.to_dict(), **sections["stage1_schedule"])
    sections["stage1_schedule"] = stage1
    return RunConfig(
        building=build("building", ShearBuildingModel),
        ground_motion=build("ground_motion", GroundMotionParams),
        dataset=build("dataset", DatasetConfig),
        schedule=schedule,
        stage1_schedule=build("stage1_schedule", TrainSchedule),
        fno=dict(sections["fno"]), deeponet=dict(sections["deeponet"]),
        model=model, residual=bool(data.get("residual", False)),
        output_dir=str(data.get("output_dir", "runs")),
    )


def load_config(path=None):
    if path is None:
        return parse_config({})
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text=text, source=str(path))
