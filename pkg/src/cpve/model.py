"""Model specification and its TOML file format.

A model file has three parts::

    initial = 1                      # Z_0

    [offspring]                      # reproduction law schedule
    schedule = "constant"            # "constant" | "explicit" | "parametric"
    law = { kind = "tabulated", values = [0, 1, 2], probs = [0.25, 0.25, 0.5] }

    [control]                        # control family
    kind = "binomial"
    c = 0.5

See ``README.md`` for every law, schedule and control kind and their fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import tomli
import tomli_w

from .control import (BinomialControl, Capped, ControlFamily, Identity,
                      Multiplier, PoissonControl, TabulatedControl)
from .laws import IntegerLaw, ValidationError, law_from_dict
from .schedule import (ExplicitSchedule, OffspringSchedule, ParametricSchedule,
                       constant_schedule, sequence_from_dict)


class ModelFileError(ValueError):
    """Parse or validation failure, with the offending field in the message."""


@dataclass(frozen=True)
class ModelSpec:
    offspring: OffspringSchedule
    control: ControlFamily
    initial: int = 1

    def __post_init__(self):
        if int(self.initial) != self.initial or self.initial < 0:
            raise ValidationError(f"initial size must be a non-negative integer, got {self.initial!r}")
        object.__setattr__(self, "initial", int(self.initial))

    def with_initial(self, n: int) -> "ModelSpec":
        return ModelSpec(self.offspring, self.control, n)

    def to_dict(self) -> dict:
        return {"initial": self.initial, "offspring": self.offspring.to_dict(),
                "control": self.control.to_dict()}


def _law(d, path: str) -> IntegerLaw:
    if not isinstance(d, dict):
        raise ModelFileError(f"{path}: expected a table describing a law")
    try:
        return law_from_dict(d)
    except KeyError as exc:
        raise ModelFileError(f"{path}: missing field {exc.args[0]!r}") from None
    except (ValidationError, TypeError, ValueError) as exc:
        raise ModelFileError(f"{path}: {exc}") from None


def _schedule(d, path="offspring") -> OffspringSchedule:
    if not isinstance(d, dict):
        raise ModelFileError(f"{path}: expected a table")
    kind = d.get("schedule", "constant")
    try:
        if kind == "constant":
            return constant_schedule(_law(d.get("law"), f"{path}.law"))
        if kind == "explicit":
            gens = tuple(_law(x, f"{path}.generations[{i}]") for i, x in enumerate(d.get("generations", [])))
            return ExplicitSchedule(gens, _law(d.get("tail"), f"{path}.tail"))
        if kind == "parametric":
            if "param" not in d:
                raise ModelFileError(f"{path}.param: missing parameter sequence")
            try:
                seq = sequence_from_dict(d["param"])
            except KeyError as exc:
                raise ModelFileError(f"{path}.param: missing field {exc.args[0]!r}") from None
            return ParametricSchedule(d.get("family"), seq, d.get("trials"))
    except ValidationError as exc:
        raise ModelFileError(f"{path}: {exc}") from None
    raise ModelFileError(f"{path}.schedule: unknown schedule {kind!r}")


def _control(d, path="control") -> ControlFamily:
    if not isinstance(d, dict):
        raise ModelFileError(f"{path}: expected a table")
    kind = d.get("kind")
    try:
        if kind == "identity":
            return Identity()
        if kind == "binomial":
            return BinomialControl(float(d["c"]), d.get("removed", 0))
        if kind == "poisson":
            return PoissonControl(float(d["rate"]))
        if kind == "capped":
            return Capped(d["cap"])
        if kind == "multiplier":
            return Multiplier(_law(d.get("factor"), f"{path}.factor"))
        if kind == "tabulated":
            table = tuple(_law(x, f"{path}.table[{i}]") for i, x in enumerate(d.get("table", [])))
            return TabulatedControl(table, _control(d.get("tail"), f"{path}.tail"))
    except KeyError as exc:
        raise ModelFileError(f"{path}: missing field {exc.args[0]!r}") from None
    except ValidationError as exc:
        raise ModelFileError(f"{path}: {exc}") from None
    raise ModelFileError(f"{path}.kind: unknown control kind {kind!r}")


def model_from_dict(d: dict) -> ModelSpec:
    for key in ("offspring", "control"):
        if key not in d:
            raise ModelFileError(f"missing section [{key}]")
    try:
        return ModelSpec(_schedule(d["offspring"]), _control(d["control"]), d.get("initial", 1))
    except ValidationError as exc:
        raise ModelFileError(f"initial: {exc}") from None


def loads_model(text: str) -> ModelSpec:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ModelFileError(f"TOML syntax error: {exc}") from None
    return model_from_dict(data)


def parse_model_file(path) -> ModelSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFileError(f"{path}: {exc.strerror}") from None
    try:
        return loads_model(text)
    except ModelFileError as exc:
        raise ModelFileError(f"{path}: {exc}") from None


def dumps_model(model: ModelSpec) -> str:
    return tomli_w.dumps(model.to_dict())
