"""Run configuration: enums, alpha-tilde parsing, validation, serialization.

A RunConfig is validated eagerly (before any compute) and serialized
verbatim into every output file's metadata header, so a run can be
reproduced from any of its outputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .basis import L_MAX
from .blocks import CONVENTIONS, ModelKind
from .errors import ConfigError

ARTIFACT_VERSION = "0.1.0"

# exact symbolic forms accepted for alpha_tilde
_ALPHA_LITERALS = {
    "pi/4": math.pi / 4.0,
    "pi/2": math.pi / 2.0,
    "3pi/4": 3.0 * math.pi / 4.0,
}

# default per-L ensemble sizes for scaling campaigns
SCALING_ENSEMBLE_SIZES = {8: 6000, 12: 4000, 16: 2000, 20: 1000}


class SamplingMode(str, Enum):
    BORN = "born"
    FORCED_UNIFORM = "forced-uniform"
    NO_CLICK = "no-click"


class InitialStateKind(str, Enum):
    PRODUCT_FILLED = "product-filled"
    RANDOM_PRODUCT = "random-product"
    RANDOM_SUPERPOSITION = "random-superposition"
    EQUAL_SUPERPOSITION = "equal-superposition"


def parse_alpha_tilde(value) -> tuple[float, str]:
    """Parse a measurement strength into (float value, canonical label).

    Accepts the literals "pi/4", "pi/2", "3pi/4" exactly, or any decimal.
    The label round-trips through metadata headers without decimal drift.
    """
    if isinstance(value, str):
        text = value.strip()
        if text in _ALPHA_LITERALS:
            return _ALPHA_LITERALS[text], text
        try:
            num = float(text)
        except ValueError:
            raise ConfigError(
                f"alpha_tilde: expected a decimal or one of {sorted(_ALPHA_LITERALS)}, got {value!r}"
            ) from None
    else:
        try:
            num = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"alpha_tilde: not a number: {value!r}") from None
    if not math.isfinite(num):
        raise ConfigError(f"alpha_tilde: must be finite, got {num!r}")
    return num, repr(num)


@dataclass(frozen=True)
class InitialStateSpec:
    """Which initial state to prepare and from which seed."""

    kind: InitialStateKind
    seed: int = 0
    signed_amplitudes: bool = False  # random-superposition only: uniform [-1,1) instead of [0,1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", InitialStateKind(self.kind))
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError(f"initial.seed: expected an integer, got {self.seed!r}")
        if not (0 <= self.seed < 2**64):
            raise ConfigError(f"initial.seed: must fit in 64 bits, got {self.seed}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "seed": self.seed,
            "signed_amplitudes": self.signed_amplitudes,
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "InitialStateSpec":
        if not isinstance(data, dict):
            raise ConfigError(f"initial: expected an object, got {data!r}")
        unknown = set(data) - {"kind", "seed", "signed_amplitudes"}
        if unknown:
            raise ConfigError(f"initial: unknown fields {sorted(unknown)}")
        try:
            kind = InitialStateKind(data.get("kind"))
        except ValueError:
            raise ConfigError(
                f"initial.kind: expected one of {[k.value for k in InitialStateKind]}, "
                f"got {data.get('kind')!r}"
            ) from None
        return InitialStateSpec(
            kind=kind,
            seed=data.get("seed", 0),
            signed_amplitudes=bool(data.get("signed_amplitudes", False)),
        )


def _default_record_every(steps: int) -> int:
    return 1 if steps <= 1000 else 10


@dataclass(frozen=True)
class RunConfig:
    model: ModelKind
    L: int
    alpha_tilde: float
    steps: int
    n_traj: int = 1
    initial: InitialStateSpec = field(
        default_factory=lambda: InitialStateSpec(InitialStateKind.PRODUCT_FILLED)
    )
    sampling: SamplingMode = SamplingMode.BORN
    convention: str = "block-local"
    redraw_initial: bool = False
    seed: int = 0
    record_every: int | None = None
    output_dir: str = "."
    workers: int = 1
    alpha_label: str = ""  # canonical text form for metadata

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", ModelKind(self.model))
        object.__setattr__(self, "sampling", SamplingMode(self.sampling))
        if not isinstance(self.L, int) or isinstance(self.L, bool):
            raise ConfigError(f"L: expected an integer, got {self.L!r}")
        if self.L % 2 != 0 or not (4 <= self.L <= L_MAX):
            raise ConfigError(f"L: must be even with 4 <= L <= {L_MAX}, got {self.L}")
        if not isinstance(self.alpha_tilde, float) or not math.isfinite(self.alpha_tilde):
            raise ConfigError(f"alpha_tilde: must be a finite float, got {self.alpha_tilde!r}")
        if not isinstance(self.steps, int) or self.steps < 1:
            raise ConfigError(f"steps: must be an integer >= 1, got {self.steps!r}")
        if not isinstance(self.n_traj, int) or self.n_traj < 1:
            raise ConfigError(f"n_traj: must be an integer >= 1, got {self.n_traj!r}")
        if self.convention not in CONVENTIONS:
            raise ConfigError(f"convention: expected one of {CONVENTIONS}, got {self.convention!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError(f"seed: expected an integer, got {self.seed!r}")
        if not (0 <= self.seed < 2**64):
            raise ConfigError(f"seed: must fit in 64 bits, got {self.seed}")
        if self.record_every is None:
            object.__setattr__(self, "record_every", _default_record_every(self.steps))
        if not isinstance(self.record_every, int) or self.record_every < 1:
            raise ConfigError(f"record_every: must be an integer >= 1, got {self.record_every!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"workers: must be an integer >= 1, got {self.workers!r}")
        if not self.alpha_label:
            object.__setattr__(self, "alpha_label", repr(self.alpha_tilde))

    def to_dict(self) -> dict[str, Any]:
        """Full config as a JSON-ready dict; embedded in output headers."""
        return {
            "model": self.model.value,
            "L": self.L,
            "alpha_tilde": self.alpha_label,
            "alpha_tilde_value": self.alpha_tilde,
            "steps": self.steps,
            "n_traj": self.n_traj,
            "initial": self.initial.to_dict(),
            "sampling": self.sampling.value,
            "convention": self.convention,
            "redraw_initial": self.redraw_initial,
            "seed": self.seed,
            "record_every": self.record_every,
            "output_dir": self.output_dir,
            "workers": self.workers,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"config: expected a JSON object, got {type(data).__name__}")
        known = {
            "model", "L", "alpha_tilde", "alpha_tilde_value", "steps", "n_traj",
            "initial", "sampling", "convention", "redraw_initial", "seed",
            "record_every", "output_dir", "workers",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"config: unknown fields {sorted(unknown)}")
        for req in ("model", "L", "alpha_tilde", "steps"):
            if req not in data:
                raise ConfigError(f"config: missing required field {req!r}")
        try:
            model = ModelKind(data["model"])
        except ValueError:
            raise ConfigError(
                f"model: expected one of {[m.value for m in ModelKind]}, got {data['model']!r}"
            ) from None
        try:
            sampling = SamplingMode(data.get("sampling", "born"))
        except ValueError:
            raise ConfigError(
                f"sampling: expected one of {[s.value for s in SamplingMode]}, "
                f"got {data.get('sampling')!r}"
            ) from None
        alpha_value, alpha_label = parse_alpha_tilde(data["alpha_tilde"])
        initial = data.get("initial", {"kind": "product-filled"})
        return RunConfig(
            model=model,
            L=data["L"],
            alpha_tilde=alpha_value,
            alpha_label=alpha_label,
            steps=data["steps"],
            n_traj=data.get("n_traj", 1),
            initial=InitialStateSpec.from_dict(initial),
            sampling=sampling,
            convention=data.get("convention", "block-local"),
            redraw_initial=bool(data.get("redraw_initial", False)),
            seed=data.get("seed", 0),
            record_every=data.get("record_every"),
            output_dir=str(data.get("output_dir", ".")),
            workers=data.get("workers", 1),
        )
