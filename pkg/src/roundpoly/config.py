"""Flat ``key = value`` run configuration shared by every command."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .degrade import DegradeConfig
from .linearc import DEFAULT_FIT_TOLERANCE, DEFAULT_STRAIGHTNESS
from .path_model import CORNER_ANGLE, DEFAULT_SPACING
from .raster import DEFAULT_MASK_RESOLUTION, DEFAULT_OUTLINE_SIZE, DEFAULT_STROKE_WIDTH
from .stylize import COLOR_DELTA, EVAL_CAP, STROKE_EPSILON

SCORERS = ("neg-mse", "ssim", "external")


@dataclass(frozen=True)
class RunConfig:
    spacing: float = DEFAULT_SPACING
    fit_tolerance: float = DEFAULT_FIT_TOLERANCE
    straightness_tol: float = DEFAULT_STRAIGHTNESS
    corner_angle: float = CORNER_ANGLE
    stroke_width: float = DEFAULT_STROKE_WIDTH
    outline_size: int = DEFAULT_OUTLINE_SIZE
    mask_resolution: int = DEFAULT_MASK_RESOLUTION
    resolution_min: int = 224
    resolution_max: int = 336
    blur_min: float = 0.5
    blur_max: float = 2.0
    bypass_probability: float = 0.25
    binarize_threshold: float = 0.5
    tracer_command: str = ""
    eval_cap: int = EVAL_CAP
    stroke_epsilon: float = STROKE_EPSILON
    color_delta: float = COLOR_DELTA
    scorer: str = "neg-mse"
    scorer_command: str = ""
    rng_seed: int = 0

    def __post_init__(self):
        if self.scorer not in SCORERS:
            raise ValueError(f"unknown scorer {self.scorer!r}; expected one of {', '.join(SCORERS)}")
        if self.spacing <= 0 or self.fit_tolerance <= 0:
            raise ValueError("spacing and fit_tolerance must be positive")

    def dumps(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = (s.strip() for s in line.partition("="))
            if not sep:
                raise ValueError(f"config line {n}: expected key = value")
            if key not in types:
                raise ValueError(f"config line {n}: unknown key {key!r}")
            kind = types[key]
            try:
                values[key] = int(val) if kind == "int" else float(val) if kind == "float" else val
            except ValueError as exc:
                raise ValueError(f"config line {n}: bad value for {key}: {val!r}") from exc
        return cls(**values)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def degrade_config(self, seed=None) -> DegradeConfig:
        return DegradeConfig(
            resolution_range=(self.resolution_min, self.resolution_max),
            blur_range=(self.blur_min, self.blur_max),
            rng_seed=self.rng_seed if seed is None else seed,
            bypass_probability=self.bypass_probability,
            threshold=self.binarize_threshold,
            outline_size=self.outline_size,
            stroke_width=self.stroke_width,
            tracer_command=self.tracer_command or None,
        )
