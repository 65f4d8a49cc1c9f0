"""Job configuration: a YAML tree validated into typed models.

Unknown keys are errors. Validation failures are reported as
:class:`SchemaError` (or :class:`UnknownKey`) carrying the dotted path to the
offending entry.
"""

from typing import Annotated, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import SchemaError, UnknownKey


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def as_complex(v):
    """Complex number from ``[re, im]``, a number or a string like ``1+2j``."""
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(v)


Point = tuple[float, float]


class Physics(_Model):
    wavelength: float = Field(gt=0)
    deltaV: float = Field(ge=0)
    deltaT: float = Field(ge=0)
    gamma: float = Field(default=1.4, ge=1)


class Robin(_Model):
    """``a`` is a complex number (``"1+2j"`` or ``[re, im]``) or ``incoming`` (a = ik) / ``outgoing`` (a = -ik)."""

    a: Union[Literal["incoming", "outgoing"], str, float, list[float]] = "incoming"

    @field_validator("a")
    @classmethod
    def _check(cls, v):
        if v in ("incoming", "outgoing"):
            return v
        try:
            as_complex(v)
        except (TypeError, ValueError) as e:
            raise ValueError(f"not a complex number: {v!r}") from e
        return v

    def value(self, k):
        if self.a == "incoming":
            return 1j * k
        if self.a == "outgoing":
            return -1j * k
        return as_complex(self.a)


class CircleCurve(_Model):
    type: Literal["circle"]
    center: Point = (0.0, 0.0)
    radius: float = Field(default=1.0, gt=0)
    clockwise: bool = False


class StarCurve(_Model):
    type: Literal["star"]
    center: Point = (0.0, 0.0)
    radius: float = Field(default=1.0, gt=0)
    amplitude: float = 0.1
    lobes: int = Field(default=5, ge=1)
    clockwise: bool = False


class LineCurve(_Model):
    type: Literal["line"]
    start: Point
    end: Point


class ArcCurve(_Model):
    type: Literal["arc"]
    center: Point
    radius: float = Field(gt=0)
    theta0: float
    theta1: float


class SineWallCurve(_Model):
    type: Literal["sine_wall"]
    x0: float
    x1: float
    y0: float
    amplitude: float
    reverse: bool = False


class SplineCurve(_Model):
    type: Literal["spline"]
    points: list[Point] = Field(min_length=2)
    start_tangent: Optional[Point] = None
    end_tangent: Optional[Point] = None


Curve = Annotated[Union[CircleCurve, StarCurve, LineCurve, ArcCurve, SineWallCurve, SplineCurve],
                  Field(discriminator="type")]


class ZeroData(_Model):
    type: Literal["zero"]


class PointSourceData(_Model):
    type: Literal["point_source"]
    x0: Point


class ConstantData(_Model):
    type: Literal["constant"]
    value: Union[str, float, list[float]] = 0.0
    h_plus: Union[str, float, list[float]] = 0.0
    h_minus: Union[str, float, list[float]] = 0.0


class FileData(_Model):
    """CSV with columns ``re,im`` (one row per node), optional ``h_plus``/``h_minus``."""

    type: Literal["file"]
    path: str
    h_plus: Union[str, float, list[float]] = 0.0
    h_minus: Union[str, float, list[float]] = 0.0


class FourierData(_Model):
    """Data ``sum f_n exp(i n theta)`` on a circle centred at the origin; rows ``[n, re, im]``."""

    type: Literal["fourier"]
    coefficients: list[tuple[int, float, float]]


Data = Annotated[Union[ZeroData, PointSourceData, ConstantData, FileData, FourierData],
                 Field(discriminator="type")]


class Component(_Model):
    name: str
    kind: Literal["star", "circ"]
    curve: Curve
    data: Data = ZeroData(type="zero")


class RegionSpec(_Model):
    name: str
    components: list[str] = Field(min_length=1)
    interfaces: list[str] = []


class Coupling(_Model):
    """Two interface components given as ``region/component``."""

    a: str
    b: str


class Discretization(_Model):
    order: int = Field(default=16, ge=4)
    panels_per_wavelength: float = Field(default=4.0, gt=0)
    corner_depth: int = Field(default=7, ge=0)
    robin_corner_depth: int = Field(default=0, ge=0)
    fin_length: Optional[float] = Field(default=None, gt=0)
    h_scaling: Literal["c1", "plain"] = "c1"


class Grid(_Model):
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int = Field(ge=1)
    ny: int = Field(ge=1)


class Targets(_Model):
    grid: Optional[Grid] = None
    points: list[Point] = []


class Outputs(_Model):
    field: str = "field.csv"
    density_prefix: str = "density_"
    diagnostics: str = "diagnostics.txt"


class JobConfig(_Model):
    physics: Physics
    robin: Robin = Robin()
    components: list[Component] = Field(min_length=1)
    regions: list[RegionSpec] = []
    couplings: list[Coupling] = []
    discretization: Discretization = Discretization()
    targets: Targets = Targets()
    outputs: Outputs = Outputs()

    @model_validator(mode="after")
    def _names(self):
        names = [c.name for c in self.components]
        if len(set(names)) != len(names):
            raise ValueError("component names must be unique")
        known = set(names)
        for r in self.regions:
            for n in r.components + r.interfaces:
                if n not in known:
                    raise ValueError(f"region {r.name!r} refers to unknown component {n!r}")
            for n in r.interfaces:
                if n not in r.components:
                    raise ValueError(f"interface {n!r} is not listed among region {r.name!r} components")
        rnames = {r.name: r for r in self.regions}
        for c in self.couplings:
            for side in (c.a, c.b):
                reg, _, comp = side.partition("/")
                if reg not in rnames or comp not in rnames[reg].interfaces:
                    raise ValueError(f"coupling end {side!r} is not a region interface")
        return self

    @property
    def mode(self):
        """``"dd"``, ``"case1"`` or ``"case2"``."""
        if self.regions:
            return "dd"
        if len(self.components) == 1 and self.components[0].kind == "star" and \
                self.components[0].curve.type in ("circle", "star"):
            return "case1"
        return "case2"


def _raise(err):
    errs = err.errors()
    # a misspelt key also shows up as a missing one; report the unknown key
    e = next((x for x in errs if x["type"] == "extra_forbidden"), errs[0])
    path = tuple(p for p in e["loc"] if not (isinstance(p, str) and p in _TAGS))
    if e["type"] == "extra_forbidden":
        raise UnknownKey(f"unknown key {path[-1]!r}", path) from None
    raise SchemaError(e["msg"], path) from None


_TAGS = {"circle", "star", "line", "arc", "sine_wall", "spline", "zero", "point_source", "constant", "file",
         "fourier"}


def parse_config(text):
    """Parse YAML text into a validated :class:`JobConfig`."""
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise SchemaError(f"invalid YAML: {e}") from None
    if not isinstance(tree, dict):
        raise SchemaError("configuration must be a mapping")
    try:
        return JobConfig.model_validate(tree)
    except ValidationError as e:
        _raise(e)


def dump_config(cfg):
    """Serialize back to YAML (defaults included)."""
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False)
