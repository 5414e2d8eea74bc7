"""
Persisted documents for density-sieve runs.

Every file the CLI writes is one of these pydantic models, serialized with
:func:`dump_canonical` (sorted keys, two-space indent, trailing newline), so two
runs with the same inputs are byte-identical. Rationals are ``"p/q"`` strings.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import SpecError

ModelT = TypeVar("ModelT", bound=BaseModel)


class FamilySpec(BaseModel):
    """Declarative description of a cover family."""

    window: List[int] = Field(
        default_factory=lambda: [0, 1, 1, 1], description="[lo_num, lo_den, hi_num, hi_den]"
    )
    kind: Literal["dyadic", "rotation", "random", "file"] = Field(..., description="Family kind")
    params: Dict[str, Any] = Field(default_factory=dict, description="Kind-specific parameters")
    seed: Optional[int] = Field(None, description="Seed of the random family")

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "window": [0, 1, 1, 1],
                "kind": "rotation",
                "params": {"step": "1/3", "length": "1/2"},
                "seed": None,
            }
        },
    )

    @field_validator("window")
    @classmethod
    def _window_quad(cls, value: List[int]) -> List[int]:
        if len(value) != 4 or value[1] <= 0 or value[3] <= 0:
            raise ValueError(f"window must be [lo_num, lo_den, hi_num, hi_den], got {value}")
        return value

    @field_validator("seed")
    @classmethod
    def _seed_range(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and not 0 <= value < 1 << 64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {value}")
        return value


class CertificateRecord(BaseModel):
    """An extraction certificate: blocks, residuals, the selected index set and X_ε."""

    epsilon: str = Field(..., description="Residual budget ε as p/q")
    boundaries: List[int] = Field(..., description="N_0 = 0 < N_1 < ... < N_K")
    minimal_ends: List[int] = Field(..., description="Per-block endpoint before padding")
    residuals: List[str] = Field(..., description="Per-block exact residuals as p/q")
    seed: int = Field(..., description="Seed of the ξ_k draws")
    z: Dict[str, Any] = Field(..., description="Index-set JSON of the selection")
    x_eps: Dict[str, Any] = Field(..., description="Interval-union JSON of X_ε to built depth")
    window: List[int] = Field(..., description="Window quadruple")
    family: Dict[str, Any] = Field(..., description="Family descriptor")
    depth: int = Field(..., description="Number of built blocks K")
    truncated: bool = Field(True, description="X_ε is tracked only to the built depth")
    config: Dict[str, Any] = Field(default_factory=dict, description="Resolved configuration")

    model_config = ConfigDict(extra="forbid")


class CheckEntry(BaseModel):
    """One verification check with its metrics and verdict."""

    name: str
    verdict: Literal["pass", "fail", "info"]
    metrics: Dict[str, str] = Field(default_factory=dict)
    per_seed: Optional[List[str]] = Field(None, description="Per-seed residuals as p/q")


class VerificationReport(BaseModel):
    inputs: Dict[str, Any] = Field(default_factory=dict)
    checks: List[CheckEntry] = Field(default_factory=list)
    config: Dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.verdict != "fail" for c in self.checks)


class ContainmentEntry(BaseModel):
    """``Z_m \\ result`` summary for one part."""

    part: int
    cutoff: int
    missed: List[int] = Field(default_factory=list, description="Members of Z_m not in result")


class PseudoUnionRecord(BaseModel):
    result: Dict[str, Any] = Field(..., description="TailUnion JSON")
    cutoffs: List[int] = Field(..., description="Certified cutoffs t_1 < t_2 < ...")
    containment: List[ContainmentEntry] = Field(default_factory=list)
    config: Dict[str, Any] = Field(default_factory=dict)


class CantorSystemRecord(BaseModel):
    boundaries: List[int]
    child_ranges: List[List[Any]] = Field(
        ..., description="[parent, t, s, width, parent prefix] per parent with children"
    )


class DefeatRecord(BaseModel):
    n0: int = Field(..., description="Density < 1/2 at every n >= n0")
    start_block: int = Field(..., description="First block wholly above n0")
    chain: List[int] = Field(..., description="Chosen indices, one per block from start_block")
    point: str = Field(..., description="Limit point bits; zeros continue it")
    coverage_count: int
    system: CantorSystemRecord
    validation: Dict[str, Any] = Field(default_factory=dict)
    z: Dict[str, Any] = Field(default_factory=dict)
    config: Dict[str, Any] = Field(default_factory=dict)


# ------------------------------------------------------------------
# Canonical IO
# ------------------------------------------------------------------


def dump_canonical(doc: Any) -> str:
    """Sorted-key, indent-2 JSON with a trailing newline."""
    if isinstance(doc, BaseModel):
        doc = doc.model_dump(mode="json")
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_document(path: Path, doc: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_canonical(doc), encoding="utf-8")


def parse_document(data: Any, model: Type[ModelT]) -> ModelT:
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise SpecError(f"Invalid {model.__name__}: {exc}") from exc


def read_document(path: Path, model: Type[ModelT]) -> ModelT:
    """Load and validate *path*; malformed content raises SpecError."""
    path = Path(path)
    if not path.exists():
        raise SpecError(f"File not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecError(f"Invalid JSON in {path}: {exc}") from exc
    return parse_document(data, model)


def read_json(path: Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise SpecError(f"File not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecError(f"Invalid JSON in {path}: {exc}") from exc
