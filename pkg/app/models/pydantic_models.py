"""
Pydantic models for signatures, curve records, golden rows and reports.
"""
from fractions import Fraction
from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field


class EmbeddingRoleEnum(str, Enum):
    UNRAMIFIED = "unramified"
    DISCRIMINANT = "discriminant"
    LEVEL = "level"


class OutputFormatEnum(str, Enum):
    TEXT = "text"
    CSV = "csv"
    JSON = "json"
    TEX = "tex"


class IdealLabelEnum(str, Enum):
    RATIONAL = "rational"
    SQUARE = "square"
    SPLIT = "split"


# Signature and audit trail
class Signature(BaseModel):
    model_config = ConfigDict(frozen=True)

    genus: int
    elliptic: Tuple[Tuple[int, int], ...] = ()
    cusps: int = 0
    area: Optional[str] = None

    @property
    def area_fraction(self) -> Optional[Fraction]:
        return None if self.area is None else Fraction(self.area)

    @property
    def elliptic_counts(self) -> Dict[int, int]:
        return dict(self.elliptic)

    def orbifold_area(self) -> Fraction:
        """2g - 2 + sum e_q (1 - 1/q) + s."""
        total = Fraction(2 * self.genus - 2 + self.cusps)
        for order, count in self.elliptic:
            total += count * (1 - Fraction(1, order))
        return total


class LocalFactor(BaseModel):
    prime: str
    role: EmbeddingRoleEnum
    exponent: int = 0
    count: int


class EllipticTerm(BaseModel):
    q: int
    conductor: str
    class_number: int
    unit_index: int
    q_index: int
    factors: List[LocalFactor] = []
    contribution: str


class SignatureAudit(BaseModel):
    d_F: int
    discriminant: str
    level: str
    area: str
    elliptic_counts: Dict[int, int] = {}
    terms: List[EllipticTerm] = []
    signature: Signature


# Records and golden data
class CurveRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    degree: int
    d_F: int
    field_index: int = 0
    D: int
    N: int
    ideal_label: str = ""
    discriminant: str = ""
    level: str = ""
    signature: Signature

    @property
    def genus(self) -> int:
        return self.signature.genus

    def key(self) -> Tuple[int, int, int, int, str]:
        return (self.degree, self.d_F, self.D, self.N, self.ideal_label)


class GoldenRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    degree: int
    d_F: int
    field_index: int = 0
    D: int
    N: int
    ideal_label: str = ""
    signature: str
    genus: int
    line: int = 0


class DiffEntry(BaseModel):
    d_F: int
    D: int
    N: int
    ideal_label: str = ""
    signature: str
    side: str = Field(description="'computed' or 'golden'")


class DiffReport(BaseModel):
    degree: int
    d_F: Optional[int] = None
    computed_count: int
    golden_count: int
    missing: List[DiffEntry] = []
    unexpected: List[DiffEntry] = []

    @property
    def passed(self) -> bool:
        return not self.missing and not self.unexpected


class TableAudit(BaseModel):
    row_count: int
    expected_rows: int
    genus_histogram: Dict[int, int]
    printed_histogram: Dict[int, int]
    degree_histogram: Dict[int, int]

    @property
    def complete(self) -> bool:
        return self.row_count == self.expected_rows

    @property
    def histogram_discrepancy(self) -> bool:
        return self.genus_histogram != self.printed_histogram


class AreaRecord(BaseModel):
    description: str
    d_F: int
    D: int
    N: int
    signature: str
    area: str
    recomputed: bool


class FieldScanReport(BaseModel):
    genus: int
    bound: float
    discriminants: List[int]
    count: int
    minimum: int
    maximum: int
    printed_maximum: int = 849
    printed_count: int = 257

    @property
    def discrepancy(self) -> bool:
        return self.maximum != self.printed_maximum


class BoundRow(BaseModel):
    degree: int
    genus: int
    bound: float


class RunConfig(BaseModel):
    command: str
    genus: int = Field(default=2, ge=0, le=2)
    degree: Literal[1, 2] = 2
    d_F: Optional[int] = None
    all_fields: bool = False
    output_format: OutputFormatEnum = OutputFormatEnum.TEXT
    refine: bool = False
