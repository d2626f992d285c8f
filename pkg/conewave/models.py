"""
Experiment configuration and result models.

A config document is validated into ExperimentConfig:
- cross_section: which cone (sphere / circle / circle with sampled potential)
- data: which initial data (a single-mode spectral bump or the counterexample chi)
- grid: radial resolution
- norms: exponents, weights and radii swept by the scenario
- tolerances: PASS thresholds, recorded in every summary
- sweep: the dyadic parameter (R, M, epsilon or T), as a list or {dyadic: [lo, hi]}
"""

from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

Scenario = Literal["prop31", "strichartz_scaling", "counterexample", "kss", "local_energy", "selftest"]
Status = Literal["PASS", "FAIL", "UNCONVERGED", "INFO"]


def _dyadic_range(lo: int, hi: int) -> List[float]:
    return [2.0 ** k for k in range(int(lo), int(hi) + 1)]


class CrossSectionSpec(BaseModel):
    kind: Literal["sphere", "circle", "circle_with_potential"] = "sphere"
    n: int
    v0: float = 0.0
    rho0: float = 1.0
    v0_samples: Optional[List[float]] = None
    v0_samples_file: Optional[str] = None
    k_max: int = 2
    differentiation: Literal["spectral", "fd2"] = "spectral"

    @field_validator("n")
    @classmethod
    def check_n(cls, v: int) -> int:
        if v < 2:
            raise ValueError("cone dimension n must be >= 2")
        return v

    @field_validator("rho0")
    @classmethod
    def check_rho0(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("circle radius rho0 must be positive")
        return v

    @field_validator("k_max")
    @classmethod
    def check_k_max(cls, v: int) -> int:
        if v < 0:
            raise ValueError("k_max must be >= 0")
        return v

    @model_validator(mode="after")
    def check_potential(self) -> "CrossSectionSpec":
        if self.kind == "circle_with_potential":
            if (self.v0_samples is None) == (self.v0_samples_file is None):
                raise ValueError("circle_with_potential needs exactly one of v0_samples / v0_samples_file")
        return self


class DataSpec(BaseModel):
    kind: Literal["mode_bump", "counterexample_chi"] = "mode_bump"
    nu_index: int = 0
    ell: int = 1
    rho_center: float = 1.5
    rho_width: float = 1.0
    shape: Literal["chi", "gaussian"] = "chi"
    nu0: Optional[float] = None

    @field_validator("nu_index")
    @classmethod
    def check_index(cls, v: int) -> int:
        if v < 0:
            raise ValueError("nu_index must be >= 0")
        return v

    @field_validator("ell")
    @classmethod
    def check_ell(cls, v: int) -> int:
        if v < 1:
            raise ValueError("ell counts from 1")
        return v

    @field_validator("rho_width")
    @classmethod
    def check_width(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("rho_width must be positive")
        return v


class GridSpec(BaseModel):
    points_per_decade: float = 64
    oversample: float = 1.0
    r_min: float = 1e-3

    @field_validator("points_per_decade")
    @classmethod
    def check_ppd(cls, v: float) -> float:
        if v < 16:
            raise ValueError("points_per_decade must be >= 16")
        return v

    @field_validator("oversample")
    @classmethod
    def check_oversample(cls, v: float) -> float:
        if v < 1:
            raise ValueError("oversample must be >= 1")
        return v

    @field_validator("r_min")
    @classmethod
    def check_r_min(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("r_min must be positive")
        return v


class NormSettings(BaseModel):
    q: Optional[float] = None
    extra_q: List[float] = Field(default_factory=list)
    betas: List[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    weight: Literal["japanese_bracket", "pure_power"] = "japanese_bracket"
    smoothing_betas: List[float] = Field(default_factory=lambda: [0.25])
    radii: List[float] = Field(default_factory=lambda: _dyadic_range(-4, 6))
    data_scales: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    data_modes: List[int] = Field(default_factory=lambda: [0, 1])
    fit_min: float = 16.0

    @field_validator("q")
    @classmethod
    def check_q(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not v >= 2:
            raise ValueError("q must lie in [2, inf]")
        return v

    @field_validator("extra_q")
    @classmethod
    def check_extra_q(cls, v: List[float]) -> List[float]:
        if any(not q > 2 for q in v):
            raise ValueError("extra_q entries must exceed 2")
        return sorted(v)

    @field_validator("betas", "smoothing_betas")
    @classmethod
    def check_betas(cls, v: List[float]) -> List[float]:
        if any(b < 0 for b in v):
            raise ValueError("weight exponents beta must be >= 0")
        return sorted(v)

    @field_validator("radii", "data_scales")
    @classmethod
    def check_positive(cls, v: List[float]) -> List[float]:
        if not v or any(not x > 0 for x in v):
            raise ValueError("must be a non-empty list of positive numbers")
        return sorted(v)


class Tolerances(BaseModel):
    slope: float = 0.1
    saturation: float = 0.15
    ratio_factor: float = 4.0
    kss_ratio: float = 3.0
    log_fit: float = 0.15
    convergence: float = 0.02
    bounded_slope: float = 0.05

    @model_validator(mode="after")
    def check_positive(self) -> "Tolerances":
        for name, value in self.model_dump().items():
            if not value > 0:
                raise ValueError(f"tolerance {name} must be positive")
        return self


class ExperimentConfig(BaseModel):
    scenario: Scenario
    cross_section: Optional[CrossSectionSpec] = None
    data: DataSpec = Field(default_factory=DataSpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    norms: NormSettings = Field(default_factory=NormSettings)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    sweep: List[float] = Field(default_factory=list)
    output: Optional[str] = None
    jobs: Optional[int] = None
    convergence_check: bool = False

    @field_validator("sweep", mode="before")
    @classmethod
    def expand_sweep(cls, v):
        if isinstance(v, dict):
            if set(v) != {"dyadic"} or len(v["dyadic"]) != 2:
                raise ValueError("sweep shorthand is {dyadic: [lo, hi]}")
            lo, hi = v["dyadic"]
            return _dyadic_range(lo, hi)
        return v

    @field_validator("sweep")
    @classmethod
    def check_sweep(cls, v: List[float]) -> List[float]:
        if any(not x > 0 for x in v):
            raise ValueError("sweep values must be positive")
        if v != sorted(v):
            raise ValueError("sweep must be sorted ascending")
        if len(set(v)) != len(v):
            raise ValueError("sweep values must be distinct")
        return v

    @field_validator("jobs")
    @classmethod
    def check_jobs(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError("jobs must be >= 1")
        return v

    @model_validator(mode="after")
    def check_scenario(self) -> "ExperimentConfig":
        if self.scenario != "selftest":
            if self.cross_section is None:
                raise ValueError(f"scenario {self.scenario} needs a cross_section")
            if not self.sweep and self.scenario != "local_energy":
                raise ValueError(f"scenario {self.scenario} needs a non-empty sweep")
        return self


class Verdict(BaseModel):
    """One checked estimate: what was predicted, what was measured, and the outcome."""

    tag: str
    predicted: Optional[float] = None
    fitted: Optional[float] = None
    status: Status
    detail: str = ""
    tail: Optional[float] = None


class FitSummary(BaseModel):
    slope: float
    intercept: float
    max_residual: float
    points_used: int

    @field_validator("max_residual")
    @classmethod
    def check_residual(cls, v: float) -> float:
        if v < 0:
            raise ValueError("fit residual must be >= 0")
        return v


class ResultTable(BaseModel):
    name: str
    sweep_key: str
    columns: List[str]
    rows: List[List[Any]] = Field(default_factory=list)
    fitted: Dict[str, FitSummary] = Field(default_factory=dict)
    verdicts: List[Verdict] = Field(default_factory=list)
    # relative L2 mass of the initial data lost to the mode cut and the radial grid
    truncation_tail: Optional[float] = None

    @model_validator(mode="after")
    def check_rows(self) -> "ResultTable":
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row {row!r} does not match columns {self.columns!r}")
        return self

    def sorted_rows(self) -> List[List[object]]:
        key = self.columns.index(self.sweep_key) if self.sweep_key in self.columns else 0
        return sorted(self.rows, key=lambda row: tuple(_sort_value(v) for v in [row[key]] + list(row)))

    @property
    def statuses(self) -> List[str]:
        return [v.status for v in self.verdicts]


def _sort_value(value):
    if isinstance(value, (int, float)):
        return (0, float(value), "")
    return (1, 0.0, str(value))
