import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.config import EMPIRICAL_DEFAULTS
from src.errors import SchemaError

DEFAULT_COVARIATES = (
    'income', 'grants', 'unemployment', 'age_0_16', 'age_61_75', 'age_75_plus',
)
TAX_VARIABLES = ('tax_general', 'tax_residential')


class ModelForm(Enum):
    """Cross-section the test is applied to"""
    DIFFERENCED = "differenced"
    LEVEL = "level"


@dataclass(frozen=True)
class PanelSchema:
    """Maps canonical panel fields to the column names of an input file"""
    id: str = 'municipality'
    year: str = 'year'
    tax_general: str = 'tax_general'
    tax_residential: str = 'tax_residential'
    covariates: Tuple[str, ...] = DEFAULT_COVARIATES
    P: str = 'P'
    M: str = 'M'

    def __post_init__(self):
        object.__setattr__(self, 'covariates', tuple(self.covariates))
        if not self.covariates:
            raise SchemaError("schema needs at least one covariate")

    @property
    def required_columns(self) -> List[str]:
        return [self.id, self.year, self.tax_general, self.tax_residential,
                *self.covariates, self.P, self.M]

    def canonical_names(self) -> Dict[str, str]:
        """File column -> canonical column"""
        mapping = {
            self.id: 'municipality',
            self.year: 'year',
            self.tax_general: 'tax_general',
            self.tax_residential: 'tax_residential',
            self.P: 'P',
            self.M: 'M',
        }
        mapping.update({name: name for name in self.covariates})
        return mapping

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['covariates'] = list(self.covariates)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PanelSchema":
        unknown = set(data) - {'id', 'year', 'tax_general', 'tax_residential',
                               'covariates', 'P', 'M'}
        if unknown:
            raise SchemaError(f"unknown schema field(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "PanelSchema":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass
class MunicipalPanel:
    """Validated municipality-year panel with canonical column names"""
    frame: pd.DataFrame
    covariates: Tuple[str, ...] = DEFAULT_COVARIATES

    @property
    def ids(self) -> np.ndarray:
        return np.sort(self.frame['municipality'].unique())

    @property
    def years(self) -> List[int]:
        return sorted(int(y) for y in self.frame['year'].unique())

    @property
    def n_units(self) -> int:
        return int(self.frame['municipality'].nunique())

    def year_frame(self, year: int) -> pd.DataFrame:
        """Rows of one year, indexed and sorted by municipality"""
        rows = self.frame[self.frame['year'] == year]
        return rows.set_index('municipality').sort_index()


@dataclass
class CrossSection:
    """One cross-section ready for estimation, rows in ascending id order"""
    ids: np.ndarray
    outcomes: Dict[str, np.ndarray]
    X: np.ndarray
    P: np.ndarray
    M: np.ndarray
    covariate_names: List[str]
    form: ModelForm

    @property
    def n(self) -> int:
        return len(self.ids)

    def regressors(self) -> np.ndarray:
        """(1, X, P, M)"""
        return np.column_stack([np.ones(self.n), self.X, self.P, self.M])


def stars(pvalue: float, levels: Tuple[float, ...] = EMPIRICAL_DEFAULTS['star_levels']) -> str:
    """'*', '**' or '***' for p-values below the 0.1, 0.05, 0.01 levels"""
    return "*" * sum(pvalue < level for level in levels)


@dataclass(frozen=True)
class ApplicationRow:
    form: str
    tax: str
    p: int
    lambda_hat: float
    lambda_t: float
    lambda_pvalue: float
    t_stat: float
    t_pvalue: float
    quad_form: float
    reject_chi2: bool
    reject_normal: bool

    @property
    def lambda_stars(self) -> str:
        return stars(self.lambda_pvalue)

    @property
    def t_stars(self) -> str:
        return stars(self.t_pvalue)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['lambda_stars'] = self.lambda_stars
        data['t_stars'] = self.t_stars
        return data


@dataclass
class ApplicationReport:
    """Estimates and linearity tests per (model form, tax, p)"""
    n: int
    rows: List[ApplicationRow] = field(default_factory=list)
    instrument_mode: Optional[str] = None

    @classmethod
    def combine(cls, reports: List["ApplicationReport"]) -> "ApplicationReport":
        if not reports:
            raise ValueError("nothing to combine")
        return cls(n=reports[0].n, rows=[r for report in reports for r in report.rows],
                   instrument_mode=reports[0].instrument_mode)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame.from_records([row.to_dict() for row in self.rows])

    def to_csv(self) -> str:
        return self.to_frame().to_csv(index=False, float_format='%.4f')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'instrument_mode': self.instrument_mode,
            'rows': [row.to_dict() for row in self.rows],
        }

    def to_markdown(self) -> str:
        """One table per model form: p rows, lambda-hat (t) and T per tax"""
        lines: List[str] = []
        for form in [f.value for f in ModelForm]:
            rows = [r for r in self.rows if r.form == form]
            if not rows:
                continue
            taxes = [t for t in TAX_VARIABLES if any(r.tax == t for r in rows)]
            lines.append(f"Linearity test on tax rate data ({form}, n={self.n})")
            lines.append("")
            header = ["p"]
            for tax in taxes:
                header += [f"{tax} lambda (t)", f"{tax} T"]
            lines.append("| " + " | ".join(header) + " |")
            lines.append("|" + "|".join(["---"] + ["---:"] * (len(header) - 1)) + "|")
            for p in sorted({r.p for r in rows}):
                cells = [str(p)]
                for tax in taxes:
                    match = [r for r in rows if r.tax == tax and r.p == p]
                    if not match:
                        cells += ["", ""]
                        continue
                    r = match[0]
                    cells.append(f"{r.lambda_hat:.4f}{r.lambda_stars} ({r.lambda_t:.4f})")
                    cells.append(f"{r.t_stat:.4f}{r.t_stars}")
                lines.append("| " + " | ".join(cells) + " |")
            lines.append("")
        lines.append("* p-value<0.1; ** p-value<0.05; *** p-value<0.01")
        return "\n".join(lines) + "\n"
