"""
Panel ingestion and the two cross-sections the application uses

Rows of every cross-section are in ascending municipality id order; a weight
matrix for the application must follow the same order.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import pandas as pd

from src.config import EMPIRICAL_DEFAULTS
from src.errors import SchemaError
from src.models.panel import (
    TAX_VARIABLES, CrossSection, ModelForm, MunicipalPanel, PanelSchema,
)

logger = logging.getLogger(__name__)


def validate_frame(frame: pd.DataFrame, schema: PanelSchema, source: str = "panel") -> pd.DataFrame:
    """Check columns, missing values and (id, year) uniqueness; rename to canonical names"""
    missing = [c for c in schema.required_columns if c not in frame.columns]
    if missing:
        raise SchemaError(f"{source}: missing column(s) {', '.join(missing)}")

    frame = frame[schema.required_columns].rename(columns=schema.canonical_names())
    na_columns = [c for c in frame.columns if frame[c].isna().any()]
    if na_columns:
        raise SchemaError(f"{source}: missing values in {', '.join(na_columns)}")

    numeric = [c for c in frame.columns if c != 'municipality']
    for column in numeric:
        if not pd.api.types.is_numeric_dtype(frame[column]):
            raise SchemaError(f"{source}: column {column} is not numeric")
    frame = frame.astype({'year': int})

    duplicated = frame.duplicated(subset=['municipality', 'year'], keep=False)
    if duplicated.any():
        pairs = frame.loc[duplicated, ['municipality', 'year']].drop_duplicates()
        listed = ", ".join(f"({m}, {y})" for m, y in pairs.itertuples(index=False))
        raise SchemaError(f"{source}: duplicated municipality-year rows {listed}")
    return frame.reset_index(drop=True)


def load_panel(path: Union[str, Path], schema: Optional[PanelSchema] = None) -> MunicipalPanel:
    """Read a CSV panel and validate it against the schema"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path} does not exist")
    schema = schema or PanelSchema()
    frame = validate_frame(pd.read_csv(path), schema, str(path))
    panel = MunicipalPanel(frame=frame, covariates=schema.covariates)
    logger.info("loaded panel %s: %d municipalities, years %s",
                path.name, panel.n_units, panel.years)
    return panel


def _require_year(panel: MunicipalPanel, year: int) -> pd.DataFrame:
    rows = panel.year_frame(year)
    if rows.empty:
        raise SchemaError(f"year {year} is not in the panel (years: {panel.years})")
    return rows


def difference_transform(panel: MunicipalPanel, year1: int = EMPIRICAL_DEFAULTS['year1'],
                         year2: int = EMPIRICAL_DEFAULTS['year2']) -> CrossSection:
    """
    year2 minus year1 for the taxes and covariates

    P and M enter in levels and are taken from year2.
    """
    first = _require_year(panel, year1)
    second = _require_year(panel, year2)
    only_first = first.index.difference(second.index)
    only_second = second.index.difference(first.index)
    if len(only_first) or len(only_second):
        unmatched = [*(f"{i} (no {year2})" for i in only_first),
                     *(f"{i} (no {year1})" for i in only_second)]
        raise SchemaError(f"unmatched municipalities: {', '.join(map(str, unmatched))}")

    covariates = list(panel.covariates)
    delta = second[[*TAX_VARIABLES, *covariates]] - first[[*TAX_VARIABLES, *covariates]]
    return CrossSection(
        ids=second.index.to_numpy(),
        outcomes={tax: delta[tax].to_numpy(dtype=float) for tax in TAX_VARIABLES},
        X=delta[covariates].to_numpy(dtype=float),
        P=second['P'].to_numpy(dtype=float),
        M=second['M'].to_numpy(dtype=float),
        covariate_names=covariates,
        form=ModelForm.DIFFERENCED,
    )


def level_cross_section(panel: MunicipalPanel,
                        year: int = EMPIRICAL_DEFAULTS['year2']) -> CrossSection:
    """One year in levels, without fixed effects"""
    rows = _require_year(panel, year)
    covariates = list(panel.covariates)
    return CrossSection(
        ids=rows.index.to_numpy(),
        outcomes={tax: rows[tax].to_numpy(dtype=float) for tax in TAX_VARIABLES},
        X=rows[covariates].to_numpy(dtype=float),
        P=rows['P'].to_numpy(dtype=float),
        M=rows['M'].to_numpy(dtype=float),
        covariate_names=covariates,
        form=ModelForm.LEVEL,
    )


def cross_section(panel: MunicipalPanel, form: ModelForm,
                  year1: int = EMPIRICAL_DEFAULTS['year1'],
                  year2: int = EMPIRICAL_DEFAULTS['year2']) -> CrossSection:
    if form is ModelForm.DIFFERENCED:
        return difference_transform(panel, year1, year2)
    return level_cross_section(panel, year2)

