"""
Synthetic municipal tax panel

Same shape as the real two-year panel: 411 municipalities with random
locations, a Delaunay contiguity matrix, six covariates, the policy dummy P
and imposed increase M. Both tax rates follow the linear SAR null in each
year, with municipality fixed effects and a year effect, so the differenced
and level cross-sections are both null data.
"""

import json
import logging
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.spatial import Delaunay

from src.config import EMPIRICAL_DEFAULTS
from src.models.panel import DEFAULT_COVARIATES, MunicipalPanel, PanelSchema
from src.models.weight_matrix import DesignTag, Normalization, WeightMatrix
from src.simulation.dgp import NullSolver
from src.simulation.rng import StreamTag, substream
from src.spatial.weights import row_normalize
from src.spatial.weights_io import write_triplets

logger = logging.getLogger(__name__)

FIXTURE_UNITS = 411
FIRST_ID = 1001

# mean, sd of the first-year covariate levels and sd of the yearly change
COVARIATE_MODEL = {
    'income': (20.0, 3.0, 0.6),
    'grants': (2.0, 0.5, 0.15),
    'unemployment': (12.0, 3.0, 0.8),
    'age_0_16': (20.0, 2.5, 0.3),
    'age_61_75': (14.0, 2.0, 0.3),
    'age_75_plus': (8.0, 1.5, 0.2),
}

# lambda, intercept, covariate slopes, P and M effects
TAX_MODEL = {
    'tax_general': (0.3, 12.0, (0.05, -0.3, 0.04, 0.05, 0.03, 0.04), 0.4, 0.5),
    'tax_residential': (0.2, 0.6, (0.01, -0.05, 0.01, 0.01, 0.01, 0.01), 0.05, 0.3),
}
MINIMUM_RATE = 17.0


def delaunay_contiguity(points: np.ndarray) -> WeightMatrix:
    """Row-normalized binary contiguity from a Delaunay triangulation"""
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    triangulation = Delaunay(points)
    indptr, indices = triangulation.vertex_neighbor_vertices
    rows = np.repeat(np.arange(n), np.diff(indptr))
    values = sparse.csr_matrix((np.ones(indices.size), (rows, indices)), shape=(n, n))
    return row_normalize(WeightMatrix(values, Normalization.NONE, DesignTag.CUSTOM))


def synthetic_panel(n: int = FIXTURE_UNITS, seed: int = 0,
                    year1: int = EMPIRICAL_DEFAULTS['year1'],
                    year2: int = EMPIRICAL_DEFAULTS['year2']) -> Tuple[MunicipalPanel, WeightMatrix]:
    """Two-year panel generated under the linear null, with its contiguity matrix"""
    if n < 20:
        raise ValueError(f"the fixture needs at least 20 municipalities, got {n}")
    rng = substream(seed, StreamTag.PANEL, n)
    W = delaunay_contiguity(rng.uniform(0.0, 1.0, size=(n, 2)))

    first = np.column_stack([rng.normal(mean, sd, n) for mean, sd, _ in COVARIATE_MODEL.values()])
    change = np.column_stack([rng.normal(0.0, sd, n) for _, _, sd in COVARIATE_MODEL.values()])
    second = first + change

    # the policy raised rates that were below the minimum in the base year
    base_rate = rng.normal(17.8, 0.8, n)
    P = (base_rate < MINIMUM_RATE).astype(float)
    M = np.where(P > 0, MINIMUM_RATE - base_rate, 0.0)

    ids = np.arange(FIRST_ID, FIRST_ID + n)
    frames = {year1: {}, year2: {}}
    for tax, (lam, intercept, slopes, effect_p, effect_m) in TAX_MODEL.items():
        solver = NullSolver(W, lam)
        fixed_effect = rng.normal(0.0, 0.5, n)
        year_effect = rng.normal(0.0, 0.1)
        slopes = np.asarray(slopes)
        noise1 = rng.normal(0.0, 0.15, n)
        noise2 = rng.normal(0.0, 0.15, n)
        frames[year1][tax] = solver.solve(intercept + first @ slopes + fixed_effect + noise1)
        frames[year2][tax] = solver.solve(intercept + year_effect + second @ slopes
                                          + effect_p * P + effect_m * M
                                          + fixed_effect + noise2)

    records = []
    for year, covariates in ((year1, first), (year2, second)):
        frame = pd.DataFrame(covariates, columns=list(DEFAULT_COVARIATES))
        frame.insert(0, 'year', year)
        frame.insert(0, 'municipality', ids)
        for tax in TAX_MODEL:
            frame[tax] = frames[year][tax]
        frame['P'] = P
        frame['M'] = M
        records.append(frame)
    panel_frame = pd.concat(records, ignore_index=True)
    return MunicipalPanel(frame=panel_frame, covariates=DEFAULT_COVARIATES), W


def write_fixture(directory: Union[str, Path], n: int = FIXTURE_UNITS,
                  seed: int = 0) -> Path:
    """panel.csv, W.txt and schema.json for the synthetic panel"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    panel, W = synthetic_panel(n, seed)
    panel.frame.to_csv(directory / 'panel.csv', index=False, float_format='%.10g')
    write_triplets(W, directory / 'W.txt')
    with open(directory / 'schema.json', 'w') as f:
        json.dump(PanelSchema().to_dict(), f, indent=2)
    logger.info("wrote synthetic panel (n=%d, seed=%d) to %s", n, seed, directory)
    return directory
