#!/usr/bin/env python3
"""
Tests for panel ingestion, the cross-section transforms and the tax
application on the synthetic panel
"""

import json

import numpy as np
import pandas as pd
import pytest

from src.empirical.application import analyze_cross_section, run_application, run_both_forms
from src.empirical.fixture import FIRST_ID, delaunay_contiguity, synthetic_panel, write_fixture
from src.empirical.panel import (
    cross_section, difference_transform, level_cross_section, load_panel,
)
from src.errors import DimensionError, SchemaError
from src.models.panel import ModelForm, PanelSchema, stars
from src.spatial.weights import gen_circulant
from src.spatial.weights_io import read_weights


@pytest.fixture(scope="module")
def fixture_panel():
    return synthetic_panel(seed=0)


@pytest.fixture
def fixture_files(tmp_path):
    return write_fixture(tmp_path / "panel", seed=1)


def test_synthetic_panel_shape(fixture_panel):
    panel, W = fixture_panel
    assert panel.n_units == 411
    assert panel.years == [1999, 2000]
    assert panel.ids[0] == FIRST_ID
    assert W.n == 411
    sums = np.asarray(W.values.sum(axis=1)).ravel()
    assert sums == pytest.approx(np.ones(411))
    P = panel.year_frame(2000)['P'].to_numpy()
    M = panel.year_frame(2000)['M'].to_numpy()
    assert set(np.unique(P)) <= {0.0, 1.0}
    assert np.all(M[P == 0] == 0.0)
    assert np.all(M[P == 1] > 0.0)


def test_delaunay_square():
    W = delaunay_contiguity(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.1, 1.2]]))
    assert W.n == 4
    assert np.asarray(W.values.sum(axis=1)).ravel() == pytest.approx(np.ones(4))
    assert np.all(W.values.diagonal() == 0)


def test_fixture_files_load(fixture_files):
    schema = PanelSchema.from_json(fixture_files / "schema.json")
    panel = load_panel(fixture_files / "panel.csv", schema)
    W = read_weights(fixture_files / "W.txt")
    assert panel.n_units == W.n == 411
    assert panel.years == [1999, 2000]


def test_custom_column_names(fixture_files, tmp_path):
    frame = pd.read_csv(fixture_files / "panel.csv").rename(
        columns={'municipality': 'kunta', 'income': 'tulot'})
    path = tmp_path / "renamed.csv"
    frame.to_csv(path, index=False)
    covariates = ('tulot', 'grants', 'unemployment', 'age_0_16', 'age_61_75', 'age_75_plus')
    panel = load_panel(path, PanelSchema(id='kunta', covariates=covariates))
    assert 'municipality' in panel.frame.columns
    assert panel.covariates[0] == 'tulot'


def _write(frame, tmp_path, name="panel.csv"):
    path = tmp_path / name
    frame.to_csv(path, index=False)
    return path


def test_missing_column(fixture_files, tmp_path):
    frame = pd.read_csv(fixture_files / "panel.csv").drop(columns=['grants'])
    with pytest.raises(SchemaError, match="grants"):
        load_panel(_write(frame, tmp_path))


def test_missing_values(fixture_files, tmp_path):
    frame = pd.read_csv(fixture_files / "panel.csv")
    frame.loc[3, 'income'] = np.nan
    with pytest.raises(SchemaError, match="income"):
        load_panel(_write(frame, tmp_path))


def test_non_numeric_column(fixture_files, tmp_path):
    frame = pd.read_csv(fixture_files / "panel.csv")
    frame['P'] = frame['P'].map(lambda v: "yes" if v else "no")
    with pytest.raises(SchemaError, match="P"):
        load_panel(_write(frame, tmp_path))


def test_duplicate_rows_are_listed(fixture_files, tmp_path):
    frame = pd.read_csv(fixture_files / "panel.csv")
    frame = pd.concat([frame, frame.iloc[[0]]], ignore_index=True)
    with pytest.raises(SchemaError, match=r"\(1001, 1999\)"):
        load_panel(_write(frame, tmp_path))


def test_missing_file_and_schema_fields(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_panel(tmp_path / "nope.csv")
    with pytest.raises(SchemaError):
        PanelSchema.from_dict({'id': 'kunta', 'region': 'maakunta'})
    path = tmp_path / "schema.json"
    path.write_text(json.dumps(PanelSchema().to_dict()))
    assert PanelSchema.from_json(path) == PanelSchema()


def test_difference_transform(fixture_panel):
    panel, _ = fixture_panel
    data = difference_transform(panel, 1999, 2000)
    first, second = panel.year_frame(1999), panel.year_frame(2000)
    assert data.form is ModelForm.DIFFERENCED
    assert data.n == 411
    assert list(data.ids) == sorted(data.ids)
    unit = data.ids[10]
    assert data.X[10, 0] == pytest.approx(second.loc[unit, 'income'] - first.loc[unit, 'income'])
    assert data.outcomes['tax_general'][10] == pytest.approx(
        second.loc[unit, 'tax_general'] - first.loc[unit, 'tax_general'])
    assert data.P[10] == second.loc[unit, 'P']
    assert data.regressors().shape == (411, 1 + 6 + 2)


def test_level_cross_section(fixture_panel):
    panel, _ = fixture_panel
    data = level_cross_section(panel, 2000)
    assert data.form is ModelForm.LEVEL
    assert data.outcomes['tax_residential'] == pytest.approx(
        panel.year_frame(2000)['tax_residential'].to_numpy())
    assert cross_section(panel, ModelForm.LEVEL).form is ModelForm.LEVEL


def test_unmatched_municipalities(fixture_panel):
    panel, _ = fixture_panel
    frame = panel.frame
    dropped = frame[~((frame['municipality'] == 1005) & (frame['year'] == 2000))]
    partial = type(panel)(frame=dropped, covariates=panel.covariates)
    with pytest.raises(SchemaError, match="1005"):
        difference_transform(partial, 1999, 2000)
    with pytest.raises(SchemaError):
        level_cross_section(panel, 1990)


def test_differenced_application(fixture_panel):
    panel, W = fixture_panel
    report = run_application(panel, W, ModelForm.DIFFERENCED, p_list=[4])
    assert report.n == 411
    assert report.instrument_mode == "policy+spatial+basis"
    assert [row.tax for row in report.rows] == ['tax_general', 'tax_residential']
    for row in report.rows:
        assert row.form == "differenced"
        assert 0.0 <= row.lambda_pvalue <= 1.0
        assert np.isfinite(row.t_stat)
        assert row.t_stat == pytest.approx((row.quad_form - 4) / np.sqrt(8))
    text = report.to_markdown()
    assert "Linearity test on tax rate data (differenced, n=411)" in text
    assert "tax_general lambda (t)" in text


def test_both_forms_and_outputs(fixture_panel):
    panel, W = fixture_panel
    report = run_both_forms(panel, W, p_list=iter([4, 5]),
                            options={'basis_instruments': False})
    assert len(report.rows) == 2 * 2 * 2
    assert {row.form for row in report.rows} == {"differenced", "level"}
    assert report.instrument_mode == "policy+spatial"
    frame = report.to_frame()
    assert {'lambda_stars', 't_stars', 'quad_form'} <= set(frame.columns)
    assert report.to_csv().startswith("form,tax,p,")
    assert json.loads(json.dumps(report.to_dict()))['n'] == 411


def test_weight_size_must_match(fixture_panel):
    panel, _ = fixture_panel
    data = difference_transform(panel)
    with pytest.raises(DimensionError):
        analyze_cross_section(data, gen_circulant(100), [4])


@pytest.mark.parametrize("pvalue,expected", [
    (0.005, "***"), (0.03, "**"), (0.07, "*"), (0.2, ""),
])
def test_stars(pvalue, expected):
    assert stars(pvalue) == expected


@pytest.mark.slow
@pytest.mark.parametrize("form", list(ModelForm))
def test_null_fixture_rarely_rejects(form):
    t_stats = []
    for seed in range(20):
        panel, W = synthetic_panel(seed=seed)
        report = run_application(panel, W, form, p_list=[4])
        t_stats += [row.t_stat for row in report.rows]
    assert len(t_stats) == 40
    assert np.mean(np.array(t_stats) < 1.645) >= 0.9


def test_default_sieve_dimensions_both_forms(fixture_panel):
    panel, W = fixture_panel
    report = run_both_forms(panel, W)
    assert sorted({row.p for row in report.rows}) == [4, 5, 6]
    assert len(report.rows) == 2 * 2 * 3
    text = report.to_markdown()
    assert "(differenced, n=411)" in text
    assert "(level, n=411)" in text
    assert text.rstrip().endswith("*** p-value<0.01")
