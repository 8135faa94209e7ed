#!/usr/bin/env python3
"""
Tests for the Monte Carlo harness, config loading and table output
"""

import json
from pathlib import Path

import numpy as np
import pytest

from src.errors import ConfigError, FailureBudgetExceeded, IsolatedUnitError
from src.models.simulation import (
    ErrorFamily, HeteroScheme, Link, McCell, McCellResult, McConfig, McReport,
)
from src.models.weight_matrix import DesignTag
from src.simulation.config_loader import load_mc_config, parse_mc_config
from src.simulation.mc import (
    CellRunner, aggregate, cell_weights, fixed_sigma, run_cell, run_power_experiment,
    run_size_experiment,
)
from src.simulation.rng import StreamTag, stable_key, substream
from src.simulation.tables import LEADING_COLUMNS, emit_table, table_frame
from src.spatial.weights import exponential_from_locations, gen_lattice

CONFIG_DIR = Path(__file__).parent / "configs"


def _small_config(workers=1, reps=6, seed=123):
    cells = [
        McCell(DesignTag.CIRCULANT, HeteroScheme.B_CHISQ2, ErrorFamily.GAUSSIAN, n=60, p=2),
        McCell(DesignTag.RANDOM_CONTIGUITY, HeteroScheme.C_CONDITIONAL,
               ErrorFamily.STUDENT_T5, n=60, p=2),
    ]
    return McConfig(grid=cells, reps=reps, master_seed=seed, parallel_workers=workers)


class RecordingLogger:
    def __init__(self):
        self.records = []

    def log_cell(self, record):
        self.records.append(record)


def test_substreams():
    a = substream(1, StreamTag.REPLICATION, 5, 0).standard_normal(4)
    b = substream(1, StreamTag.REPLICATION, 5, 0).standard_normal(4)
    c = substream(1, StreamTag.REPLICATION, 5, 1).standard_normal(4)
    d = substream(1, StreamTag.WEIGHTS, 5, 0).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    with pytest.raises(ValueError):
        substream(-1, StreamTag.WEIGHTS)
    assert stable_key({'a': 1, 'b': 2}) == stable_key({'b': 2, 'a': 1})


def test_report_independent_of_worker_count():
    serial = run_size_experiment(_small_config(workers=1))
    threaded = run_size_experiment(_small_config(workers=3))
    assert serial.to_dict() == threaded.to_dict()
    assert len(serial.cells) == 2
    assert serial.cells[0].reps == 6


def test_single_replication_cell():
    config = _small_config(reps=1)
    result = run_cell(config.grid[0], config)
    assert result.reps == 1
    assert result.t_var == 0.0
    assert result.mc_se == 0.0
    assert result.reject_rate_chi2 in (0.0, 1.0)


def test_aggregate_rates_and_budget():
    cell = McCell(DesignTag.CIRCULANT, HeteroScheme.A_DEGREE, ErrorFamily.GAUSSIAN, n=100)
    outcomes = [(3.0, True, True), (1.0, False, True), (-1.0, False, False),
                (0.0, False, False)] + [None]
    result = aggregate(cell, 4, outcomes, failure_budget=0.2)
    assert result.failures == 1
    assert result.effective_reps == 4
    assert result.reject_rate_chi2 == pytest.approx(0.25)
    assert result.reject_rate_normal == pytest.approx(0.5)
    assert result.mc_se == pytest.approx(np.sqrt(0.25 * 0.75 / 4))
    # the failed replication is not counted in the standard error
    assert result.mc_se != pytest.approx(np.sqrt(0.25 * 0.75 / 5))
    assert result.t_mean == pytest.approx(0.75)
    assert result.t_var == pytest.approx(np.var([3.0, 1.0, -1.0, 0.0], ddof=1))
    with pytest.raises(FailureBudgetExceeded):
        aggregate(cell, 4, outcomes + [None], failure_budget=0.2)


def test_link_must_match_experiment():
    lattice_cell = McCell(DesignTag.LATTICE, HeteroScheme.C_CONDITIONAL, ErrorFamily.GAUSSIAN,
                          link=Link.ARCTAN, lattice=(5, 6), p=2)
    with pytest.raises(ConfigError) as excinfo:
        run_size_experiment(McConfig(grid=[lattice_cell], reps=1))
    assert excinfo.value.key == "link"
    with pytest.raises(ConfigError):
        run_power_experiment(_small_config(reps=1))


def test_power_cell_runs_on_lattice():
    cell = McCell(DesignTag.LATTICE, HeteroScheme.C_CONDITIONAL, ErrorFamily.GAUSSIAN,
                  link=Link.LOG_QUADRATIC, lattice=(8, 9), p=2)
    logger = RecordingLogger()
    seen = []
    report = run_power_experiment(McConfig(grid=[cell], reps=3, master_seed=5),
                                  run_logger=logger,
                                  on_cell=lambda i, total, result: seen.append((i, total)))
    assert report.kind == "power"
    assert report.cells[0].n == 72
    assert report.cells[0].lattice == (8, 9)
    assert seen == [(1, 1)]
    assert logger.records[0]['link'] == "log_quadratic"


def test_stochastic_weights_shared_across_schemes():
    cells = [McCell(DesignTag.RANDOM_CONTIGUITY, scheme, family, n=80)
             for scheme in HeteroScheme for family in ErrorFamily]
    first = cell_weights(cells[0], 42)
    for cell in cells[1:]:
        assert (cell_weights(cell, 42).values != first.values).nnz == 0
    assert (cell_weights(cells[0], 43).values != first.values).nnz > 0


def test_scheme_b_scales_shared_across_designs():
    circulant = McCell(DesignTag.CIRCULANT, HeteroScheme.B_CHISQ2, ErrorFamily.GAUSSIAN, n=80)
    cutoff = McCell(DesignTag.CUTOFF, HeteroScheme.B_CHISQ2, ErrorFamily.STUDENT_T5, n=80)
    sigma1 = fixed_sigma(circulant, cell_weights(circulant, 7), 7)
    sigma2 = fixed_sigma(cutoff, cell_weights(cutoff, 7), 7)
    assert np.array_equal(sigma1, sigma2)
    conditional = McCell(DesignTag.CIRCULANT, HeteroScheme.C_CONDITIONAL, ErrorFamily.GAUSSIAN,
                         n=80)
    assert fixed_sigma(conditional, cell_weights(conditional, 7), 7) is None


def test_lattice_runner_keeps_isolated_corner():
    cell = McCell(DesignTag.LATTICE, HeteroScheme.A_DEGREE, ErrorFamily.GAUSSIAN,
                  lattice=(6, 7), p=2)
    runner = CellRunner(cell, McConfig(grid=[cell], reps=2))
    assert runner.sigma[0] == 0.0
    assert runner.spec.p == 2
    assert runner.replicate(0) is not None


def test_degree_scales_on_lattice_and_isolated_units():
    lattice = McCell(DesignTag.LATTICE, HeteroScheme.A_DEGREE, ErrorFamily.GAUSSIAN,
                     lattice=(4, 5))
    sigma = fixed_sigma(lattice, gen_lattice(4, 5), 1)
    assert sigma[0] == 0.0
    assert np.all(sigma[1:] > 0.0)
    assert sigma.mean() == pytest.approx(1.0)

    # outside the lattice a unit without neighbours is an error
    locations = [0.5 * i for i in range(9)] + [100.0]
    W = exponential_from_locations(locations)
    assert W.values[9].nnz == 0
    cell = McCell(DesignTag.EXPONENTIAL, HeteroScheme.A_DEGREE, ErrorFamily.GAUSSIAN, n=10)
    with pytest.raises(IsolatedUnitError):
        fixed_sigma(cell, W, 1)


def test_full_size_grid_loads():
    config = load_mc_config(CONFIG_DIR / "table1_size_gaussian.json", expected_kind="size")
    assert len(config.grid) == 90
    lattice_sizes = {c.n for c in config.grid if c.design is DesignTag.LATTICE}
    assert lattice_sizes == {100, 210, 400, 702, 992, 1980}
    assert {c.p for c in config.grid} == {4, 5, 7, 8, 10, 12}
    power = load_mc_config(CONFIG_DIR / "table3_power_gaussian.json", expected_kind="power")
    assert all(c.design is DesignTag.LATTICE and c.link.is_nonlinear for c in power.grid)


@pytest.mark.parametrize("data,key", [
    ({'grid': [{'design': 'circulant', 'n': 50}], 'colour': 1}, 'colour'),
    ({'grid': [{'design': 'hexagonal', 'n': 50}]}, 'design'),
    ({'grid': [{'design': 'circulant', 'n': 50, 'link': 'arctan'}]}, 'link'),
    ({'grid': [{'design': 'circulant', 'n': 50, 'sizes': [{'n': 50}]}]}, 'sizes'),
    ({'grid': [{'design': 'lattice', 'n': 50}]}, 'lattice'),
    ({'grid': [{'design': 'circulant', 'n': 50}], 'alpha': 2}, 'alpha'),
    ({'grid': [{'design': 'circulant', 'n': 50}], 'reps': 0}, 'reps'),
    ({'grid': []}, 'grid'),
    ({'kind': 'power', 'grid': [{'design': 'circulant', 'n': 50}]}, 'kind'),
])
def test_config_errors_name_the_key(data, key):
    with pytest.raises(ConfigError) as excinfo:
        parse_mc_config(data, expected_kind="size")
    assert excinfo.value.key == key


def test_grid_expansion():
    config = parse_mc_config({
        'reps': 10,
        'grid': [{'design': ['circulant', 'lattice'], 'scheme': ['a_degree', 'b_chisq2'],
                  'sizes': [{'n': 100, 'lattice': [10, 10], 'p': 4},
                            {'n': 200, 'lattice': [14, 15], 'p': 5}]}],
    })
    assert len(config.grid) == 8
    circulant = [c for c in config.grid if c.design is DesignTag.CIRCULANT]
    assert {c.n for c in circulant} == {100, 200}
    assert all(c.lattice is None for c in circulant)
    assert config.reps == 10


def _result(design, n, p, rate, scheme="a_degree", lattice=None):
    return McCellResult(design=design, n=n, p=p, scheme=scheme, family="gaussian",
                        link="null_linear", reps=100, failures=0, reject_rate_chi2=rate,
                        reject_rate_normal=rate + 0.01, mc_se=0.02, mc_se_normal=0.02,
                        t_mean=0.0, t_var=1.0, lattice=lattice)


def test_single_cell_table():
    report = McReport(kind="size", reps=100, alpha=0.05, master_seed=1,
                      cells=[_result("circulant", 100, 4, 0.05)])
    frame = table_frame(report)
    assert list(frame.columns) == list(LEADING_COLUMNS) + ["circulant chi2", "circulant normal"]
    assert frame.iloc[0]['scheme'] == "a)"
    csv_text = emit_table(report, 'csv')
    assert csv_text.splitlines()[1] == "gaussian,a),100,4,0.0500,0.0600"


def test_full_size_table_shape():
    lattices = [(10, 10), (14, 15), (20, 20), (26, 27), (31, 32), (44, 45)]
    sizes = [100, 200, 400, 700, 1000, 2000]
    ps = [4, 5, 7, 8, 10, 12]
    cells = []
    for design in ("exponential", "cutoff", "circulant", "random_contiguity"):
        cells += [_result(design, n, p, 0.05) for n, p in zip(sizes, ps)]
    cells += [_result("lattice", m1 * m2, p, 0.05, lattice=(m1, m2))
              for (m1, m2), p in zip(lattices, ps)]
    report = McReport(kind="size", reps=100, alpha=0.05, master_seed=1, cells=cells)
    frame = table_frame(report)
    assert frame.shape == (6, 4 + 10)
    assert frame['n'].tolist() == ["100", "200/210", "400", "700/702", "992/1000", "1980/2000"]
    assert list(frame.columns[4:9]) == [
        "exponential chi2", "cutoff chi2", "circulant chi2", "random_contiguity chi2",
        "lattice chi2",
    ]
    markdown = emit_table(report, 'markdown')
    assert markdown.startswith("Size experiment")
    assert "| family | scheme | n | p |" in markdown
    assert markdown.rstrip().endswith("(0 failed in total).")


def test_json_table_round_trip():
    report = McReport(kind="size", reps=100, alpha=0.05, master_seed=1,
                      cells=[_result("lattice", 100, 4, 0.04, lattice=(10, 10))])
    back = McReport.from_dict(json.loads(emit_table(report, 'json')))
    assert back.to_dict() == report.to_dict()
    assert back.cells[0].lattice == (10, 10)


def test_table_errors():
    empty = McReport(kind="size", reps=1, alpha=0.05, master_seed=1)
    with pytest.raises(ValueError):
        emit_table(empty)
    with pytest.raises(ValueError):
        emit_table(McReport(kind="size", reps=1, alpha=0.05, master_seed=1,
                            cells=[_result("circulant", 100, 4, 0.05)]), 'xlsx')
