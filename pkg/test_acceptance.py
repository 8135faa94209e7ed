#!/usr/bin/env python3
"""
Monte Carlo acceptance checks at 1000 replications

Slow: run with `pytest -m slow`.
"""

from pathlib import Path

import pytest

from src.models.simulation import ErrorFamily, HeteroScheme, Link, McCell
from src.models.weight_matrix import DesignTag
from src.simulation.config_loader import load_mc_config
from src.simulation.mc import run_power_experiment, run_size_experiment

pytestmark = pytest.mark.slow

CONFIG_DIR = Path(__file__).parent / "configs"


@pytest.fixture(scope="module")
def size_report():
    return run_size_experiment(load_mc_config(CONFIG_DIR / "acceptance_size.json", "size"))


@pytest.fixture(scope="module")
def power_report():
    return run_power_experiment(load_mc_config(CONFIG_DIR / "acceptance_power.json", "power"))


def _cell(report, **match):
    found = [c for c in report.cells if all(getattr(c, k) == v for k, v in match.items())]
    assert len(found) == 1, match
    return found[0]


def test_lattice_size_gaussian(size_report):
    cell = _cell(size_report, design="lattice", family="gaussian")
    assert abs(cell.reject_rate_chi2 - 0.051) <= 0.021


def test_lattice_size_student_t(size_report):
    cell = _cell(size_report, design="lattice", family="student_t5")
    assert abs(cell.reject_rate_chi2 - 0.050) <= 0.021


def test_small_circulant_normal_rule_over_rejects(size_report):
    cell = _cell(size_report, design="circulant")
    assert 0.07 <= cell.reject_rate_normal <= 0.135
    assert cell.reject_rate_normal > cell.reject_rate_chi2


def test_power_on_large_lattice(power_report):
    log_a = _cell(power_report, link="log_quadratic", scheme="a_degree")
    arctan_a = _cell(power_report, link="arctan", scheme="a_degree")
    assert log_a.reject_rate_chi2 >= 0.80
    assert arctan_a.reject_rate_chi2 >= 0.78


def test_power_ordering_across_schemes(power_report):
    a = _cell(power_report, link="log_quadratic", scheme="a_degree").reject_rate_chi2
    b = _cell(power_report, link="log_quadratic", scheme="b_chisq2").reject_rate_chi2
    c = _cell(power_report, link="log_quadratic", scheme="c_conditional").reject_rate_chi2
    assert c >= a - 0.05
    assert a >= b - 0.05


def test_null_moments_of_statistic():
    report = run_size_experiment(load_mc_config(CONFIG_DIR / "null_distribution.json", "size"))
    cell = report.cells[0]
    assert -0.15 <= cell.t_mean <= 0.15
    assert 0.8 <= cell.t_var <= 1.2


def test_log_power_grows_with_n():
    config = load_mc_config(CONFIG_DIR / "table3_power_gaussian.json", "power")
    config.grid = [c for c in config.grid
                   if c.link is Link.LOG_QUADRATIC and c.scheme is HeteroScheme.A_DEGREE]
    config.reps = 300
    rates = [cell.reject_rate_chi2 for cell in run_power_experiment(config).cells]
    assert len(rates) == 6
    inversions = sum(later < earlier for earlier, later in zip(rates, rates[1:]))
    assert inversions <= 1
    assert rates[-1] > rates[0]


def test_cells_are_well_formed(size_report):
    for cell in size_report.cells:
        assert cell.failures <= 10
        assert McCell(DesignTag(cell.design), HeteroScheme(cell.scheme),
                      ErrorFamily(cell.family), n=cell.n,
                      lattice=cell.lattice).n == cell.n
