"""
Monte Carlo size and power experiments

Per cell the weight matrix is drawn once (stochastic designs from a
design/size substream), scheme a) and b) scales are fixed, and every
replication draws X, the errors and y from its own substream. Replications run
on a thread pool; aggregation walks the results in replication order, so the
report is identical for any number of workers.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.config import MC_DEFAULTS
from src.errors import ConfigError, FailureBudgetExceeded, SarTestError, SingularSystemError
from src.estimation.critical_values import choose_p
from src.estimation.estimator import fit_2sls
from src.estimation.instruments import build_mc_instruments
from src.estimation.lmtest import linearity_test_from_fit
from src.models.estimation import BasisSpec
from src.models.simulation import (
    DgpConfig, HeteroScheme, McCell, McCellResult, McConfig, McReport,
)
from src.models.weight_matrix import DesignTag, WeightMatrix
from src.simulation.dgp import NullSolver, gen_sigma, simulate_dataset
from src.simulation.rng import StreamTag, stable_key, substream
from src.spatial.weights import generate_weights

logger = logging.getLogger(__name__)

# (t_stat, reject_chi2, reject_normal), or None for a failed replication
ReplicationOutcome = Optional[Tuple[float, bool, bool]]


def cell_weights(cell: McCell, master_seed: int) -> WeightMatrix:
    """The cell's W; stochastic designs redraw from the same stream when empty"""
    if not cell.design.is_stochastic:
        return generate_weights(cell.design, cell.n, cell.lattice)
    rng = substream(master_seed, StreamTag.WEIGHTS,
                    stable_key({'design': cell.design.value, 'n': cell.n}))
    for attempt in range(MC_DEFAULTS['max_weight_redraws']):
        W = generate_weights(cell.design, cell.n, rng=rng)
        if not W.is_empty:
            if attempt:
                logger.info("%s n=%d: empty draw replaced after %d attempt(s)",
                            cell.design.value, cell.n, attempt)
            return W
    raise SingularSystemError(
        f"{cell.design.value} n={cell.n}: all {MC_DEFAULTS['max_weight_redraws']} "
        "weight draws were empty"
    )


def fixed_sigma(cell: McCell, W: WeightMatrix, master_seed: int) -> Optional[np.ndarray]:
    """
    Scales held fixed across replications

    Scheme b) draws depend only on n, so every design of the same size shares
    them. Lattice cells keep the corner unit (no neighbours) at sigma = 0.
    """
    if cell.scheme is HeteroScheme.A_DEGREE:
        return gen_sigma(cell.scheme, W, allow_isolated=cell.design is DesignTag.LATTICE)
    if cell.scheme is HeteroScheme.B_CHISQ2:
        rng = substream(master_seed, StreamTag.SIGMA_B, cell.n)
        return gen_sigma(cell.scheme, rng=rng, n=cell.n)
    return None


class CellRunner:
    """Everything a replication of one cell needs, built once"""

    def __init__(self, cell: McCell, config: McConfig):
        self.cell = cell
        self.config = config
        self.spec = BasisSpec(p=cell.p or choose_p(cell.n))
        self.dgp = DgpConfig(
            lambda0=config.lambda0,
            beta0=config.beta0,
            error_family=cell.family,
            hetero_scheme=cell.scheme,
            link=cell.link,
            n=cell.n,
            lattice=cell.lattice,
            seed=config.master_seed,
        )
        self.W = cell_weights(cell, config.master_seed)
        self.sigma = fixed_sigma(cell, self.W, config.master_seed)
        self.solver = None
        if not cell.link.is_nonlinear and config.lambda0 != 0:
            self.solver = NullSolver(self.W, config.lambda0)
        self.key = stable_key(cell.to_dict())

    def replicate(self, r: int) -> ReplicationOutcome:
        rng = substream(self.config.master_seed, StreamTag.REPLICATION, self.key, r)
        try:
            data = simulate_dataset(self.dgp, self.W, rng, self.sigma, self.solver)
            Z = build_mc_instruments(data.X, self.W, self.spec)
            fit = fit_2sls(data.y, data.X, self.W, Z)
            result = linearity_test_from_fit(fit, data.y, data.X, self.W, Z,
                                             self.spec, self.config.alpha)
        except (SarTestError, np.linalg.LinAlgError) as e:
            logger.debug("replication %d failed: %s", r, e)
            return None
        return result.t_stat, result.reject_chi2, result.reject_normal


def aggregate(cell: McCell, p: int, outcomes: List[ReplicationOutcome],
              failure_budget: float) -> McCellResult:
    """
    Rates, Monte Carlo standard errors and moments of T over the successes

    Failed replications are dropped, so every rate and its standard error
    sqrt(rate (1 - rate) / reps) use reps = effective replications (the
    successes). With no failures this is the configured reps.
    """
    reps = len(outcomes)
    ok = [o for o in outcomes if o is not None]
    failures = reps - len(ok)
    if failures > math.floor(failure_budget * reps):
        raise FailureBudgetExceeded(
            f"{failures} of {reps} replications failed in cell {cell.to_dict()}"
        )
    effective = len(ok)
    if effective == 0:
        raise FailureBudgetExceeded(f"no successful replication in cell {cell.to_dict()}")
    t_values = np.array([o[0] for o in ok])
    rate_chi2 = sum(o[1] for o in ok) / effective
    rate_normal = sum(o[2] for o in ok) / effective
    return McCellResult(
        design=cell.design.value,
        n=cell.n,
        p=p,
        scheme=cell.scheme.value,
        family=cell.family.value,
        link=cell.link.value,
        reps=reps,
        failures=failures,
        reject_rate_chi2=float(rate_chi2),
        reject_rate_normal=float(rate_normal),
        mc_se=math.sqrt(rate_chi2 * (1.0 - rate_chi2) / effective),
        mc_se_normal=math.sqrt(rate_normal * (1.0 - rate_normal) / effective),
        t_mean=float(t_values.mean()),
        t_var=float(t_values.var(ddof=1)) if effective > 1 else 0.0,
        lattice=cell.lattice,
    )


def run_cell(cell: McCell, config: McConfig) -> McCellResult:
    runner = CellRunner(cell, config)
    if config.parallel_workers > 1:
        with ThreadPoolExecutor(max_workers=config.parallel_workers) as pool:
            outcomes = list(pool.map(runner.replicate, range(config.reps)))
    else:
        outcomes = [runner.replicate(r) for r in range(config.reps)]
    return aggregate(cell, runner.spec.p, outcomes, config.failure_budget)


def _run_grid(kind: str, config: McConfig, run_logger=None,
              on_cell: Optional[Callable[[int, int, McCellResult], None]] = None) -> McReport:
    report = McReport(kind=kind, reps=config.reps, alpha=config.alpha,
                      master_seed=config.master_seed)
    total = len(config.grid)
    for index, cell in enumerate(config.grid, start=1):
        logger.info("[%s %d/%d] %s n=%d %s %s %s", kind, index, total, cell.design.value,
                    cell.n, cell.scheme.label, cell.family.value, cell.link.value)
        result = run_cell(cell, config)
        report.cells.append(result)
        logger.info("  chi2 rate %.3f (se %.3f), normal rate %.3f, failures %d",
                    result.reject_rate_chi2, result.mc_se, result.reject_rate_normal,
                    result.failures)
        if run_logger is not None:
            run_logger.log_cell(result.to_dict())
        if on_cell is not None:
            on_cell(index, total, result)
    return report


def run_size_experiment(config: McConfig, run_logger=None, on_cell=None) -> McReport:
    """Rejection rates under the linear SAR null"""
    bad = [c for c in config.grid if c.link.is_nonlinear]
    if bad:
        raise ConfigError(
            f"size experiments need the null link, got '{bad[0].link.value}'", key="link"
        )
    return _run_grid("size", config, run_logger, on_cell)


def run_power_experiment(config: McConfig, run_logger=None, on_cell=None) -> McReport:
    """Rejection rates under the nonlinear lattice alternatives"""
    bad = [c for c in config.grid if not c.link.is_nonlinear]
    if bad:
        raise ConfigError("power experiments need a nonlinear link", key="link")
    return _run_grid("power", config, run_logger, on_cell)
