"""Reference distributions for the standardized statistic T"""

import math

from scipy import stats

from src.utils.validators import InputValidator


def normal_critical(alpha: float) -> float:
    """Upper-tail N(0, 1) critical value"""
    alpha = InputValidator.require_alpha(alpha)
    return float(stats.norm.ppf(1.0 - alpha))


def chi2_standardized_critical(p: int, alpha: float) -> float:
    """(chi2_{p, 1-alpha} - p) / sqrt(2p)"""
    alpha = InputValidator.require_alpha(alpha)
    if int(p) != p or p < 1:
        raise ValueError(f"p must be a positive integer, got {p}")
    return float((stats.chi2.ppf(1.0 - alpha, p) - p) / math.sqrt(2.0 * p))


def normal_pvalue(t_stat: float) -> float:
    """1 - Phi(T)"""
    return float(stats.norm.sf(t_stat))


def chi2_pvalue(quad_form: float, p: int) -> float:
    """1 - F_{chi2_p}(n d' H^{-1} d)"""
    return float(stats.chi2.sf(quad_form, p))


def choose_p(n: int) -> int:
    """Integer part of n^{1/3}, exact at perfect cubes"""
    if int(n) != n or n < 8:
        raise ValueError(f"choose_p needs an integer n >= 8, got {n}")
    n = int(n)
    p = int(round(n ** (1.0 / 3.0)))
    while p ** 3 > n:
        p -= 1
    while (p + 1) ** 3 <= n:
        p += 1
    return p
