"""
Configuration settings for the spatial linearity test toolkit
Values come from the environment (or a .env file) with sensible defaults
"""

import os
from dotenv import load_dotenv

# Load environment variables from .env file if it exists
load_dotenv()

# Inference settings
DEFAULT_ALPHA = float(os.environ.get('SAR_ALPHA', 0.05))

# Monte Carlo settings
MC_REPS = int(os.environ.get('SAR_MC_REPS', 1000))
MASTER_SEED = int(os.environ.get('SAR_MASTER_SEED', 20240501))
WORKERS = int(os.environ.get('SAR_WORKERS', 1))

# Logging
LOG_LEVEL = os.environ.get('SAR_LOG_LEVEL', 'INFO').upper()
RUN_LOG_PATH = os.environ.get('SAR_RUN_LOG', '')

# Optional remote sink for run logs
SUPABASE_URL = os.environ.get('SUPABASE_URL', '')
SUPABASE_KEY = os.environ.get('SUPABASE_KEY', '')


def run_log_enabled():
    """Whether any run-log sink is configured"""
    return bool(RUN_LOG_PATH) or bool(SUPABASE_URL and SUPABASE_KEY)


NUMERICS_CONFIG = {
    'spectral_tol': 1e-12,
    'spectral_max_iter': 10000,
    'dense_svd_below': 500,   # exact SVD for smaller matrices
    'rank_tol': 1e-10,        # relative singular value cutoff for Z
    'hermite_max_degree': 50,
    'rate_warning_threshold': 1.0,  # p^3 / n
}

DGP_DEFAULTS = {
    'lambda0': 0.4,
    'beta0': (0.5, -2.0, 1.0),
}

MC_DEFAULTS = {
    'reps': MC_REPS,
    'alpha': DEFAULT_ALPHA,
    'failure_budget': 0.01,
    'max_weight_redraws': 10,
}

EMPIRICAL_DEFAULTS = {
    'year1': 1999,
    'year2': 2000,
    'p_list': (4, 5, 6),
    'star_levels': (0.1, 0.05, 0.01),
}
