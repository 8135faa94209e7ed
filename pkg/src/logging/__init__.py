"""Logging module for experiment run tracking"""

from .run_logger import RunLogger, get_run_logger, initialize_run_logger

__all__ = ['RunLogger', 'get_run_logger', 'initialize_run_logger']
