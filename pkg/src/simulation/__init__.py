"""Data generation and Monte Carlo experiments"""
