"""Decibel/linear conversions used throughout the simulator."""

import numpy as np


def db_to_lin(x_db):
    """Convert a power ratio from dB to linear units."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def lin_to_db(x):
    """Convert a linear power ratio to dB."""
    return 10.0 * np.log10(x)


def w_to_dbm(p_watt):
    """Convert power in watts to dBm."""
    return 10.0 * np.log10(np.asarray(p_watt, dtype=float) * 1e3)
