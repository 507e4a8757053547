"""Unit conversions between the internal SI representation and report units.

Dynamics run in radians and newton-metres. Logs and fitted transfer
functions use degrees and millinewton-metres.
"""
import math

import numpy as np

DEG_PER_RAD = 180.0 / math.pi
RAD_PER_DEG = math.pi / 180.0
MNM_PER_NM = 1000.0


def _check_finite(value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite value: {value!r}")
    return value


def deg_to_rad(value):
    _check_finite(value)
    return value * RAD_PER_DEG


def rad_to_deg(value):
    _check_finite(value)
    return value * DEG_PER_RAD


def mnm_to_nm(value):
    _check_finite(value)
    return value / MNM_PER_NM


def nm_to_mnm(value):
    _check_finite(value)
    return value * MNM_PER_NM


def per_deg_to_per_rad(value):
    """Stiffness-like quantity per degree -> per radian (e.g. mNm/deg -> mNm/rad)."""
    _check_finite(value)
    return value * DEG_PER_RAD


def per_rad_to_per_deg(value):
    _check_finite(value)
    return value * RAD_PER_DEG


convert_angle = deg_to_rad
