"""Python access to the fbmreg estimators.

Parameter dicts use the same keys as the command-line tool:
sigma_x_ri, sigma_x_ti, hurst, k_rt, dt, ds, alpha_deg, dr.
Fragments are square, odd-sized 2-D float arrays; row i is t = i - (N-1)/2.
"""

import json

import numpy as np

from . import _fbmreg
from ._fbmreg import FbmregError, chi2_4_upper_quantile

__all__ = [
    "FbmregError",
    "chi2_4_upper_quantile",
    "test_point",
    "simulate",
    "crlb",
    "log_likelihood",
    "estimate_ml",
    "estimate_baseline",
    "screen",
]


def _grid(a):
    return np.asarray(a, dtype=np.float64)


def test_point(tp_id):
    """Built-in test point as a dict (params, n_ri, n_ti, noise_std_ri, noise_std_ti, ...)."""
    return json.loads(_fbmreg.test_point(int(tp_id)))


def simulate(params, n_ri, n_ti, noise_std_ri, noise_std_ti, seed):
    """Draw one (reference, template) pair; returns two 2-D arrays."""
    return _fbmreg.simulate(json.dumps(params), n_ri, n_ti, noise_std_ri, noise_std_ti, seed)


def crlb(params, n_ri, n_ti, noise_var_ri, noise_var_ti, include_cov=False):
    return json.loads(_fbmreg.crlb(json.dumps(params), n_ri, n_ti, noise_var_ri, noise_var_ti, include_cov))


def log_likelihood(ref, tpl, noise_var_ri, noise_var_ti, params):
    return _fbmreg.log_likelihood(_grid(ref), _grid(tpl), noise_var_ri, noise_var_ti, json.dumps(params))


def estimate_ml(ref, tpl, noise_var_ri, noise_var_ti, init=(0.0, 0.0, 0.0, 1.0)):
    """ML estimate from the initial guess (dt, ds, alpha_deg, dr)."""
    return json.loads(_fbmreg.estimate_ml(_grid(ref), _grid(tpl), noise_var_ri, noise_var_ti, list(init)))


def estimate_baseline(ref, tpl, init=(0.0, 0.0, 0.0, 1.0), measure="ncc"):
    return json.loads(_fbmreg.estimate_baseline(_grid(ref), _grid(tpl), list(init), measure))


def screen(ref, tpl):
    return json.loads(_fbmreg.screen(_grid(ref), _grid(tpl)))
