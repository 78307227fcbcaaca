import json
import math

import numpy as np
import pytest

import libmlab


def test_matrix_closed_form():
    d = np.array(libmlab.diffusion_matrix(1.0, 1.0, 1.0, 2.0, 1.0))
    assert np.allclose(d, [[0.8, 0.4], [0.4, 1.2]], atol=1e-12)
    assert libmlab.is_normally_elliptic(d.tolist())
    t = np.array(libmlab.two_color_matrix(0.3, 0.7, 1.0))
    assert np.allclose(t, [[0.65, 0.15], [0.35, 0.85]], atol=1e-12)
    a = np.array(libmlab.ms_ternary_matrix(0.2, 0.3, 3.0, 1.0, 2.0))
    assert np.allclose(a * 3.4, [[2.2, 0.4], [0.3, 1.6]], atol=1e-12)


def test_expressions():
    assert libmlab.eval_expr("0.5+0.2*cos(2*pi*x)", [0.0, 0.25]) == pytest.approx([0.7, 0.5])
    with pytest.raises(ValueError):
        libmlab.eval_expr("2*x +", [0.0])


def test_config_errors():
    with pytest.raises(ValueError):
        libmlab.canonical_config('{"bogus": 1}')
    text = libmlab.canonical_config("")
    assert json.loads(text)["pde"]["M"] == 256


def test_heat_mode():
    cfg = {
        "model": {"sigma1_sq": 1, "sigma2_sq": 1, "lambda": 1},
        "particles": {"t_final": 0.01},
        "initial": {"rho1": "0.5+0.1*cos(2*pi*x)", "rho2": "0.5"},
    }
    out = libmlab.solve(cfg)
    total = out["rho1"][-1] + out["rho2"][-1]
    amp = 2 * abs(np.sum(total * np.exp(-2j * np.pi * out["x"]))) / len(total)
    assert abs(amp - 0.1 * math.exp(-2 * math.pi ** 2 * 0.01)) < 1e-3


def test_ensemble_is_deterministic():
    cfg = {"model": {"N": 32}, "particles": {"t_final": 0.002, "replicas": 3}, "pde": {"M": 64}}
    a = libmlab.ensemble_mean(cfg, seed=5, threads=1)
    b = libmlab.ensemble_mean(cfg, seed=5, threads=3)
    assert np.array_equal(a["rho1"], b["rho1"])
    mass = (a["rho1"][-1] + a["rho2"][-1]).sum() / 64
    assert abs(mass - 1.0) < 0.1
