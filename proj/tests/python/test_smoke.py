import math

import numpy as np
import pytest

import waveinv

PEEK = (3.9559e9, 0.40079, 1400.3)


def test_forward_response_shape_and_linearity():
    cfg = waveinv.ForwardConfig("desk")
    y = waveinv.forward_response(*PEEK, cfg)
    assert y.shape == (cfg.samples,)
    cfg.amplitudes = [2.0, 0.8, 0.4]
    np.testing.assert_allclose(waveinv.forward_response(*PEEK, cfg), 2.0 * y, atol=1e-12 * np.abs(y).max())


def test_truncated_window_raises():
    cfg = waveinv.ForwardConfig("desk")
    cfg.samples = 1024
    with pytest.raises(waveinv.ModelError):
        waveinv.forward_response(*PEEK, cfg)


def test_phase_feature_length():
    cfg = waveinv.ForwardConfig()
    y = waveinv.forward_response(*PEEK, cfg)
    f = waveinv.transform(y, cfg.dt, "autocorr-phase", cfg.bandwidth)
    assert f.shape == (cfg.samples // 2,)
    assert np.all(np.isfinite(f))


def test_invert_recovers_peek():
    cfg = waveinv.ForwardConfig()
    y = waveinv.forward_response(*PEEK, cfg)
    x0 = np.array([PEEK[0] + 0.38368e9, PEEK[1] + 6.9805e-3])
    t = waveinv.invert(y, x0, PEEK[2], truth=np.array(PEEK[:2]), max_evaluations=50)
    assert t["status"] == "converged"
    assert t["rel1"][-1] < 1e-6
    assert t["x"].shape[1] == 2
    assert t["evaluations"] == t["eval_count"][-1]


def test_lambda_and_norms():
    g = 4.0 * np.eye(2)
    assert waveinv.lambda_k(g, np.array([1.0, -2.0])) == pytest.approx(0.25)
    assert waveinv.relative_1(np.array([2.0, 4.0]), np.array([1.0, 2.0])) == pytest.approx(1.0)
    assert waveinv.relative_2(np.array([3.0, 4.0]), np.array([3.0, 0.0])) == pytest.approx(0.8)


def test_priors_and_sampling():
    a, t = waveinv.prior("PEEK")["rho"]
    assert a * t == pytest.approx(1.4003, rel=1e-4)
    assert waveinv.gamma_inv_cdf(1.0, 1.0, 1.0 - math.exp(-1.0)) == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    alpha, theta = waveinv.gamma_fit(rng.gamma(3.0, 2.0, 20000))
    assert alpha == pytest.approx(3.0, rel=0.05)
    u = waveinv.lhs_sample(8, 2, 5, 10)
    assert u.shape == (8, 2)
    for col in u.T:
        assert sorted(np.floor(col * 8).astype(int)) == list(range(8))
    with pytest.raises(waveinv.NumericalError):
        waveinv.gamma_fit([2.0] * 20)
