import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qspec.lag_window import (
    LagWindow,
    bartlett,
    delta_M,
    eval_lambda,
    kernel_K,
    kernel_K_fourier,
    kernel_W,
    parse_window,
    truncated,
    tukey,
)


def test_eval_lambda_examples():
    assert eval_lambda(bartlett(4), 0.0) == 1.0
    assert eval_lambda(bartlett(4), 0.5) == 0.5
    assert eval_lambda(truncated(4), 1.2) == 0.0


@given(st.floats(-3, 3), st.sampled_from(["truncated", "bartlett"]))
def test_support_and_evenness(u, kind):
    w = LagWindow(kind, 5)
    assert eval_lambda(w, u) == eval_lambda(w, -u)
    if abs(u) > 1:
        assert eval_lambda(w, u) == 0.0
    assert eval_lambda(w, 0.0) == 1.0


def test_kernel_K_examples():
    assert kernel_K(truncated(2), 8, 0.0) == pytest.approx(5 / 8)
    assert kernel_K(bartlett(2), 8, 0.0) == pytest.approx(0.25)
    brute = sum(np.cos(r * np.pi / 3) for r in range(-4, 5)) / 64
    assert kernel_K(truncated(4), 64, np.pi / 3) == pytest.approx(brute, rel=1e-12)


def test_kernel_K_warns_on_short_T():
    with pytest.warns(RuntimeWarning):
        kernel_K(truncated(5), 8, 0.0)


def test_delta_examples():
    assert delta_M(truncated(3), 0.0) == pytest.approx(7)
    theta = np.pi / 2
    dirichlet = np.sin(3.5 * theta) / np.sin(theta / 2)
    assert delta_M(truncated(3), theta) == pytest.approx(dirichlet, rel=1e-12)
    assert delta_M(bartlett(2), 0.0) == pytest.approx(1.5)


@pytest.mark.parametrize("window", [truncated(4), bartlett(6)])
@pytest.mark.parametrize("theta", [0.0, 0.3, 2.0])
def test_delta_matches_frequency_integral(window, theta):
    # Delta_M(theta) = 2pi/N sum_n W(u_n - theta1) W(u_n - theta2)
    N = 4096
    u = 2 * np.pi * np.arange(N) / N
    t1, t2 = 0.7 + theta, 0.7
    val = 2 * np.pi / N * np.sum(kernel_W(window, u - t1) * kernel_W(window, u - t2))
    # W carries 1/2pi, the lag-sum Delta does not: the two forms differ by that constant
    assert 2 * np.pi * val == pytest.approx(delta_M(window, theta), rel=1e-9, abs=1e-12)


@given(st.floats(-10, 10))
@settings(max_examples=30)
def test_K_equals_scaled_W(theta):
    w = bartlett(7)
    assert kernel_K(w, 64, theta) == pytest.approx(2 * np.pi / 64 * kernel_W(w, theta), abs=1e-14)
    assert delta_M(w, theta) == pytest.approx(delta_M(w, -theta), abs=1e-12)


def test_kernel_fourier_cache_matches_direct():
    w = bartlett(5)
    K = kernel_K_fourier(w, 32)
    direct = kernel_K(w, 32, 2 * np.pi * np.arange(32) / 32)
    np.testing.assert_allclose(K, direct, atol=1e-15)
    assert kernel_K_fourier(w, 32) is K
    assert not K.flags.writeable


def test_weights_and_validation():
    np.testing.assert_allclose(bartlett(2).weights(), [0, 0.5, 1, 0.5, 0])
    with pytest.raises(ValueError):
        LagWindow("parzen", 3)
    with pytest.raises(ValueError):
        LagWindow("bartlett", -1)


def test_tukey_general(tmp_path):
    # a_0 = 1/2, a_{+-1} = 1/4 gives the Tukey-Hanning taper (1 + cos(pi u))/2 in u -> u/2 form
    w = tukey(4, [0.25, 0.5, 0.25])
    u = np.linspace(-1, 1, 9)
    np.testing.assert_allclose(eval_lambda(w, u), 0.5 + 0.5 * np.cos(2 * np.pi * u), atol=1e-14)
    path = tmp_path / "coef.json"
    path.write_text(json.dumps({"a": [0.25, 0.5, 0.25], "b": []}))
    assert parse_window(f"tukey:{path}", 4) == w
    assert parse_window("bartlett", 3) == bartlett(3)
    with pytest.raises(ValueError):
        parse_window("hann", 3)
