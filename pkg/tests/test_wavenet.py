import numpy as np
import pytest

from driftrec import spectral, wavenet

from conftest import random_laplacian


def _setup(n=7, d=3, layers=2, activation="tanh", seed=0, spectral_on=True):
    rng = np.random.default_rng(seed)
    bank = spectral.build_filter_bank(random_laplacian(n, seed), scales_count=3, p=4)
    params = wavenet.init_params(n, [d] * (layers + 1), 3, rng, activation)
    params.spectral = spectral_on
    params.g_theta = [g + 0.3 * rng.standard_normal(g.shape) for g in params.g_theta]
    return bank, params, rng.standard_normal((n, d)), rng.standard_normal((n, d))


def _objective(x, bank, params, probe):
    out, _ = wavenet.forward(x, bank, params, training=False)
    return float((out * probe).sum())


def _numeric(f, arr, h=1e-6):
    grad = np.zeros_like(arr)
    for idx in np.ndindex(arr.shape):
        old = arr[idx]
        arr[idx] = old + h
        up = f()
        arr[idx] = old - h
        down = f()
        arr[idx] = old
        grad[idx] = (up - down) / (2 * h)
    return grad


def _rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-30)


@pytest.mark.parametrize("activation", ["tanh", "identity"])
@pytest.mark.parametrize("spectral_on", [True, False])
def test_gradients_match_finite_differences(activation, spectral_on):
    bank, params, x, probe = _setup(activation=activation, spectral_on=spectral_on)
    _, cache = wavenet.forward(x, bank, params)
    dx, grads = wavenet.backward(probe, cache, bank, params)

    def f():
        return _objective(x, bank, params, probe)

    assert _rel(dx, _numeric(f, x)) < 1e-6
    for layer in range(params.n_layers):
        assert _rel(grads["w"][layer], _numeric(f, params.weights[layer])) < 1e-6
        if spectral_on:
            assert _rel(grads["g"][layer], _numeric(f, params.g_theta[layer])) < 1e-6


def test_polynomial_filters_are_symmetric():
    bank, *_ = _setup()
    for s in range(bank.n_scales):
        for inverse in (False, True):
            m = spectral.filter_matrix(bank, s, inverse)
            np.testing.assert_allclose(m, m.T, atol=1e-12)


def test_unit_filters_reduce_to_plain_layer_on_exact_bank():
    bank, params, x, _ = _setup(layers=1, activation="relu")
    params.g_theta = [np.ones_like(g) for g in params.g_theta]
    out, _ = wavenet.forward(x, bank.exact(), params, training=False)
    np.testing.assert_allclose(out, np.maximum(x @ params.weights[0], 0.0), atol=1e-10)
    params.spectral = False
    plain, _ = wavenet.forward(x, bank, params, training=False)
    np.testing.assert_allclose(out, plain, atol=1e-10)


def test_stale_cache_rejected():
    bank, params, x, probe = _setup()
    _, cache = wavenet.forward(x, bank, params)
    params.weights[0][0, 0] += 1.0
    with pytest.raises(ValueError, match="stale"):
        wavenet.backward(probe, cache, bank, params)
    with pytest.raises(ValueError):
        wavenet.backward(probe, None, bank, params)


def test_inference_has_no_cache_and_rejects_nan():
    bank, params, x, _ = _setup()
    _, cache = wavenet.forward(x, bank, params, training=False)
    assert cache is None
    params.g_theta[0][0, 0] = np.nan
    with pytest.raises(ValueError, match="NaN"):
        wavenet.forward(x, bank, params)


def test_shape_checks():
    bank, params, x, _ = _setup()
    with pytest.raises(ValueError):
        wavenet.forward(x[:-1], bank, params)
    with pytest.raises(ValueError):
        wavenet.forward(x[:, :-1], bank, params)
    with pytest.raises(ValueError):
        wavenet.activate("gelu", x)
