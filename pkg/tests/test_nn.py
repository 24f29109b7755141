import numpy as np
import pytest

from cartanflow.nn import (
    AdamWState,
    DimMismatchError,
    VectorFieldModel,
    adamw_step,
    time_embed,
)


def numeric_param_grad(model, x, t, grad_out, h=1e-5):
    """Central finite differences through the scalar sum(out * grad_out)."""
    base = model.params.copy()
    out = np.zeros_like(base)
    for i in range(base.size):
        model.params[i] = base[i] + h
        up = float(np.sum(model.forward(x, t) * grad_out))
        model.params[i] = base[i] - h
        dn = float(np.sum(model.forward(x, t) * grad_out))
        model.params[i] = base[i]
        out[i] = (up - dn) / (2.0 * h)
    model.params[:] = base
    return out


def brute_force_param_count(arch, input_dim, depth, width, gate_width=64):
    total = 0
    last = input_dim + 8 if arch == "mlp" else input_dim
    for _ in range(depth):
        total += width * last + width
        if arch == "concatsquash":
            total += gate_width * 8 + gate_width      # gate hidden
            total += width * gate_width + width       # gate output
            total += width * 8 + width                # time bias map
        last = width
    total += input_dim * last + input_dim
    return total


# ------------------------------------------------------------------ time_embed

def test_time_embed_at_zero():
    assert np.allclose(time_embed(0.0), [1, 0, 1, 0, 1, 0, 1, 0])


def test_time_embed_analytic_half_pi():
    got = time_embed(np.pi / 2)
    assert np.allclose(got, [0, 1, -1, 0, 0, -1, 1, 0], atol=1e-15)


def test_time_embed_batched():
    got = time_embed(np.array([0.0, np.pi / 2]))
    assert got.shape == (2, 8)
    assert np.allclose(got[0], [1, 0, 1, 0, 1, 0, 1, 0])


def test_time_embed_derivative_matches_fd():
    t = 0.37
    h = 1e-6
    fd = (time_embed(t + h) - time_embed(t - h)) / (2 * h)
    k = np.arange(1.0, 5.0)
    analytic = np.empty(8)
    analytic[0::2] = -k * np.sin(k * t)
    analytic[1::2] = k * np.cos(k * t)
    assert np.allclose(fd, analytic, atol=1e-6)


# ---------------------------------------------------------------- param layout

@pytest.mark.parametrize("arch,depth,width,gate", [
    ("mlp", 3, 256, 64),
    ("mlp", 0, 16, 64),
    ("mlp", 1, 7, 64),
    ("concatsquash", 3, 512, 64),
    ("concatsquash", 1, 5, 3),
    ("concatsquash", 0, 8, 4),
])
def test_param_count_matches_enumeration(arch, depth, width, gate):
    model = VectorFieldModel(arch, 4, depth, width, gate_width=gate)
    assert model.param_count == brute_force_param_count(arch, 4, depth, width, gate)
    assert model.params.shape == (model.param_count,)


def test_init_deterministic_and_biases_zero():
    a = VectorFieldModel.concat_squash(3, depth=2, width=6, gate_width=4, seed=9)
    b = VectorFieldModel.concat_squash(3, depth=2, width=6, gate_width=4, seed=9)
    assert np.array_equal(a.params, b.params)
    assert np.allclose(a.param("b0"), 0.0)
    assert np.allclose(a.param("gate_b2_0"), 4.0)  # gates start open


# -------------------------------------------------------------------- forward

def test_forward_zero_output_layer_is_zero():
    for ctor in (VectorFieldModel.mlp, VectorFieldModel.concat_squash):
        model = ctor(3, depth=2, width=8, seed=1).zero_output_layer()
        x = np.random.default_rng(0).standard_normal((5, 3))
        assert np.allclose(model.forward(x, 0.3), 0.0)


def test_forward_identity_configuration():
    # depth-1 concatsquash, identity activation, open gate, zero time bias,
    # identity main and output weights: u(x, t) = x.
    model = VectorFieldModel.concat_squash(3, depth=1, width=3, gate_width=2,
                                           activation="identity", seed=0)
    model.params[:] = 0.0
    model.param("w0")[:] = np.eye(3)
    model.param("gate_b2_0")[:] = 500.0  # sigmoid -> 1
    model.param("w_out")[:] = np.eye(3)
    x = np.random.default_rng(1).standard_normal((4, 3))
    assert np.allclose(model.forward(x, 0.7), x, atol=1e-12)


def test_forward_continuous_in_t():
    model = VectorFieldModel.concat_squash(4, depth=2, width=16, seed=3)
    x = np.random.default_rng(2).standard_normal((6, 4))
    t = 0.42
    u0 = model.forward(x, t)
    u1 = model.forward(x, t + 1e-7)
    assert np.max(np.abs(u1 - u0)) < 1e-4 * (1.0 + np.max(np.abs(u0)))


def test_forward_dim_mismatch():
    model = VectorFieldModel.mlp(3, depth=1, width=4)
    with pytest.raises(DimMismatchError):
        model.forward(np.zeros((2, 5)), 0.1)
    with pytest.raises(DimMismatchError):
        model.forward(np.zeros((2, 3)), np.zeros(3))


def test_forward_single_point_shape():
    model = VectorFieldModel.mlp(2, depth=1, width=4, seed=5)
    out = model.forward(np.array([0.1, -0.2]), 0.5)
    assert out.shape == (2,)


# ------------------------------------------------------------------- backward

def test_backward_constant_loss_zero_grad():
    model = VectorFieldModel.mlp(2, depth=1, width=4, seed=2)
    x = np.random.default_rng(3).standard_normal((3, 2))
    grads = model.backward(x, 0.2, np.zeros((3, 2)))
    assert np.allclose(grads, 0.0)


def test_backward_one_parameter_linear_analytic():
    # u(x) = w * x in 1-d via a depth-0 mlp with the time block zeroed:
    # loss = (u - y)^2 => dloss/dw = 2 (w x - y) x.
    model = VectorFieldModel.mlp(1, depth=0, width=1, seed=0)
    model.params[:] = 0.0
    w = 1.7
    model.param("w_out")[0, 0] = w
    x = np.array([[2.0]])
    y = 3.0
    u = model.forward(x, 0.0)[0, 0]
    grad_out = np.array([[2.0 * (u - y)]])
    grads = model.backward(x, 0.0, grad_out)
    dw = grads[model._offsets["w_out"][0]]
    assert dw == pytest.approx(2.0 * (w * 2.0 - y) * 2.0, rel=1e-12)


@pytest.mark.parametrize("arch,depth,width,gate,act", [
    ("mlp", 2, 6, 4, "tanh"),
    ("mlp", 0, 4, 4, "tanh"),
    ("concatsquash", 2, 5, 3, "tanh"),
    ("concatsquash", 1, 4, 3, "identity"),
])
def test_backward_matches_finite_differences(arch, depth, width, gate, act):
    rng = np.random.default_rng(depth * 31 + width)
    model = VectorFieldModel(arch, 3, depth, width, gate_width=gate,
                             activation=act, seed=7)
    x = rng.standard_normal((4, 3))
    t = rng.uniform(0, 1, 4)
    grad_out = rng.standard_normal((4, 3))
    _, cache = model.forward_cached(x, t)
    analytic = model.backward_from_cache(cache, grad_out)
    numeric = numeric_param_grad(model, x, t, grad_out)
    scale = np.maximum(np.abs(numeric), 1e-3)
    assert np.max(np.abs(analytic - numeric) / scale) < 1e-5


# ------------------------------------------------------------------------ jvp

def test_jvp_linear_model_exact():
    model = VectorFieldModel.mlp(3, depth=0, width=1, seed=0)
    model.params[:] = 0.0
    rng = np.random.default_rng(4)
    w = rng.standard_normal((3, 3))
    model.param("w_out")[:, :3] = w  # time block stays zero
    x = rng.standard_normal((5, 3))
    d = rng.standard_normal(3)
    got = model.jvp(x, 0.3, d)
    assert np.allclose(got, np.broadcast_to(w @ d, (5, 3)), atol=1e-12)


def test_jvp_zero_direction():
    model = VectorFieldModel.concat_squash(3, depth=2, width=8, seed=1)
    x = np.random.default_rng(5).standard_normal((4, 3))
    assert np.allclose(model.jvp(x, 0.4, np.zeros(3)), 0.0)


@pytest.mark.parametrize("arch", ["mlp", "concatsquash"])
def test_jvp_matches_finite_differences(arch):
    rng = np.random.default_rng(6)
    model = VectorFieldModel(arch, 4, 2, 8, gate_width=4, seed=8)
    x = rng.standard_normal((6, 4))
    t = 0.3
    d = rng.standard_normal(4)
    h = 1e-5
    fd = (model.forward(x + h * d, t) - model.forward(x - h * d, t)) / (2 * h)
    got = model.jvp(x, t, d)
    denom = np.maximum(np.abs(fd), 1e-6)
    assert np.max(np.abs(got - fd) / denom) < 1e-6


def test_jvp_trace_matches_fd_jacobian_trace():
    rng = np.random.default_rng(7)
    model = VectorFieldModel.concat_squash(3, depth=2, width=8, gate_width=4, seed=9)
    x = rng.standard_normal((1, 3))
    t = 0.6
    _, cache = model.forward_cached(x, t)
    trace = sum(model.jvp_from_cache(cache, np.eye(3)[i])[0, i] for i in range(3))
    h = 1e-5
    fd_trace = 0.0
    for i in range(3):
        e = np.eye(3)[i]
        fd = (model.forward(x + h * e, t) - model.forward(x - h * e, t)) / (2 * h)
        fd_trace += fd[0, i]
    assert trace == pytest.approx(fd_trace, rel=1e-5, abs=1e-8)


# ---------------------------------------------------------------------- adamw

def test_adamw_zero_grad_no_decay_is_noop():
    params = np.array([1.0, -2.0, 3.0])
    state = AdamWState(lr=0.1, weight_decay=0.0)
    out, _ = adamw_step(state, params, np.zeros(3))
    assert np.array_equal(out, [1.0, -2.0, 3.0])


def test_adamw_first_step_is_signed_lr():
    params = np.zeros(3)
    g = np.array([0.5, -2.0, 1e-3])
    state = AdamWState(lr=0.01, weight_decay=0.0, eps=0.0)
    adamw_step(state, params, g)
    # bias correction makes m_hat/sqrt(v_hat) = sign(g) on the first step
    assert np.allclose(params, -0.01 * np.sign(g))


def test_adamw_decoupled_decay():
    params = np.array([10.0])
    state = AdamWState(lr=0.1, weight_decay=0.5)
    adamw_step(state, params, np.zeros(1))
    # pure decay: p <- p - lr * wd * p
    assert params[0] == pytest.approx(10.0 * (1 - 0.1 * 0.5))


def test_adamw_quadratic_bowl_converges():
    params = np.array([5.0, -3.0])
    state = AdamWState(lr=0.05, weight_decay=0.0)
    losses = []
    for _ in range(100):
        losses.append(float(params @ params))
        adamw_step(state, params, 2.0 * params)
    assert all(b < a for a, b in zip(losses[5:], losses[6:]))
    assert losses[-1] < losses[0]


def test_adamw_shape_mismatch():
    state = AdamWState()
    with pytest.raises(DimMismatchError):
        adamw_step(state, np.zeros(3), np.zeros(4))


# ----------------------------------------------------------------- determinism

def test_forward_backward_deterministic():
    model = VectorFieldModel.concat_squash(4, depth=2, width=16, seed=12)
    x = np.random.default_rng(13).standard_normal((8, 4))
    t = np.random.default_rng(14).uniform(0, 1, 8)
    g = np.random.default_rng(15).standard_normal((8, 4))
    a = model.backward(x, t, g)
    b = model.backward(x, t, g)
    assert a.tobytes() == b.tobytes()
