"""Minimal neural-network stack for the flow field u_theta(x, t).

Two architectures over a single flat float64 parameter vector with documented
layer offsets:

  * "mlp": the time embedding is concatenated to x, followed by `depth`
    hidden layers of `width` units and an affine output.
  * "concatsquash": hidden layers compute
        h' = act((W h + b) * sigmoid(g(e)) + B(e)),
    where e = time_embed(t), g is a one-hidden-layer gate network
    (8 -> gate_width -> width, per-hidden-unit output) and B is an affine map
    of e; the final layer is affine without a gate. Time enters only through
    the gate and bias paths.

Gradients are exact reverse-mode over the cached forward pass; directional
derivatives in x are exact forward-mode (t held fixed). Batch reductions are
plain ordered numpy sums, so training trajectories are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TIME_EMBED_DIM = 8
GATE_BIAS_INIT = 4.0  # sigmoid(4) ~ 0.982: gates start open


class DimMismatchError(ValueError):
    """Input dimensions do not match the model."""


def time_embed(t):
    """t -> (cos t, sin t, cos 2t, sin 2t, cos 3t, sin 3t, cos 4t, sin 4t)."""
    t = np.asarray(t, dtype=float)
    ang = t[..., None] * np.arange(1.0, 5.0)
    out = np.empty(t.shape + (TIME_EMBED_DIM,))
    out[..., 0::2] = np.cos(ang)
    out[..., 1::2] = np.sin(ang)
    return out


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _act(pre, kind):
    if kind == "tanh":
        return np.tanh(pre)
    return pre  # identity


def _act_deriv_from_output(h, kind):
    if kind == "tanh":
        return 1.0 - h * h
    return np.ones_like(h)


def _glorot(rng, shape):
    fan_out, fan_in = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _layer_shapes(arch, input_dim, depth, width, gate_width):
    """Ordered (name, shape) layout of the flat parameter vector."""
    shapes = []
    last = input_dim + TIME_EMBED_DIM if arch == "mlp" else input_dim
    for i in range(depth):
        shapes.append((f"w{i}", (width, last)))
        shapes.append((f"b{i}", (width,)))
        if arch == "concatsquash":
            shapes.append((f"gate_w1_{i}", (gate_width, TIME_EMBED_DIM)))
            shapes.append((f"gate_b1_{i}", (gate_width,)))
            shapes.append((f"gate_w2_{i}", (width, gate_width)))
            shapes.append((f"gate_b2_{i}", (width,)))
            shapes.append((f"bias_w{i}", (width, TIME_EMBED_DIM)))
            shapes.append((f"bias_b{i}", (width,)))
        last = width
    shapes.append(("w_out", (input_dim, last)))
    shapes.append(("b_out", (input_dim,)))
    return shapes


@dataclass
class VectorFieldModel:
    """u_theta(x, t) with parameters in one flat vector."""

    arch: str
    input_dim: int
    depth: int
    width: int
    gate_width: int = 64
    activation: str = "tanh"
    seed: int = 0
    params: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.arch not in ("mlp", "concatsquash"):
            raise ValueError(f"unknown architecture {self.arch!r}")
        if self.activation not in ("tanh", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")
        self._shapes = _layer_shapes(self.arch, self.input_dim, self.depth,
                                     self.width, self.gate_width)
        self._offsets = {}
        off = 0
        for name, shape in self._shapes:
            size = int(np.prod(shape))
            self._offsets[name] = (off, shape)
            off += size
        self._size = off
        if self.params is None:
            self.params = self._init_params()
        else:
            self.params = np.asarray(self.params, dtype=float).reshape(-1)
            if self.params.shape[0] != self._size:
                raise DimMismatchError(
                    f"expected {self._size} parameters, got {self.params.shape[0]}"
                )

    @classmethod
    def mlp(cls, input_dim, depth=3, width=256, activation="tanh", seed=0):
        return cls("mlp", input_dim, depth, width, activation=activation, seed=seed)

    @classmethod
    def concat_squash(cls, input_dim, depth=3, width=512, gate_width=64,
                      activation="tanh", seed=0):
        return cls("concatsquash", input_dim, depth, width, gate_width=gate_width,
                   activation=activation, seed=seed)

    def _init_params(self):
        rng = np.random.default_rng(self.seed)
        out = np.zeros(self._size)
        for name, shape in self._shapes:
            off, _ = self._offsets[name]
            size = int(np.prod(shape))
            if len(shape) == 2:
                out[off:off + size] = _glorot(rng, shape).reshape(-1)
            elif name.startswith("gate_b2_"):
                out[off:off + size] = GATE_BIAS_INIT
        return out

    @property
    def param_count(self):
        return self._size

    def param(self, name):
        """Writable view of one layer's block in the flat vector."""
        off, shape = self._offsets[name]
        return self.params[off:off + int(np.prod(shape))].reshape(shape)

    def layer_names(self):
        return [name for name, _ in self._shapes]

    def zero_output_layer(self):
        self.param("w_out")[:] = 0.0
        self.param("b_out")[:] = 0.0
        return self

    # ---------------------------------------------------------------- forward

    def _prepare(self, x, t):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise DimMismatchError(f"expected inputs of dim {self.input_dim}, "
                                   f"got {x.shape[1]}")
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            t = np.full(x.shape[0], float(t))
        if t.shape != (x.shape[0],):
            raise DimMismatchError("t must be a scalar or match the batch size")
        return x, t, single

    def forward_cached(self, x, t):
        """Forward pass returning (output, cache) for backward/jvp reuse."""
        x, t, single = self._prepare(x, t)
        e = time_embed(t)
        cache = {"x": x, "e": e, "single": single, "inputs": [], "outputs": []}
        if self.arch == "mlp":
            h = np.concatenate([x, e], axis=1)
            cache["feat"] = h
            for i in range(self.depth):
                cache["inputs"].append(h)
                pre = h @ self.param(f"w{i}").T + self.param(f"b{i}")
                h = _act(pre, self.activation)
                cache["outputs"].append(h)
        else:
            h = x
            cache["gates"] = []
            for i in range(self.depth):
                cache["inputs"].append(h)
                z = h @ self.param(f"w{i}").T + self.param(f"b{i}")
                a1 = e @ self.param(f"gate_w1_{i}").T + self.param(f"gate_b1_{i}")
                m = np.tanh(a1)
                s = _sigmoid(m @ self.param(f"gate_w2_{i}").T + self.param(f"gate_b2_{i}"))
                beta = e @ self.param(f"bias_w{i}").T + self.param(f"bias_b{i}")
                pre = z * s + beta
                h = _act(pre, self.activation)
                cache["outputs"].append(h)
                cache["gates"].append((z, m, s))
        cache["last"] = h
        out = h @ self.param("w_out").T + self.param("b_out")
        cache["out"] = out
        return (out[0] if single else out), cache

    def forward(self, x, t):
        out, _ = self.forward_cached(x, t)
        return out

    # --------------------------------------------------------------- backward

    def backward_from_cache(self, cache, grad_out):
        """Exact reverse-mode parameter gradient of sum(out * grad_out)."""
        grad_out = np.asarray(grad_out, dtype=float)
        if cache["single"]:
            grad_out = grad_out[None, :]
        grads = np.zeros_like(self.params)

        def gview(name):
            off, shape = self._offsets[name]
            return grads[off:off + int(np.prod(shape))].reshape(shape)

        h_last = cache["last"]
        gview("w_out")[:] = grad_out.T @ h_last
        gview("b_out")[:] = grad_out.sum(axis=0)
        gh = grad_out @ self.param("w_out")

        e = cache["e"]
        for i in reversed(range(self.depth)):
            h_out = cache["outputs"][i]
            h_in = cache["inputs"][i]
            gpre = gh * _act_deriv_from_output(h_out, self.activation)
            if self.arch == "mlp":
                gview(f"w{i}")[:] = gpre.T @ h_in
                gview(f"b{i}")[:] = gpre.sum(axis=0)
                gh = gpre @ self.param(f"w{i}")
            else:
                z, m, s = cache["gates"][i]
                gz = gpre * s
                gs = gpre * z
                ggate_pre = gs * s * (1.0 - s)
                gview(f"w{i}")[:] = gz.T @ h_in
                gview(f"b{i}")[:] = gz.sum(axis=0)
                gview(f"gate_w2_{i}")[:] = ggate_pre.T @ m
                gview(f"gate_b2_{i}")[:] = ggate_pre.sum(axis=0)
                gm = ggate_pre @ self.param(f"gate_w2_{i}")
                ga1 = gm * (1.0 - m * m)
                gview(f"gate_w1_{i}")[:] = ga1.T @ e
                gview(f"gate_b1_{i}")[:] = ga1.sum(axis=0)
                gview(f"bias_w{i}")[:] = gpre.T @ e
                gview(f"bias_b{i}")[:] = gpre.sum(axis=0)
                gh = gz @ self.param(f"w{i}")

        if self.arch == "mlp" and self.depth == 0:
            pass  # gh flows to the concat features; nothing else to do
        return grads

    def backward(self, x, t, grad_out):
        _, cache = self.forward_cached(x, t)
        return self.backward_from_cache(cache, grad_out)

    # -------------------------------------------------------------------- jvp

    def jvp_from_cache(self, cache, v):
        """Directional derivative (d u / d x) v with t fixed (forward mode)."""
        v = np.asarray(v, dtype=float)
        if cache["single"]:
            v = v[None, :]
        v = np.broadcast_to(v, cache["x"].shape).astype(float)
        if self.arch == "mlp":
            th = np.concatenate([v, np.zeros((v.shape[0], TIME_EMBED_DIM))], axis=1)
            for i in range(self.depth):
                tpre = th @ self.param(f"w{i}").T
                th = tpre * _act_deriv_from_output(cache["outputs"][i], self.activation)
        else:
            th = v
            for i in range(self.depth):
                _, _, s = cache["gates"][i]
                tpre = (th @ self.param(f"w{i}").T) * s
                th = tpre * _act_deriv_from_output(cache["outputs"][i], self.activation)
        tout = th @ self.param("w_out").T
        return tout[0] if cache["single"] else tout

    def jvp(self, x, t, v):
        _, cache = self.forward_cached(x, t)
        return self.jvp_from_cache(cache, v)

    # ------------------------------------------------------------- checkpoints

    def header(self):
        return {
            "architecture": self.arch,
            "input_dim": self.input_dim,
            "depth": self.depth,
            "width": self.width,
            "gate_width": self.gate_width,
            "activation": self.activation,
            "seed": self.seed,
            "param_count": self.param_count,
        }

    @classmethod
    def from_header(cls, header, params):
        return cls(
            arch=header["architecture"],
            input_dim=int(header["input_dim"]),
            depth=int(header["depth"]),
            width=int(header["width"]),
            gate_width=int(header.get("gate_width", 64)),
            activation=header.get("activation", "tanh"),
            seed=int(header.get("seed", 0)),
            params=params,
        )


# ------------------------------------------------------------------- optimizer

@dataclass
class AdamWState:
    """Decoupled-weight-decay Adam moments; lazily sized to the parameters."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-5
    step: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)


def adamw_step(state, params, grads):
    """One AdamW update: p <- p - lr * (m_hat/(sqrt(v_hat)+eps) + wd * p).

    Updates params in place and returns (params, state).
    """
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    if state.m.shape != params.shape or grads.shape != params.shape:
        raise DimMismatchError("optimizer state / gradient shape mismatch")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    params -= state.lr * (m_hat / (np.sqrt(v_hat) + state.eps)
                          + state.weight_decay * params)
    return params, state
