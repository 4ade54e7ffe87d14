"""Hybrid CNN+Transformer default-probability model.

A standardized feature row becomes a sequence of per-feature tokens (learned
embedding vector scaled by the feature value, plus a learned per-feature
bias). The hybrid variant runs that sequence through a 1-D conv + max-pool
block (embedding width as input channels), then through transformer encoder
blocks (multi-head self-attention + position-wise feed-forward, residual and
layer-norm gated by a flag), mean-pools over the sequence, and finishes with
an MLP head and a sigmoid. Ablation variants drop the transformer
(``cnn_only``) or the conv block (``transformer_only``).

Forward passes are pure; every intermediate needed by the chain rule is
carried in a ``ForwardTrace`` that ``Model.backward`` consumes exactly once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .errors import ConfigError, ShapeError, StateError
from .tensor_ops import (
    ACTIVATIONS,
    OpCache,
    Parameter,
    as_f64,
    check_finite,
    conv1d,
    conv1d_backward,
    elementwise,
    elementwise_backward,
    layer_norm,
    layer_norm_backward,
    maxpool1d,
    maxpool1d_backward,
    sigmoid,
    softmax_rows,
    softmax_rows_backward,
)

VARIANTS = ("hybrid", "cnn_only", "transformer_only")

PROB_CLAMP = 1e-15  # keeps outputs strictly inside (0, 1)
LN_EPS = 1e-5


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvSpec:
    channels: int = 32
    kernel: int = 3
    stride: int = 1
    pool_window: int = 2
    pool_stride: int = 2


@dataclass(frozen=True)
class AttnSpec:
    n_heads: int = 4
    d_model: int = 32
    n_blocks: int = 2
    layer_norm: bool = True

    @property
    def d_k(self) -> int:
        return self.d_model // self.n_heads


@dataclass(frozen=True)
class ModelConfig:
    n_features: int
    variant: str = "hybrid"
    d_embed: int = 16
    conv: ConvSpec = field(default_factory=ConvSpec)
    attn: AttnSpec = field(default_factory=AttnSpec)
    ffn_dim: int = 64
    mlp_hidden: tuple[int, ...] = (32,)
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mlp_hidden", tuple(self.mlp_hidden))
        self.validate()

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected {VARIANTS}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        dims = {
            "n_features": self.n_features,
            "d_embed": self.d_embed,
            "ffn_dim": self.ffn_dim,
            "conv.channels": self.conv.channels,
            "conv.kernel": self.conv.kernel,
            "conv.stride": self.conv.stride,
            "conv.pool_window": self.conv.pool_window,
            "conv.pool_stride": self.conv.pool_stride,
            "attn.n_heads": self.attn.n_heads,
            "attn.d_model": self.attn.d_model,
            "attn.n_blocks": self.attn.n_blocks,
            **{f"mlp_hidden[{i}]": w for i, w in enumerate(self.mlp_hidden)},
        }
        for name, value in dims.items():
            if int(value) < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")
        if self.attn.d_model % self.attn.n_heads != 0:
            raise ConfigError(
                f"d_model={self.attn.d_model} not divisible by "
                f"n_heads={self.attn.n_heads}"
            )
        if self.uses_conv():
            if self.conv.kernel > self.n_features:
                raise ConfigError(
                    f"conv kernel {self.conv.kernel} exceeds n_features {self.n_features}"
                )
            l1 = conv_out_len(self.n_features, self.conv.kernel, self.conv.stride)
            if self.conv.pool_window > l1:
                raise ConfigError(
                    f"pool window {self.conv.pool_window} exceeds conv output "
                    f"length {l1}"
                )

    def uses_conv(self) -> bool:
        return self.variant in ("hybrid", "cnn_only")

    def uses_transformer(self) -> bool:
        return self.variant in ("hybrid", "transformer_only")

    def sequence_length(self) -> int:
        """Token count entering the post-conv stage."""
        if not self.uses_conv():
            return self.n_features
        l1 = conv_out_len(self.n_features, self.conv.kernel, self.conv.stride)
        return conv_out_len(l1, self.conv.pool_window, self.conv.pool_stride)

    def head_input_width(self) -> int:
        """Width of the pooled vector feeding the MLP head."""
        return self.attn.d_model if self.uses_transformer() else self.conv.channels

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mlp_hidden"] = list(self.mlp_hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if "conv" in d and isinstance(d["conv"], dict):
            d["conv"] = ConvSpec(**d["conv"])
        if "attn" in d and isinstance(d["attn"], dict):
            d["attn"] = AttnSpec(**d["attn"])
        if "mlp_hidden" in d:
            d["mlp_hidden"] = tuple(d["mlp_hidden"])
        return cls(**d)


def conv_out_len(length: int, window: int, stride: int) -> int:
    return (length - window) // stride + 1


# ---------------------------------------------------------------------------
# parameter store
# ---------------------------------------------------------------------------

class ParamStore:
    """Ordered collection of named Parameters."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def add(self, name: str, value: np.ndarray) -> Parameter:
        if name in self._params:
            raise ConfigError(f"duplicate parameter name {name!r}")
        p = Parameter(name=name, value=value)
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def total_parameters(self) -> int:
        return sum(p.size for p in self)

    def zero_grads(self) -> None:
        for p in self:
            p.zero_grad()

    def snapshot(self) -> dict[str, np.ndarray]:
        return {p.name: p.value.copy() for p in self}

    def restore(self, snap: dict[str, np.ndarray]) -> None:
        for p in self:
            p.value[...] = snap[p.name]


def _xavier(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_params(config: ModelConfig, seed: Optional[int] = None) -> ParamStore:
    """Glorot-uniform weights, zero biases, unit layer-norm gains.

    Deterministic: identical (config, seed) pairs produce bit-identical
    stores. Variants only allocate the parameters their forward pass uses.
    """
    config.validate()
    rng = np.random.default_rng(config.seed if seed is None else seed)
    store = ParamStore()
    cv, at = config.conv, config.attn

    store.add("embed.weight",
              _xavier(rng, (config.n_features, config.d_embed), 1, config.d_embed))
    store.add("embed.bias", np.zeros((config.n_features, config.d_embed)))

    if config.uses_conv():
        fan_in = config.d_embed * cv.kernel
        fan_out = cv.channels * cv.kernel
        store.add("conv.weight",
                  _xavier(rng, (cv.channels, config.d_embed, cv.kernel), fan_in, fan_out))
        store.add("conv.bias", np.zeros(cv.channels))

    if config.uses_transformer():
        in_width = cv.channels if config.uses_conv() else config.d_embed
        store.add("proj.weight", _xavier(rng, (in_width, at.d_model), in_width, at.d_model))
        store.add("proj.bias", np.zeros(at.d_model))
        for b in range(at.n_blocks):
            pre = f"block{b}"
            for w in ("wq", "wk", "wv", "wo"):
                store.add(f"{pre}.attn.{w}",
                          _xavier(rng, (at.d_model, at.d_model), at.d_model, at.d_model))
            if at.layer_norm:
                store.add(f"{pre}.ln1.gain", np.ones(at.d_model))
                store.add(f"{pre}.ln1.shift", np.zeros(at.d_model))
            store.add(f"{pre}.ffn.w1",
                      _xavier(rng, (at.d_model, config.ffn_dim), at.d_model, config.ffn_dim))
            store.add(f"{pre}.ffn.b1", np.zeros(config.ffn_dim))
            store.add(f"{pre}.ffn.w2",
                      _xavier(rng, (config.ffn_dim, at.d_model), config.ffn_dim, at.d_model))
            store.add(f"{pre}.ffn.b2", np.zeros(at.d_model))
            if at.layer_norm:
                store.add(f"{pre}.ln2.gain", np.ones(at.d_model))
                store.add(f"{pre}.ln2.shift", np.zeros(at.d_model))

    widths = [config.head_input_width(), *config.mlp_hidden, 1]
    for i, (w_in, w_out) in enumerate(zip(widths[:-1], widths[1:])):
        store.add(f"mlp.{i}.weight", _xavier(rng, (w_in, w_out), w_in, w_out))
        store.add(f"mlp.{i}.bias", np.zeros(w_out))
    return store


# ---------------------------------------------------------------------------
# stateless building blocks
# ---------------------------------------------------------------------------

def tokenize(x: np.ndarray, embed_weight: np.ndarray, embed_bias: np.ndarray):
    """Map feature values to tokens: token_t = x_t * e_t + p_t.

    ``x`` is ``[n_features]`` or ``[B, n_features]``; tokens gain a trailing
    embedding axis.
    """
    x = as_f64(x)
    e, p = as_f64(embed_weight), as_f64(embed_bias)
    if x.shape[-1] != e.shape[0]:
        raise ShapeError(
            f"row has {x.shape[-1]} features but embeddings cover {e.shape[0]}"
        )
    tokens = x[..., :, None] * e + p
    return tokens, OpCache("tokenize", {"x": x, "e": e})


def tokenize_backward(cache: OpCache, g_tokens: np.ndarray):
    """Returns ``(g_x, g_embed_weight, g_embed_bias)``."""
    saved = cache.expect("tokenize")
    x, e = saved["x"], saved["e"]
    g_tokens = as_f64(g_tokens)
    g_x = np.einsum("...td,td->...t", g_tokens, e, optimize=True)
    g_flat = g_tokens.reshape(-1, *e.shape)
    g_e = np.einsum("btd,bt->td", g_flat, x.reshape(-1, e.shape[0]), optimize=True)
    g_p = g_flat.sum(axis=0)
    return g_x, g_e, g_p


def linear(x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray] = None):
    """Affine map over the last axis: ``x @ w + b``."""
    x, w = as_f64(x), as_f64(w)
    if x.shape[-1] != w.shape[0]:
        raise ShapeError(f"linear: input width {x.shape[-1]} != weight rows {w.shape[0]}")
    out = x @ w
    if b is not None:
        out = out + as_f64(b)
    return out, OpCache("linear", {"x": x, "w": w, "has_bias": b is not None})


def linear_backward(cache: OpCache, g_out: np.ndarray):
    """Returns ``(g_x, g_w, g_b)``; ``g_b`` is None for bias-free layers."""
    saved = cache.expect("linear")
    x, w = saved["x"], saved["w"]
    g_out = as_f64(g_out)
    g_x = g_out @ w.T
    g_flat = g_out.reshape(-1, w.shape[1])
    g_w = x.reshape(-1, w.shape[0]).T @ g_flat
    g_b = g_flat.sum(axis=0) if saved["has_bias"] else None
    return g_x, g_w, g_b


def attention(q: np.ndarray, k: np.ndarray, v: np.ndarray):
    """Scaled dot-product attention: softmax(q k^T / sqrt(d_k)) v.

    Core shapes ``q,k: [..., s, d_k]`` and ``v: [..., s, d_v]``.
    """
    q, k, v = as_f64(q), as_f64(k), as_f64(v)
    if q.shape != k.shape or q.shape[:-1] != v.shape[:-1]:
        raise ShapeError(
            f"attention shapes disagree: q{q.shape} k{k.shape} v{v.shape}"
        )
    d_k = q.shape[-1]
    if d_k < 1:
        raise ShapeError("attention requires d_k >= 1")
    scale = 1.0 / np.sqrt(d_k)
    logits = (q @ np.swapaxes(k, -1, -2)) * scale
    weights = softmax_rows(logits)
    out = weights @ v
    cache = OpCache("attention",
                    {"q": q, "k": k, "v": v, "weights": weights, "scale": scale})
    return out, cache


def attention_backward(cache: OpCache, g_out: np.ndarray):
    """Returns ``(g_q, g_k, g_v)``."""
    saved = cache.expect("attention")
    q, k, v, weights, scale = (saved["q"], saved["k"], saved["v"],
                               saved["weights"], saved["scale"])
    g_out = as_f64(g_out)
    g_v = np.swapaxes(weights, -1, -2) @ g_out
    g_weights = g_out @ np.swapaxes(v, -1, -2)
    g_logits = softmax_rows_backward(weights, g_weights)
    g_q = (g_logits @ k) * scale
    g_k = (np.swapaxes(g_logits, -1, -2) @ q) * scale
    return g_q, g_k, g_v


def _split_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    # [..., s, d_model] -> [..., h, s, d_k]
    s, d_model = x.shape[-2], x.shape[-1]
    d_k = d_model // n_heads
    x = x.reshape(*x.shape[:-1], n_heads, d_k)
    return np.swapaxes(x, -2, -3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    # [..., h, s, d_k] -> [..., s, h*d_k]
    x = np.swapaxes(x, -2, -3)
    return x.reshape(*x.shape[:-2], -1)


def multi_head_attention(tokens: np.ndarray, wq, wk, wv, wo, n_heads: int):
    """Self-attention with ``n_heads`` parallel heads, concatenated and
    recombined by the output projection ``wo``. Projections are bias-free."""
    tokens = as_f64(tokens)
    d_model = tokens.shape[-1]
    if d_model % n_heads != 0:
        raise ConfigError(f"d_model={d_model} not divisible by n_heads={n_heads}")
    q, q_cache = linear(tokens, wq)
    k, k_cache = linear(tokens, wk)
    v, v_cache = linear(tokens, wv)
    att_out, att_cache = attention(
        _split_heads(q, n_heads), _split_heads(k, n_heads), _split_heads(v, n_heads)
    )
    concat = _merge_heads(att_out)
    out, o_cache = linear(concat, wo)
    cache = OpCache("multi_head", {
        "q_cache": q_cache, "k_cache": k_cache, "v_cache": v_cache,
        "att_cache": att_cache, "o_cache": o_cache, "n_heads": n_heads,
    })
    return out, cache


def multi_head_attention_backward(cache: OpCache, g_out: np.ndarray):
    """Returns ``(g_tokens, g_wq, g_wk, g_wv, g_wo)``."""
    saved = cache.expect("multi_head")
    n_heads = saved["n_heads"]
    g_concat, g_wo, _ = linear_backward(saved["o_cache"], g_out)
    g_att = _split_heads(g_concat, n_heads)
    g_q_h, g_k_h, g_v_h = attention_backward(saved["att_cache"], g_att)
    g_tokens_q, g_wq, _ = linear_backward(saved["q_cache"], _merge_heads(g_q_h))
    g_tokens_k, g_wk, _ = linear_backward(saved["k_cache"], _merge_heads(g_k_h))
    g_tokens_v, g_wv, _ = linear_backward(saved["v_cache"], _merge_heads(g_v_h))
    g_tokens = g_tokens_q + g_tokens_k + g_tokens_v
    return g_tokens, g_wq, g_wk, g_wv, g_wo


_BLOCK_WEIGHTS = ("attn.wq", "attn.wk", "attn.wv", "attn.wo",
                  "ln1.gain", "ln1.shift",
                  "ffn.w1", "ffn.b1", "ffn.w2", "ffn.b2",
                  "ln2.gain", "ln2.shift")


def transformer_block(tokens: np.ndarray, weights: dict, n_heads: int,
                      use_layer_norm: bool, activation: str = "relu"):
    """One encoder block: multi-head self-attention then a position-wise
    feed-forward net. With ``use_layer_norm`` both sublayers are wrapped as
    residual + layer-norm; without it the sublayers chain bare."""
    mha, mha_cache = multi_head_attention(
        tokens, weights["attn.wq"], weights["attn.wk"], weights["attn.wv"],
        weights["attn.wo"], n_heads)
    if use_layer_norm:
        h1, ln1_cache = layer_norm(tokens + mha, weights["ln1.gain"],
                                   weights["ln1.shift"], LN_EPS)
    else:
        h1, ln1_cache = mha, None
    f1, f1_cache = linear(h1, weights["ffn.w1"], weights["ffn.b1"])
    a1, act_cache = elementwise(activation, f1)
    f2, f2_cache = linear(a1, weights["ffn.w2"], weights["ffn.b2"])
    if use_layer_norm:
        out, ln2_cache = layer_norm(h1 + f2, weights["ln2.gain"],
                                    weights["ln2.shift"], LN_EPS)
    else:
        out, ln2_cache = f2, None
    cache = OpCache("transformer_block", {
        "mha_cache": mha_cache, "ln1_cache": ln1_cache, "f1_cache": f1_cache,
        "act_cache": act_cache, "f2_cache": f2_cache, "ln2_cache": ln2_cache,
        "use_layer_norm": use_layer_norm, "h1": h1,
    })
    return out, cache


def transformer_block_backward(cache: OpCache, g_out: np.ndarray):
    """Returns ``(g_tokens, grads)`` with ``grads`` keyed like the weights dict."""
    saved = cache.expect("transformer_block")
    use_ln = saved["use_layer_norm"]
    grads: dict[str, np.ndarray] = {}

    if use_ln:
        g_sum2, grads["ln2.gain"], grads["ln2.shift"] = layer_norm_backward(
            saved["ln2_cache"], g_out)
        g_h1_res, g_f2 = g_sum2, g_sum2
    else:
        g_h1_res, g_f2 = 0.0, g_out

    g_a1, grads["ffn.w2"], grads["ffn.b2"] = linear_backward(saved["f2_cache"], g_f2)
    g_f1 = elementwise_backward(saved["act_cache"], g_a1)
    g_h1_ffn, grads["ffn.w1"], grads["ffn.b1"] = linear_backward(saved["f1_cache"], g_f1)
    g_h1 = g_h1_res + g_h1_ffn

    if use_ln:
        g_sum1, grads["ln1.gain"], grads["ln1.shift"] = layer_norm_backward(
            saved["ln1_cache"], g_h1)
        g_tokens_res, g_mha = g_sum1, g_sum1
    else:
        g_tokens_res, g_mha = 0.0, g_h1

    (g_tokens_att, grads["attn.wq"], grads["attn.wk"],
     grads["attn.wv"], grads["attn.wo"]) = multi_head_attention_backward(
        saved["mha_cache"], g_mha)
    g_tokens = g_tokens_res + g_tokens_att
    return g_tokens, grads


# ---------------------------------------------------------------------------
# full model
# ---------------------------------------------------------------------------

@dataclass
class ForwardTrace:
    """Per-layer caches from one forward pass; consumed at most once."""

    probs: np.ndarray
    z: np.ndarray
    caches: dict
    batch_shape: tuple
    used: bool = False


class Model:
    """Config + parameters + the forward/backward pair for all variants."""

    def __init__(self, config: ModelConfig, params: Optional[ParamStore] = None):
        config.validate()
        self.config = config
        self.params = params if params is not None else init_params(config)

    # -- helpers ----------------------------------------------------------

    def _w(self, name: str) -> np.ndarray:
        return self.params[name].value

    def _block_weights(self, b: int) -> dict:
        pre = f"block{b}"
        return {key: self._w(f"{pre}.{key}") for key in _BLOCK_WEIGHTS
                if f"{pre}.{key}" in self.params}

    # -- forward ----------------------------------------------------------

    def forward(self, batch: np.ndarray):
        """Default probabilities for a ``[B, n_features]`` batch.

        Returns ``(probs, trace)`` where ``probs`` is ``[B]`` with every
        value strictly inside (0, 1).
        """
        cfg = self.config
        batch = as_f64(batch)
        if batch.ndim != 2:
            raise ShapeError(f"batch must be 2-D [B, n_features], got {batch.shape}")
        if batch.shape[1] != cfg.n_features:
            raise ShapeError(
                f"batch has {batch.shape[1]} features, model expects {cfg.n_features}"
            )
        caches: dict = {}

        tokens, caches["tokenize"] = tokenize(
            batch, self._w("embed.weight"), self._w("embed.bias"))

        if cfg.uses_conv():
            x_c = np.swapaxes(tokens, -1, -2)  # [B, d_embed, n_features]
            z1, caches["conv"] = conv1d(
                x_c, self._w("conv.weight"), self._w("conv.bias"), cfg.conv.stride)
            p1, caches["pool"] = maxpool1d(z1, cfg.conv.pool_window, cfg.conv.pool_stride)
            seq = np.swapaxes(p1, -1, -2)  # [B, L2, channels]
        else:
            seq = tokens

        if cfg.uses_transformer():
            seq, caches["proj"] = linear(seq, self._w("proj.weight"), self._w("proj.bias"))
            block_caches = []
            for b in range(cfg.attn.n_blocks):
                seq, c = transformer_block(
                    seq, self._block_weights(b), cfg.attn.n_heads,
                    cfg.attn.layer_norm, cfg.activation)
                block_caches.append(c)
            caches["blocks"] = block_caches

        pooled = np.mean(seq, axis=-2)  # [B, width]
        caches["seq_len"] = seq.shape[-2]

        h = pooled
        mlp_caches = []
        n_layers = len(cfg.mlp_hidden) + 1
        for i in range(n_layers):
            h, lin_cache = linear(h, self._w(f"mlp.{i}.weight"), self._w(f"mlp.{i}.bias"))
            if i < n_layers - 1:
                h, act_cache = elementwise(cfg.activation, h)
            else:
                act_cache = None
            mlp_caches.append((lin_cache, act_cache))
        caches["mlp"] = mlp_caches

        z = h[..., 0]
        probs = np.clip(sigmoid(z), PROB_CLAMP, 1.0 - PROB_CLAMP)
        check_finite(probs, "model probabilities")
        return probs, ForwardTrace(probs=probs, z=z, caches=caches,
                                   batch_shape=batch.shape)

    # -- backward ---------------------------------------------------------

    def backward(self, trace: ForwardTrace, grad_probs: np.ndarray,
                 want_input_grad: bool = False):
        """Accumulate d(loss)/d(param) into every parameter's grad.

        ``grad_probs`` is d(loss)/d(probs), shape ``[B]``. Call
        ``params.zero_grads()`` first unless accumulation across batches is
        intended. Returns d(loss)/d(batch) when ``want_input_grad``.
        """
        if trace.used:
            raise StateError("ForwardTrace already consumed by a backward pass")
        trace.used = True
        cfg = self.config
        caches = trace.caches
        grad_probs = as_f64(grad_probs)
        if grad_probs.shape != trace.probs.shape:
            raise ShapeError(
                f"grad_probs shape {grad_probs.shape} != probs shape {trace.probs.shape}"
            )

        def acc(name: str, g) -> None:
            self.params[name].grad += g

        # sigmoid head (clamp is flat outside the open interval, but the
        # clamp bounds are unreachable for any finite logit that matters)
        g_z = grad_probs * trace.probs * (1.0 - trace.probs)
        g_h = g_z[..., None]

        n_layers = len(cfg.mlp_hidden) + 1
        for i in reversed(range(n_layers)):
            lin_cache, act_cache = caches["mlp"][i]
            if act_cache is not None:
                g_h = elementwise_backward(act_cache, g_h)
            g_h, g_w, g_b = linear_backward(lin_cache, g_h)
            acc(f"mlp.{i}.weight", g_w)
            acc(f"mlp.{i}.bias", g_b)

        s = caches["seq_len"]
        g_seq = np.repeat(g_h[..., None, :], s, axis=-2) / s

        if cfg.uses_transformer():
            for b in reversed(range(cfg.attn.n_blocks)):
                g_seq, grads = transformer_block_backward(caches["blocks"][b], g_seq)
                for key, g in grads.items():
                    acc(f"block{b}.{key}", g)
            g_seq, g_w, g_b = linear_backward(caches["proj"], g_seq)
            acc("proj.weight", g_w)
            acc("proj.bias", g_b)

        if cfg.uses_conv():
            g_p1 = np.swapaxes(g_seq, -1, -2)
            g_z1 = maxpool1d_backward(caches["pool"], g_p1)
            g_xc, g_w, g_b = conv1d_backward(caches["conv"], g_z1)
            acc("conv.weight", g_w)
            acc("conv.bias", g_b)
            g_tokens = np.swapaxes(g_xc, -1, -2)
        else:
            g_tokens = g_seq

        g_x, g_e, g_p = tokenize_backward(caches["tokenize"], g_tokens)
        acc("embed.weight", g_e)
        acc("embed.bias", g_p)
        return g_x if want_input_grad else None


# ---------------------------------------------------------------------------
# checkpoints: JSON header line + little-endian float64 payload
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = "creditnet-checkpoint"


def save_checkpoint(path, model: Model, preprocess: Optional[dict] = None,
                    extra: Optional[dict] = None) -> None:
    """Write config + parameter manifest as one JSON line, then all parameter
    values as raw little-endian float64 in manifest order."""
    header = {
        "format": CHECKPOINT_MAGIC,
        "version": 1,
        "config": model.config.to_dict(),
        "params": [{"name": p.name, "shape": list(p.value.shape)} for p in model.params],
        "preprocess": preprocess,
        "extra": extra or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for p in model.params:
            fh.write(np.ascontiguousarray(p.value, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[Model, dict]:
    """Read a checkpoint back into a Model; returns ``(model, header)``."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"not a checkpoint file: {path}") from exc
        if header.get("format") != CHECKPOINT_MAGIC:
            raise ConfigError(f"unrecognized checkpoint format in {path}")
        config = ModelConfig.from_dict(header["config"])
        store = ParamStore()
        for entry in header["params"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise ConfigError(f"truncated checkpoint payload in {path}")
            value = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
            store.add(entry["name"], value)
    return Model(config, store), header
