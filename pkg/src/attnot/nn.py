"""Transformer encoder and MLP heads in plain numpy with hand-written gradients.

The classifier applies a stack of encoder blocks to every ``(t, p)``
instance. By default each sublayer output is normalised before it is added
back to its input

    y = x + LayerNorm(Dropout(MultiHead(x)))
    z = y + LayerNorm(Dropout(FF(y)))

which keeps the encoder output in the input's feature space, displaced by a
bounded amount. ``TrainConfig.norm`` also offers the post-norm ordering
``y = LayerNorm(x + MultiHead(x))`` and pre-norm ``y = x + MultiHead(LayerNorm(x))``.
With only two features post-norm collapses every point onto the line
``scale * (+-1, -+1) + shift``, which leaves almost no gradient for the
attention weights.

A per-point MLP head ending in a softmax over K classes follows the
encoder. The encoder output keeps the input shape, so it can be read
as a remapped copy of the input cloud in feature space; training records that
remapping after every epoch.

Parameters live in a flat ``name -> ndarray`` dict. Names under ``enc{b}.``
belong to encoder block ``b`` and names under ``mlp.`` to the head.
"""

from __future__ import annotations

import io
import json
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import DimensionMismatchError, DivergenceError, ParameterError

__all__ = [
    "AttentionParams",
    "TrainConfig",
    "TrainingTrace",
    "MLP",
    "TransformerClassifier",
    "Adam",
    "attention_forward",
    "encoder_forward",
    "cross_entropy",
    "train_full_batch",
    "freeze_mlp",
    "parameter_count",
    "fit_regressor",
    "save_checkpoint",
    "load_checkpoint",
]

LN_EPS = 1e-5
PROB_FLOOR = 1e-12


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def softmax(z, axis=-1):
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _as_float(x):
    """Array view of ``x``; floating input keeps its precision, anything else becomes float64."""
    x = np.asarray(x)
    return x if np.issubdtype(x.dtype, np.floating) else x.astype(float)


def _dropout_mask(rng, shape, rate):
    if rate <= 0.0 or rng is None:
        return None
    keep = 1.0 - rate
    return (rng.random(shape) < keep) / keep


def _layer_norm(x, scale, shift):
    mu = x.mean(-1, keepdims=True)
    var = x.var(-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv
    return xhat * scale + shift, (xhat, inv)


def _layer_norm_backward(dy, scale, cache):
    xhat, inv = cache
    axes = tuple(range(dy.ndim - 1))
    dscale = (dy * xhat).sum(axes)
    dshift = dy.sum(axes)
    dxhat = dy * scale
    dx = inv * (dxhat - dxhat.mean(-1, keepdims=True) - xhat * (dxhat * xhat).mean(-1, keepdims=True))
    return dx, dscale, dshift


# ---------------------------------------------------------------------------
# attention
# ---------------------------------------------------------------------------


@dataclass
class AttentionParams:
    """Multi-head projections. ``wq/wk/wv`` are (h, p, d), ``wo`` is (h*d, p)."""

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray

    def __post_init__(self):
        h, p, d = np.shape(self.wq)
        for name in ("wk", "wv"):
            if np.shape(getattr(self, name)) != (h, p, d):
                raise DimensionMismatchError(f"{name} has shape {np.shape(getattr(self, name))}, expected {(h, p, d)}")
        if np.shape(self.wo) != (h * d, p):
            raise DimensionMismatchError(f"wo has shape {np.shape(self.wo)}, expected {(h * d, p)}")

    @property
    def heads(self):
        return self.wq.shape[0]

    @property
    def head_dim(self):
        return self.wq.shape[2]

    @property
    def features(self):
        return self.wq.shape[1]

    @classmethod
    def init(cls, rng, p, heads, head_dim):
        return cls(
            glorot_uniform(rng, (heads, p, head_dim), p, head_dim),
            glorot_uniform(rng, (heads, p, head_dim), p, head_dim),
            glorot_uniform(rng, (heads, p, head_dim), p, head_dim),
            glorot_uniform(rng, (heads * head_dim, p), heads * head_dim, p),
        )


def _attention_fwd(x, wq, wk, wv, wo):
    # x: (n, t, p) -> out (n, t, p); scores (n, h, t, t)
    n, t, _ = x.shape
    h, _, d = wq.shape
    xb = x[:, None]
    q = xb @ wq
    k = xb @ wk
    v = xb @ wv
    scores = softmax((q @ k.swapaxes(-1, -2)) / np.sqrt(d))
    o = scores @ v
    concat = o.transpose(0, 2, 1, 3).reshape(n, t, h * d)
    out = concat @ wo
    return out, (x, q, k, v, scores, concat)


def _attention_bwd(dout, wq, wk, wv, wo, cache):
    x, q, k, v, scores, concat = cache
    n, t, p = x.shape
    h, _, d = wq.shape
    dwo = concat.reshape(-1, h * d).T @ dout.reshape(-1, p)
    dconcat = dout @ wo.T
    do = dconcat.reshape(n, t, h, d).transpose(0, 2, 1, 3)
    dscores = do @ v.swapaxes(-1, -2)
    dv = scores.swapaxes(-1, -2) @ do
    ds = scores * (dscores - (dscores * scores).sum(-1, keepdims=True))
    ds /= np.sqrt(d)
    dq = ds @ k
    dk = ds.swapaxes(-1, -2) @ q
    dwq = np.einsum("ntp,nhtd->hpd", x, dq, optimize=True)
    dwk = np.einsum("ntp,nhtd->hpd", x, dk, optimize=True)
    dwv = np.einsum("ntp,nhtd->hpd", x, dv, optimize=True)
    dx = (dq @ wq.swapaxes(-1, -2) + dk @ wk.swapaxes(-1, -2) + dv @ wv.swapaxes(-1, -2)).sum(1)
    return dx, dwq, dwk, dwv, dwo


def attention_forward(x, params, dropout=0.0, rng=None):
    """Multi-head self-attention on a (t, p) matrix or an (n, t, p) stack.

    Returns the projected output (same shape as ``x``) and the per-head
    row-stochastic score matrices, (h, t, t) or (n, h, t, t). Dropout on the
    output is applied only when ``rng`` is given.
    """
    x = _as_float(x)
    single = x.ndim == 2
    xs = x[None] if single else x
    if xs.ndim != 3 or xs.shape[-1] != params.features:
        raise DimensionMismatchError(f"input of shape {x.shape} does not match {params.features} features")
    out, cache = _attention_fwd(xs, params.wq, params.wk, params.wv, params.wo)
    mask = _dropout_mask(rng, out.shape, dropout)
    if mask is not None:
        out = out * mask
    scores = cache[4]
    return (out[0], scores[0]) if single else (out, scores)


# ---------------------------------------------------------------------------
# encoder
# ---------------------------------------------------------------------------


def _block_names(b):
    pre = f"enc{b}."
    return {
        "wq": pre + "attn.wq",
        "wk": pre + "attn.wk",
        "wv": pre + "attn.wv",
        "wo": pre + "attn.wo",
        "ln1_scale": pre + "ln1.scale",
        "ln1_shift": pre + "ln1.shift",
        "w1": pre + "ff.w1",
        "b1": pre + "ff.b1",
        "w2": pre + "ff.w2",
        "b2": pre + "ff.b2",
        "ln2_scale": pre + "ln2.scale",
        "ln2_shift": pre + "ln2.shift",
    }


def init_encoder_block(rng, p, heads, head_dim, ff_dim, b=0, residual_init="glorot"):
    names = _block_names(b)
    attn = AttentionParams.init(rng, p, heads, head_dim)
    block = {
        names["wq"]: attn.wq,
        names["wk"]: attn.wk,
        names["wv"]: attn.wv,
        names["wo"]: attn.wo,
        names["ln1_scale"]: np.ones(p),
        names["ln1_shift"]: np.zeros(p),
        names["w1"]: glorot_uniform(rng, (p, ff_dim), p, ff_dim),
        names["b1"]: np.zeros(ff_dim),
        names["w2"]: glorot_uniform(rng, (ff_dim, p), ff_dim, p),
        names["b2"]: np.zeros(p),
        names["ln2_scale"]: np.ones(p),
        names["ln2_shift"]: np.zeros(p),
    }
    if residual_init == "zero":
        # residual branches start silent: the block is the identity map at init
        block[names["wo"]] = np.zeros_like(block[names["wo"]])
        block[names["w2"]] = np.zeros_like(block[names["w2"]])
    return block


def _feed_forward(y, P, names):
    hid = y @ P[names["w1"]] + P[names["b1"]]
    act = np.maximum(hid, 0.0)
    return act @ P[names["w2"]] + P[names["b2"]], (y, hid, act)


def _feed_forward_bwd(dff, P, names, cache, grads):
    y, hid, act = cache
    p = y.shape[-1]
    grads[names["w2"]] = act.reshape(-1, act.shape[-1]).T @ dff.reshape(-1, p)
    grads[names["b2"]] = dff.reshape(-1, p).sum(0)
    dhid = (dff @ P[names["w2"]].T) * (hid > 0)
    grads[names["w1"]] = y.reshape(-1, p).T @ dhid.reshape(-1, dhid.shape[-1])
    grads[names["b1"]] = dhid.reshape(-1, dhid.shape[-1]).sum(0)
    return dhid @ P[names["w1"]].T


def _block_fwd(x, P, names, sa_dropout, rng, norm="post"):
    """One encoder block.

    ``norm="post"``: y = LN(x + MHA(x)), z = LN(y + FF(y)).
    ``norm="pre"``:  y = x + MHA(LN(x)), z = y + FF(LN(y)).
    ``norm="branch"``: y = x + LN(MHA(x)), z = y + LN(FF(y)).
    """
    attn_w = (P[names["wq"]], P[names["wk"]], P[names["wv"]], P[names["wo"]])
    ln1 = (P[names["ln1_scale"]], P[names["ln1_shift"]])
    ln2 = (P[names["ln2_scale"]], P[names["ln2_shift"]])
    if norm == "post":
        attn_out, attn_cache = _attention_fwd(x, *attn_w)
        m1 = _dropout_mask(rng, attn_out.shape, sa_dropout)
        if m1 is not None:
            attn_out = attn_out * m1
        y, ln1_cache = _layer_norm(x + attn_out, *ln1)
        ff, ff_cache = _feed_forward(y, P, names)
        m2 = _dropout_mask(rng, ff.shape, sa_dropout)
        if m2 is not None:
            ff = ff * m2
        z, ln2_cache = _layer_norm(y + ff, *ln2)
    elif norm == "branch":
        attn_out, attn_cache = _attention_fwd(x, *attn_w)
        m1 = _dropout_mask(rng, attn_out.shape, sa_dropout)
        if m1 is not None:
            attn_out = attn_out * m1
        a, ln1_cache = _layer_norm(attn_out, *ln1)
        y = x + a
        ff, ff_cache = _feed_forward(y, P, names)
        m2 = _dropout_mask(rng, ff.shape, sa_dropout)
        if m2 is not None:
            ff = ff * m2
        b, ln2_cache = _layer_norm(ff, *ln2)
        z = y + b
    else:
        a, ln1_cache = _layer_norm(x, *ln1)
        attn_out, attn_cache = _attention_fwd(a, *attn_w)
        m1 = _dropout_mask(rng, attn_out.shape, sa_dropout)
        if m1 is not None:
            attn_out = attn_out * m1
        y = x + attn_out
        b, ln2_cache = _layer_norm(y, *ln2)
        ff, ff_cache = _feed_forward(b, P, names)
        m2 = _dropout_mask(rng, ff.shape, sa_dropout)
        if m2 is not None:
            ff = ff * m2
        z = y + ff
    return z, (norm, attn_cache, m1, ln1_cache, ff_cache, m2, ln2_cache)


def _block_bwd(dz, P, names, cache, grads):
    norm, attn_cache, m1, ln1_cache, ff_cache, m2, ln2_cache = cache
    attn_w = (P[names["wq"]], P[names["wk"]], P[names["wv"]], P[names["wo"]])
    if norm == "post":
        dsum2, grads[names["ln2_scale"]], grads[names["ln2_shift"]] = _layer_norm_backward(
            dz, P[names["ln2_scale"]], ln2_cache
        )
        dff = dsum2 if m2 is None else dsum2 * m2
        dy = dsum2 + _feed_forward_bwd(dff, P, names, ff_cache, grads)
        dsum1, grads[names["ln1_scale"]], grads[names["ln1_shift"]] = _layer_norm_backward(
            dy, P[names["ln1_scale"]], ln1_cache
        )
        dattn = dsum1 if m1 is None else dsum1 * m1
        dx_attn, grads[names["wq"]], grads[names["wk"]], grads[names["wv"]], grads[names["wo"]] = _attention_bwd(
            dattn, *attn_w, attn_cache
        )
        return dsum1 + dx_attn
    if norm == "branch":
        dff, grads[names["ln2_scale"]], grads[names["ln2_shift"]] = _layer_norm_backward(
            dz, P[names["ln2_scale"]], ln2_cache
        )
        if m2 is not None:
            dff = dff * m2
        dy = dz + _feed_forward_bwd(dff, P, names, ff_cache, grads)
        dattn, grads[names["ln1_scale"]], grads[names["ln1_shift"]] = _layer_norm_backward(
            dy, P[names["ln1_scale"]], ln1_cache
        )
        if m1 is not None:
            dattn = dattn * m1
        dx_attn, grads[names["wq"]], grads[names["wk"]], grads[names["wv"]], grads[names["wo"]] = _attention_bwd(
            dattn, *attn_w, attn_cache
        )
        return dy + dx_attn
    dff = dz if m2 is None else dz * m2
    db = _feed_forward_bwd(dff, P, names, ff_cache, grads)
    dln2, grads[names["ln2_scale"]], grads[names["ln2_shift"]] = _layer_norm_backward(
        db, P[names["ln2_scale"]], ln2_cache
    )
    dy = dz + dln2
    dattn = dy if m1 is None else dy * m1
    da, grads[names["wq"]], grads[names["wk"]], grads[names["wv"]], grads[names["wo"]] = _attention_bwd(
        dattn, *attn_w, attn_cache
    )
    dln1, grads[names["ln1_scale"]], grads[names["ln1_shift"]] = _layer_norm_backward(
        da, P[names["ln1_scale"]], ln1_cache
    )
    return dy + dln1


def encoder_forward(x, params, n_blocks=None, sa_dropout=0.0, rng=None, norm="branch"):
    """Run the encoder stack on a (t, p) matrix or (n, t, p) stack.

    ``params`` is a flat parameter dict holding ``enc0.``, ``enc1.``, ...
    blocks. Output has the input's shape.
    """
    x = _as_float(x)
    single = x.ndim == 2
    z = x[None] if single else x
    if n_blocks is None:
        n_blocks = _count_blocks(params)
    for b in range(n_blocks):
        names = _block_names(b)
        if params[names["ln1_scale"]].shape[0] != z.shape[-1]:
            raise DimensionMismatchError(f"input has {z.shape[-1]} features, block {b} expects {params[names['ln1_scale']].shape[0]}")
        z, _ = _block_fwd(z, params, names, sa_dropout, rng, norm)
    return z[0] if single else z


def _count_blocks(params):
    b = 0
    while f"enc{b}.attn.wq" in params:
        b += 1
    return b


# ---------------------------------------------------------------------------
# MLP
# ---------------------------------------------------------------------------


class MLP:
    """Dense ReLU network acting on the last axis, with inverted dropout after each hidden layer.

    ``output="softmax"`` gives class probabilities, ``output=None`` a linear
    regression output.
    """

    def __init__(self, in_dim, units, out_dim, dropout=0.0, output="softmax", prefix="mlp."):
        self.in_dim = int(in_dim)
        self.units = tuple(int(u) for u in units)
        self.out_dim = int(out_dim)
        self.dropout = float(dropout)
        self.output = output
        self.prefix = prefix

    @property
    def widths(self):
        return (self.in_dim, *self.units, self.out_dim)

    def names(self):
        out = []
        for j in range(len(self.widths) - 1):
            out += [f"{self.prefix}w{j}", f"{self.prefix}b{j}"]
        return out

    def init(self, rng):
        P = {}
        w = self.widths
        for j in range(len(w) - 1):
            P[f"{self.prefix}w{j}"] = glorot_uniform(rng, (w[j], w[j + 1]), w[j], w[j + 1])
            P[f"{self.prefix}b{j}"] = np.zeros(w[j + 1])
        return P

    def forward(self, P, x, rng=None):
        caches = []
        a = x
        last = len(self.widths) - 2
        for j in range(last + 1):
            h = a @ P[f"{self.prefix}w{j}"] + P[f"{self.prefix}b{j}"]
            if j < last:
                act = np.maximum(h, 0.0)
                mask = _dropout_mask(rng, act.shape, self.dropout)
                if mask is not None:
                    act = act * mask
                caches.append((a, h, mask))
                a = act
            else:
                caches.append((a, h, None))
                a = softmax(h) if self.output == "softmax" else h
        return a, caches

    def backward(self, P, dout, caches, grads):
        """Backprop ``dout`` (gradient w.r.t. pre-softmax logits for softmax heads)."""
        d = dout
        for j in range(len(caches) - 1, -1, -1):
            a_in, h, mask = caches[j]
            if j < len(caches) - 1:
                if mask is not None:
                    d = d * mask
                d = d * (h > 0)
            grads[f"{self.prefix}w{j}"] = a_in.reshape(-1, a_in.shape[-1]).T @ d.reshape(-1, d.shape[-1])
            grads[f"{self.prefix}b{j}"] = d.reshape(-1, d.shape[-1]).sum(0)
            d = d @ P[f"{self.prefix}w{j}"].T
        return d


# ---------------------------------------------------------------------------
# configuration and classifier
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    """Hyperparameters of the transformer classifier (names follow the parameter tables)."""

    epochs: int = 200
    blocks: int = 1
    heads: int = 10
    head_dim: int = 16
    ff_dim: int = 32
    mlp_units: tuple = (8,)
    sa_dropout: float = 0.1
    mlp_dropout: float = 0.4
    learning_rate: float = 0.01
    seed: int = 0
    optimizer: str = "adam"
    batch_size: int = 0
    norm: str = "branch"
    residual_init: str = "glorot"

    def __post_init__(self):
        self.mlp_units = tuple(int(u) for u in np.atleast_1d(self.mlp_units))
        for name in ("epochs", "blocks", "heads", "head_dim", "ff_dim"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} must be positive")
        if any(u < 1 for u in self.mlp_units):
            raise ParameterError("mlp_units must be positive")
        for name in ("sa_dropout", "mlp_dropout"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ParameterError(f"{name} must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ParameterError("learning_rate must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ParameterError(f"unknown optimizer {self.optimizer!r}")
        if self.norm not in ("post", "pre", "branch"):
            raise ParameterError(f"norm must be 'post', 'pre' or 'branch', got {self.norm!r}")
        if self.residual_init not in ("glorot", "zero"):
            raise ParameterError(f"residual_init must be 'glorot' or 'zero', got {self.residual_init!r}")
        if self.batch_size < 0:
            raise ParameterError("batch_size must be >= 0 (0 = full batch)")

    def to_dict(self):
        d = asdict(self)
        d["mlp_units"] = list(self.mlp_units)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown training parameters: {sorted(unknown)}")
        return cls(**d)


class TransformerClassifier:
    """Encoder stack followed by a per-point softmax MLP head."""

    def __init__(self, n_features, n_classes, config, params=None):
        self.p = int(n_features)
        self.k = int(n_classes)
        self.config = config
        self.head = MLP(self.p, config.mlp_units, self.k, config.mlp_dropout, "softmax", "mlp.")
        if params is None:
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([config.seed, 0])))
            params = {}
            for b in range(config.blocks):
                params.update(
                    init_encoder_block(rng, self.p, config.heads, config.head_dim, config.ff_dim, b, config.residual_init)
                )
            params.update(self.head.init(rng))
        self.params = params

    def copy(self):
        return TransformerClassifier(self.p, self.k, self.config, {k: v.copy() for k, v in self.params.items()})

    def attention(self, b=0):
        names = _block_names(b)
        P = self.params
        return AttentionParams(P[names["wq"]], P[names["wk"]], P[names["wv"]], P[names["wo"]])

    def _check(self, x):
        x = _as_float(x)
        if x.ndim != 3 or x.shape[-1] != self.p:
            raise DimensionMismatchError(f"expected (n, t, {self.p}) input, got {x.shape}", x.shape, self.p)
        return x

    def forward(self, x, rng=None):
        """Return ``(probs (n,t,K), projections (n,t,p), cache)``; dropout is on iff ``rng`` is given."""
        x = self._check(x)
        z = x
        blocks = []
        for b in range(self.config.blocks):
            names = _block_names(b)
            z, cache = _block_fwd(z, self.params, names, self.config.sa_dropout, rng, self.config.norm)
            blocks.append(cache)
        probs, head_cache = self.head.forward(self.params, z, rng)
        return probs, z, (blocks, head_cache)

    def predict_proba(self, x):
        probs, proj, _ = self.forward(x)
        return probs, proj

    def scores(self, x):
        """Per-block, per-head attention score matrices in inference mode."""
        x = self._check(x)
        out = []
        z = x
        for b in range(self.config.blocks):
            names = _block_names(b)
            z, cache = _block_fwd(z, self.params, names, 0.0, None, self.config.norm)
            out.append(cache[1][4])
        return out

    def loss_and_grad(self, x, labels, rng=None):
        """Mean point-wise cross-entropy and its gradient for every parameter."""
        x = self._check(x)
        labels = np.asarray(labels)
        probs, _, (blocks, head_cache) = self.forward(x, rng)
        n, t, _ = x.shape
        y = np.broadcast_to(labels.reshape(n, -1), (n, t))
        loss, dlogits = cross_entropy(probs, y)
        grads = {}
        dz = self.head.backward(self.params, dlogits, head_cache, grads)
        for b in range(self.config.blocks - 1, -1, -1):
            dz = _block_bwd(dz, self.params, _block_names(b), blocks[b], grads)
        return loss, grads


def cross_entropy(probs, y):
    """Mean cross-entropy over points and its gradient w.r.t. the softmax logits."""
    k = probs.shape[-1]
    flat = probs.reshape(-1, k)
    yy = np.asarray(y).reshape(-1)
    if yy.size and (yy.min() < 0 or yy.max() >= k):
        raise ParameterError(f"labels must lie in [0, {k})")
    n = flat.shape[0]
    p_true = flat[np.arange(n), yy]
    loss = -np.log(np.maximum(p_true, PROB_FLOOR)).mean()
    if loss.dtype == np.float64:
        loss = float(loss)
    d = flat.copy()
    d[np.arange(n), yy] -= 1.0
    d *= (p_true > PROB_FLOOR)[:, None] / n
    return loss, d.reshape(probs.shape)


def parameter_count(params, names=None):
    names = params.keys() if names is None else names
    return int(sum(params[n].size for n in names))


def freeze_mlp(model):
    """Names of every MLP head parameter, for use as ``frozen`` in training."""
    return frozenset(n for n in model.params if n.startswith(model.head.prefix))


# ---------------------------------------------------------------------------
# optimisation
# ---------------------------------------------------------------------------


class Adam:
    """Adam with Keras-style bias correction folded into the step size."""

    def __init__(self, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-7):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m, self.v, self.t = {}, {}, 0

    def step(self, params, grads, names):
        self.t += 1
        lr_t = self.lr * np.sqrt(1.0 - self.beta2**self.t) / (1.0 - self.beta1**self.t)
        for n in names:
            g = grads[n]
            m = self.m.get(n)
            if m is None:
                m = self.m[n] = np.zeros_like(g)
                self.v[n] = np.zeros_like(g)
            v = self.v[n]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[n] -= lr_t * m / (np.sqrt(v) + self.eps)


class SGD:
    def __init__(self, lr=0.01):
        self.lr = lr

    def step(self, params, grads, names):
        for n in names:
            params[n] -= self.lr * grads[n]


def _optimizer(name, lr):
    return Adam(lr) if name == "adam" else SGD(lr)


@dataclass
class TrainingTrace:
    """Per-epoch encoder projections of the training set and per-epoch losses.

    ``projections[e - 1]`` is the inference-mode encoder output after the
    update of epoch ``e`` (epochs are 1-based); ``inputs`` is the scaled
    input, i.e. the epoch-0 state. ``loss[e - 1]`` is the inference-mode
    cross-entropy of the same parameters and ``train_loss`` the dropout-on
    loss seen by the optimiser. ``best_epoch`` is the 1-based argmin of
    ``loss``.
    """

    inputs: np.ndarray
    labels: np.ndarray
    projections: np.ndarray
    loss: np.ndarray
    train_loss: np.ndarray = field(default=None)
    best_epoch: int = None
    elapsed_s: float = 0.0

    def __post_init__(self):
        if self.best_epoch is None and len(self.loss):
            self.best_epoch = int(np.argmin(self.loss)) + 1

    @property
    def epochs(self):
        return len(self.loss)

    def projection(self, epoch):
        """Encoder output at ``epoch`` (0 = scaled input)."""
        return self.inputs if epoch == 0 else self.projections[epoch - 1]

    @property
    def best_projection(self):
        return self.projection(self.best_epoch)


def train_full_batch(data, config, frozen=None, model=None, record_trace=True):
    """Train a :class:`TransformerClassifier` with (by default) full-batch Adam.

    ``data`` is a standardized :class:`~attnot.data.DatasetTensor`. ``frozen``
    is a set of parameter names excluded from updates. A fresh model is
    built from ``config`` unless ``model`` is given (it is copied, never
    modified). Returns the model at its best epoch and the trace.
    """
    x = np.asarray(data.data, dtype=float)
    labels = np.asarray(data.labels)
    if model is None:
        model = TransformerClassifier(x.shape[-1], data.n_classes, config)
    else:
        model = model.copy()
        model.config = config
    frozen = frozenset() if frozen is None else frozenset(frozen)
    trainable = [n for n in model.params if n not in frozen]
    opt = _optimizer(config.optimizer, config.learning_rate)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([config.seed, 1])))
    n, t, _ = x.shape
    y_points = np.broadcast_to(labels[:, None], (n, t))

    E = config.epochs
    projections = np.empty((E, *x.shape)) if record_trace else None
    losses = np.empty(E)
    train_losses = np.empty(E)
    best_loss, best_params = np.inf, None
    start = time.perf_counter()
    for e in range(E):
        if config.batch_size and config.batch_size < n:
            order = rng.permutation(n)
            batches = [order[i : i + config.batch_size] for i in range(0, n, config.batch_size)]
        else:
            batches = [slice(None)]
        batch_losses = []
        for idx in batches:
            loss, grads = model.loss_and_grad(x[idx], labels[idx], rng)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite training loss at epoch {e + 1}", e + 1, e)
            opt.step(model.params, grads, trainable)
            batch_losses.append(loss)
        train_losses[e] = float(np.mean(batch_losses))

        probs, proj, _ = model.forward(x)
        losses[e], _ = cross_entropy(probs, y_points)
        if not np.isfinite(losses[e]) or not np.all(np.isfinite(proj)):
            raise DivergenceError(f"non-finite loss at epoch {e + 1}", e + 1, e)
        if record_trace:
            projections[e] = proj
        if losses[e] < best_loss:
            best_loss = losses[e]
            best_params = {k: v.copy() for k, v in model.params.items()}
    elapsed = time.perf_counter() - start
    model.params = best_params
    trace = TrainingTrace(
        inputs=x.copy(),
        labels=labels.copy(),
        projections=projections if record_trace else np.empty((0, *x.shape)),
        loss=losses,
        train_loss=train_losses,
        elapsed_s=elapsed,
    )
    return model, trace


# ---------------------------------------------------------------------------
# regression network (used to generalise transport maps)
# ---------------------------------------------------------------------------


def fit_regressor(x, y, units=(32, 32), dropout=0.3, learning_rate=0.01, epochs=50, batch_size=32, seed=0):
    """Fit an MLP ``f: R^p -> R^q`` to pairs ``(x_i, y_i)`` by mini-batch Adam on the mean squared error.

    Returns ``(mlp, params, history, best_epoch)`` where ``params`` are taken
    at the epoch with the lowest inference-mode training MSE and
    ``best_epoch`` is 1-based.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"regression inputs {x.shape} and targets {y.shape} do not pair up")
    if epochs < 1:
        raise ParameterError("epochs must be positive")
    ss = np.random.SeedSequence([int(seed), 2])
    init_rng, rng = (np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(2))
    mlp = MLP(x.shape[1], units, y.shape[1], dropout, output=None, prefix="map.")
    P = mlp.init(init_rng)
    names = mlp.names()
    opt = Adam(learning_rate)
    n = x.shape[0]
    bs = n if not batch_size or batch_size >= n else int(batch_size)
    history = np.empty(epochs)
    best, best_params = np.inf, None
    for e in range(epochs):
        order = rng.permutation(n)
        for i in range(0, n, bs):
            idx = order[i : i + bs]
            out, caches = mlp.forward(P, x[idx], rng)
            grads = {}
            mlp.backward(P, 2.0 * (out - y[idx]) / out.size, caches, grads)
            opt.step(P, grads, names)
        pred, _ = mlp.forward(P, x)
        history[e] = float(np.mean((pred - y) ** 2))
        if not np.isfinite(history[e]):
            raise DivergenceError(f"non-finite regression loss at epoch {e + 1}", e + 1, e)
        if history[e] < best:
            best = history[e]
            best_params = {k: v.copy() for k, v in P.items()}
    return mlp, best_params, history, int(np.argmin(history)) + 1


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(path, params, header=None):
    """Write a flat ``name -> array`` archive (numpy ``.npz`` container) plus a JSON header."""
    arrays = {k: np.asarray(v) for k, v in params.items()}
    arrays["__header__"] = np.frombuffer(json.dumps(header or {}, sort_keys=True).encode(), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as z:
        arrays = {k: z[k] for k in z.files}
    header = json.loads(bytes(arrays.pop("__header__")).decode()) if "__header__" in arrays else {}
    return arrays, header


def save_classifier(path, model, extra=None):
    header = {"kind": "transformer", "n_features": model.p, "n_classes": model.k, "config": model.config.to_dict()}
    header.update(extra or {})
    save_checkpoint(path, model.params, header)


def load_classifier(path):
    params, header = load_checkpoint(path)
    cfg = TrainConfig.from_dict(header["config"])
    return TransformerClassifier(header["n_features"], header["n_classes"], cfg, params), header
