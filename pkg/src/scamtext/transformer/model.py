"""Post-norm transformer encoder classifier with hand-written backpropagation.

Shapes: ``B`` batch, ``T`` sequence length, ``D`` model width, ``H`` heads.
Parameters live in a flat ``dict[str, ndarray]``; gradients use the same keys.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

FORMAT_VERSION = 1
LN_EPS = 1e-8

Params = dict[str, np.ndarray]


@dataclass(frozen=True)
class TransformerConfig:
    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 128
    n_classes: int = 2
    max_len: int = 64
    seed: int = 0
    learning_rate: float = 1e-3
    epochs: int = 10
    batch_size: int = 32
    optimizer: str = "sgd"

    def __post_init__(self):
        for name in ("vocab_size", "d_model", "n_heads", "n_layers", "d_ff", "n_classes",
                     "max_len", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")


def param_shapes(cfg: TransformerConfig) -> dict[str, tuple[int, ...]]:
    d, f = cfg.d_model, cfg.d_ff
    shapes: dict[str, tuple[int, ...]] = {"embed": (cfg.vocab_size, d)}
    for layer in range(cfg.n_layers):
        p = f"layers.{layer}."
        for name in ("q", "k", "v", "o"):
            shapes[p + f"W{name}"] = (d, d)
            shapes[p + f"b{name}"] = (d,)
        shapes[p + "ln1_g"] = (d,)
        shapes[p + "ln1_b"] = (d,)
        shapes[p + "W1"] = (d, f)
        shapes[p + "b1"] = (f,)
        shapes[p + "W2"] = (f, d)
        shapes[p + "b2"] = (d,)
        shapes[p + "ln2_g"] = (d,)
        shapes[p + "ln2_b"] = (d,)
    shapes["head_W"] = (d, cfg.n_classes)
    shapes["head_b"] = (cfg.n_classes,)
    return shapes


def init_params(cfg: TransformerConfig) -> Params:
    """Uniform(+-1/sqrt(d_model)) matrices, zero biases, unit layernorm gains."""
    rng = np.random.default_rng([cfg.seed, 0])
    bound = 1.0 / np.sqrt(cfg.d_model)
    params = {}
    for name, shape in param_shapes(cfg).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf.endswith("_g"):
            params[name] = np.ones(shape)
        elif len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            params[name] = rng.uniform(-bound, bound, size=shape)
    return params


def positional_encoding(position: int, dim_index: int, d_model: int) -> float:
    """sin(pos / 10000^(2i/d)) on even dims, cos on odd, with i = dim_index // 2."""
    angle = position / 10000.0 ** (2 * (dim_index // 2) / d_model)
    return float(np.sin(angle) if dim_index % 2 == 0 else np.cos(angle))


def positional_table(length: int, d_model: int) -> np.ndarray:
    pos = np.arange(length)[:, None]
    i = np.arange(d_model)[None, :]
    angle = pos / 10000.0 ** (2 * (i // 2) / d_model)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


# ---------------------------------------------------------------------------
# building blocks


def layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(-1, keepdims=True) + LN_EPS)
    xhat = xc * inv
    return gain * xhat + bias, (xhat, inv)


def _layer_norm_backward(dy, gain, cache):
    xhat, inv = cache
    dg = (dy * xhat).sum(axis=(0, 1))
    db = dy.sum(axis=(0, 1))
    dxhat = dy * gain
    dx = inv * (dxhat - dxhat.mean(-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(-1, keepdims=True))
    return dx, dg, db


def _split(x, h):
    B, T, D = x.shape
    return x.reshape(B, T, h, D // h).transpose(0, 2, 1, 3)


def _merge(x):
    B, h, T, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, T, h * dh)


def attention_weights(q, k, mask):
    """Softmax of scaled scores with masked keys at -inf. q, k: (B,H,T,dh)."""
    scores = q @ k.transpose(0, 1, 3, 2) / np.sqrt(q.shape[-1])
    scores = np.where(mask[:, None, None, :], scores, -np.inf)
    scores = scores - scores.max(-1, keepdims=True)
    a = np.exp(scores)
    return a / a.sum(-1, keepdims=True)


def _as_batch(ids, mask):
    ids = np.asarray(ids)
    mask = np.asarray(mask, dtype=bool)
    single = ids.ndim == 1
    if single:
        ids, mask = ids[None, :], mask[None, :]
    if ids.shape != mask.shape or ids.ndim != 2:
        raise ValueError(f"ids shape {ids.shape} and mask shape {mask.shape} disagree")
    if not mask.any(axis=1).all():
        raise ValueError("every sequence needs at least one unmasked position")
    return ids, mask, single


def _forward(params: Params, cfg: TransformerConfig, ids, mask, use_positional=True):
    B, T = ids.shape
    if T > cfg.max_len:
        raise ValueError(f"sequence length {T} exceeds max_len {cfg.max_len}")
    if ids.min() < 0 or ids.max() >= cfg.vocab_size:
        raise ValueError("token id out of range")
    h = cfg.n_heads
    x = params["embed"][ids]
    if use_positional:
        x = x + positional_table(T, cfg.d_model)[None]
    caches = []
    for layer in range(cfg.n_layers):
        p = f"layers.{layer}."
        q = _split(x @ params[p + "Wq"] + params[p + "bq"], h)
        k = _split(x @ params[p + "Wk"] + params[p + "bk"], h)
        v = _split(x @ params[p + "Wv"] + params[p + "bv"], h)
        a = attention_weights(q, k, mask)
        ctx = _merge(a @ v)
        x1, ln1 = layer_norm(x + ctx @ params[p + "Wo"] + params[p + "bo"],
                             params[p + "ln1_g"], params[p + "ln1_b"])
        pre = x1 @ params[p + "W1"] + params[p + "b1"]
        act = np.maximum(pre, 0.0)
        x2, ln2 = layer_norm(x1 + act @ params[p + "W2"] + params[p + "b2"],
                             params[p + "ln2_g"], params[p + "ln2_b"])
        caches.append((x, q, k, v, a, ctx, x1, ln1, pre, act, ln2))
        x = x2
    m = mask[..., None].astype(np.float64)
    count = m.sum(1)
    pooled = (x * m).sum(1) / count
    logits = pooled @ params["head_W"] + params["head_b"]
    return logits, (ids, m, count, pooled, caches, x)


def forward(params: Params, cfg: TransformerConfig, ids, mask, use_positional: bool = True):
    """Class logits, shape ``(n_classes,)`` for one sequence or ``(B, n_classes)``.

    Masked positions are excluded from attention keys and from mean pooling.
    """
    ids, mask, single = _as_batch(ids, mask)
    logits, _ = _forward(params, cfg, ids, mask, use_positional)
    return logits[0] if single else logits


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(-1, keepdims=True)


def trim_padding(ids: np.ndarray, mask: np.ndarray):
    """Drop trailing columns that are masked in every row; logits are unaffected."""
    last = int(np.flatnonzero(mask.any(axis=0)).max()) + 1
    return ids[:, :last], mask[:, :last]


def predict_proba(params: Params, cfg: TransformerConfig, ids, mask, batch_size: int = 256):
    ids, mask, _ = _as_batch(ids, mask)
    out = [softmax(forward(params, cfg, *trim_padding(ids[i:i + batch_size], mask[i:i + batch_size])))
           for i in range(0, len(ids), batch_size)]
    return np.concatenate(out)


# ---------------------------------------------------------------------------
# loss and gradient


def loss_and_grad(params: Params, cfg: TransformerConfig, ids, mask, labels,
                  use_positional: bool = True):
    """Mean cross-entropy over the batch and its exact gradient (same keys as params)."""
    ids, mask, _ = _as_batch(ids, mask)
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if len(ids) == 0 or labels.shape != (len(ids),):
        raise ValueError("batch must be non-empty with one label per sequence")
    if labels.min() < 0 or labels.max() >= cfg.n_classes:
        raise ValueError("label out of range")
    logits, (ids, m, count, pooled, caches, x) = _forward(params, cfg, ids, mask, use_positional)
    B = len(ids)
    h = cfg.n_heads

    z = logits - logits.max(-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(-1, keepdims=True))
    loss = -logp[np.arange(B), labels].mean()

    grads: Params = {}
    dlogits = np.exp(logp)
    dlogits[np.arange(B), labels] -= 1.0
    dlogits /= B
    grads["head_W"] = pooled.T @ dlogits
    grads["head_b"] = dlogits.sum(0)
    dpooled = dlogits @ params["head_W"].T
    dx = dpooled[:, None, :] * m / count[:, None, :]

    def flat(t):
        return t.reshape(-1, t.shape[-1])

    for layer in reversed(range(cfg.n_layers)):
        p = f"layers.{layer}."
        xin, q, k, v, a, ctx, x1, ln1, pre, act, ln2 = caches[layer]

        dr2, grads[p + "ln2_g"], grads[p + "ln2_b"] = _layer_norm_backward(dx, params[p + "ln2_g"], ln2)
        grads[p + "W2"] = flat(act).T @ flat(dr2)
        grads[p + "b2"] = dr2.sum((0, 1))
        dpre = (dr2 @ params[p + "W2"].T) * (pre > 0)
        grads[p + "W1"] = flat(x1).T @ flat(dpre)
        grads[p + "b1"] = dpre.sum((0, 1))
        dx1 = dr2 + dpre @ params[p + "W1"].T

        dr1, grads[p + "ln1_g"], grads[p + "ln1_b"] = _layer_norm_backward(dx1, params[p + "ln1_g"], ln1)
        grads[p + "Wo"] = flat(ctx).T @ flat(dr1)
        grads[p + "bo"] = dr1.sum((0, 1))
        dctx = _split(dr1 @ params[p + "Wo"].T, h)
        da = dctx @ v.transpose(0, 1, 3, 2)
        dv = a.transpose(0, 1, 3, 2) @ dctx
        ds = a * (da - (da * a).sum(-1, keepdims=True))
        scale = 1.0 / np.sqrt(q.shape[-1])
        dq = _merge(ds @ k) * scale
        dk = _merge(ds.transpose(0, 1, 3, 2) @ q) * scale
        dv = _merge(dv)
        dx = dr1.copy()
        for name, dproj in (("q", dq), ("k", dk), ("v", dv)):
            grads[p + f"W{name}"] = flat(xin).T @ flat(dproj)
            grads[p + f"b{name}"] = dproj.sum((0, 1))
            dx += dproj @ params[p + f"W{name}"].T

    dembed = np.zeros_like(params["embed"])
    np.add.at(dembed, ids, dx)
    grads["embed"] = dembed
    return float(loss), {name: grads[name] for name in params}


# ---------------------------------------------------------------------------
# training


def train(params: Params, cfg: TransformerConfig, ids, mask, labels):
    """Mini-batch gradient descent; returns ``(new_params, per_epoch_mean_loss)``.

    Batch order is drawn from ``cfg.seed``. With ``optimizer="sgd"`` the
    update is plain ``p -= lr * grad``; ``"adam"`` uses standard Adam moments.
    Raises :class:`FloatingPointError` as soon as a batch loss is non-finite.
    """
    ids, mask, _ = _as_batch(ids, mask)
    labels = np.asarray(labels, dtype=np.int64)
    params = {k: v.copy() for k, v in params.items()}
    rng = np.random.default_rng([cfg.seed, 1])
    lr = cfg.learning_rate
    if cfg.optimizer == "adam":
        m1 = {k: np.zeros_like(v) for k, v in params.items()}
        m2 = {k: np.zeros_like(v) for k, v in params.items()}
        beta1, beta2, eps, step = 0.9, 0.999, 1e-8, 0
    trace = []
    n = len(ids)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = loss_and_grad(params, cfg, *trim_padding(ids[idx], mask[idx]), labels[idx])
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite loss in epoch {epoch}")
            total += loss * len(idx)
            if cfg.optimizer == "sgd":
                for k in params:
                    params[k] -= lr * grads[k]
            else:
                step += 1
                c1, c2 = 1 - beta1**step, 1 - beta2**step
                for k in params:
                    m1[k] = beta1 * m1[k] + (1 - beta1) * grads[k]
                    m2[k] = beta2 * m2[k] + (1 - beta2) * grads[k] ** 2
                    params[k] -= lr * (m1[k] / c1) / (np.sqrt(m2[k] / c2) + eps)
        trace.append(total / n)
    return params, trace


# ---------------------------------------------------------------------------
# verification


def _relative_error(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(np.linalg.norm(a), np.linalg.norm(b))
    if denom < 1e-10:
        return 0.0
    return float(np.linalg.norm(a - b) / denom)


def grad_check(cfg: TransformerConfig | None = None, seed: int = 0, batch_size: int = 3,
               step: float = 1e-4, grad_fn=None) -> dict:
    """Compare analytic gradients with central differences over every coordinate.

    Returns ``{"per_tensor": {name: rel_err}, "max_relative_error": float}``
    where the relative error is ``|analytic - numeric| / max(|analytic|, |numeric|)``
    in Euclidean norm per tensor. ``grad_fn`` defaults to :func:`loss_and_grad`.
    """
    cfg = cfg or TransformerConfig(vocab_size=10, d_model=8, n_heads=2, n_layers=1, d_ff=16,
                                   max_len=4, seed=seed)
    grad_fn = grad_fn or loss_and_grad
    rng = np.random.default_rng([seed, 2])
    params = init_params(cfg)
    # perturb biases and gains away from their trivial init so every path carries signal
    for name, value in params.items():
        if value.ndim == 1:
            params[name] = value + rng.normal(0, 0.1, size=value.shape)
    ids = rng.integers(0, cfg.vocab_size, size=(batch_size, cfg.max_len))
    lengths = rng.integers(1, cfg.max_len + 1, size=batch_size)
    mask = np.arange(cfg.max_len)[None, :] < lengths[:, None]
    labels = rng.integers(0, cfg.n_classes, size=batch_size)

    _, analytic = grad_fn(params, cfg, ids, mask, labels)
    per_tensor = {}
    for name, value in params.items():
        numeric = np.zeros_like(value)
        flat = value.reshape(-1)
        nflat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up, _ = loss_and_grad(params, cfg, ids, mask, labels)
            flat[i] = orig - step
            down, _ = loss_and_grad(params, cfg, ids, mask, labels)
            flat[i] = orig
            nflat[i] = (up - down) / (2 * step)
        per_tensor[name] = _relative_error(analytic[name], numeric)
    return {"per_tensor": per_tensor, "max_relative_error": max(per_tensor.values())}


# ---------------------------------------------------------------------------
# serialization


def params_to_json(params: Params, cfg: TransformerConfig) -> str:
    return json.dumps({
        "format": "scamtext.transformer",
        "version": FORMAT_VERSION,
        "config": asdict(cfg),
        "tensors": {k: {"shape": list(v.shape), "data": v.reshape(-1).tolist()}
                    for k, v in params.items()},
    })


def params_from_json(raw: str) -> tuple[Params, TransformerConfig]:
    obj = json.loads(raw)
    if obj.get("format") != "scamtext.transformer" or obj.get("version") != FORMAT_VERSION:
        raise ValueError("not a scamtext transformer document (or unsupported version)")
    cfg = TransformerConfig(**obj["config"])
    params = {k: np.asarray(t["data"], dtype=np.float64).reshape(t["shape"])
              for k, t in obj["tensors"].items()}
    expected = param_shapes(cfg)
    if {k: v.shape for k, v in params.items()} != expected:
        raise ValueError("tensor shapes do not match the stored config")
    return params, cfg
