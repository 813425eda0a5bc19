"""Reverse-mode differentiable arrays over float64 numpy.

Every operation builds a node holding its inputs and a pullback
closure; creation order is a topological order of the graph, and
``backward`` replays it in reverse from a scalar loss. Broadcasting is
limited to numpy-style elementwise ops and leading batch dims in
matmul; everything else expects exact shapes.

The kernel catalog is exactly what the toy encoder/decoder/transformer
stacks need: conv1d, attention (with optional causal mask), layernorm,
softmax, embedding lookup, rotary position twist, the three losses,
and a straight-through quantization node.
"""
from __future__ import annotations

import numpy as np

_MASK_NEG = -1e30


class DiffArray:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_pullback", "_order")
    _counter = 0

    def __init__(self, data, requires_grad=False, parents=(), pullback=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = tuple(parents)
        self._pullback = pullback
        DiffArray._counter += 1
        self._order = DiffArray._counter

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def zero_grad(self):
        self.grad = None

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"DiffArray(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar used heavily by the network code
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return neg(self)


def leaf(data, requires_grad=True) -> DiffArray:
    return DiffArray(data, requires_grad=requires_grad)


def constant(data) -> DiffArray:
    return DiffArray(data, requires_grad=False)


def _wrap(x) -> DiffArray:
    return x if isinstance(x, DiffArray) else DiffArray(x)


def _node(data, parents, pullback) -> DiffArray:
    track = any(p.requires_grad for p in parents)
    if not np.isfinite(data).all():
        raise FloatingPointError("non-finite values produced by a forward op")
    return DiffArray(data, requires_grad=track, parents=parents,
                     pullback=pullback if track else None)


def toposort(root: DiffArray):
    """Op records reachable from `root`, in forward (creation) order."""
    seen, out = set(), []

    def visit(node):
        stack = [node]
        while stack:
            n = stack.pop()
            if id(n) in seen:
                continue
            seen.add(id(n))
            out.append(n)
            stack.extend(n._parents)

    visit(root)
    out.sort(key=lambda n: n._order)
    return out


def backward(loss: DiffArray):
    """Populate .grad on every requires_grad array reachable from `loss`.

    Repeated calls accumulate into existing gradients.
    """
    if loss.data.ndim != 0 and loss.data.size != 1:
        raise ValueError(f"loss must be scalar, got shape {loss.shape}")
    order = toposort(loss)
    inner = {}
    inner[id(loss)] = np.ones_like(loss.data)
    for node in reversed(order):
        g = inner.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad and node._pullback is None:
            node.accumulate(g)  # leaf
            continue
        if node._pullback is None:
            continue
        for parent, pg in node._pullback(g):
            if not parent.requires_grad:
                continue
            key = id(parent)
            if key in inner:
                inner[key] = inner[key] + pg
            else:
                inner[key] = pg


def _unbroadcast(g, shape):
    """Reduce a broadcasted gradient back to `shape`."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------- arithmetic

def add(a, b) -> DiffArray:
    a, b = _wrap(a), _wrap(b)
    out = a.data + b.data

    def pull(g):
        return ((a, _unbroadcast(g, a.shape)), (b, _unbroadcast(g, b.shape)))

    return _node(out, (a, b), pull)


def neg(a) -> DiffArray:
    a = _wrap(a)
    return _node(-a.data, (a,), lambda g: ((a, -g),))


def sub(a, b) -> DiffArray:
    return add(a, neg(_wrap(b)))


def mul(a, b) -> DiffArray:
    a, b = _wrap(a), _wrap(b)
    out = a.data * b.data

    def pull(g):
        return ((a, _unbroadcast(g * b.data, a.shape)),
                (b, _unbroadcast(g * a.data, b.shape)))

    return _node(out, (a, b), pull)


def scale(a, s: float) -> DiffArray:
    a = _wrap(a)
    return _node(a.data * s, (a,), lambda g: ((a, g * s),))


def matmul(a, b) -> DiffArray:
    a, b = _wrap(a), _wrap(b)
    out = a.data @ b.data

    def pull(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return ((a, _unbroadcast(ga, a.shape)), (b, _unbroadcast(gb, b.shape)))

    return _node(out, (a, b), pull)


def transpose(a, axes) -> DiffArray:
    a = _wrap(a)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _node(a.data.transpose(axes), (a,),
                 lambda g: ((a, g.transpose(inverse)),))


def reshape(a, shape) -> DiffArray:
    a = _wrap(a)
    old = a.shape
    return _node(a.data.reshape(shape), (a,), lambda g: ((a, g.reshape(old)),))


def concat(parts, axis=0) -> DiffArray:
    parts = [_wrap(p) for p in parts]
    out = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def pull(g):
        pieces = np.split(g, splits, axis=axis)
        return tuple((p, piece) for p, piece in zip(parts, pieces))

    return _node(out, tuple(parts), pull)


def narrow(a, axis: int, start: int, length: int) -> DiffArray:
    """Contiguous slice along one axis."""
    a = _wrap(a)
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)

    def pull(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        return ((a, full),)

    return _node(a.data[idx], (a,), pull)


# --------------------------------------------------------------- activations

def relu(a) -> DiffArray:
    a = _wrap(a)
    keep = a.data > 0

    def pull(g):
        return ((a, g * keep),)

    return _node(np.where(keep, a.data, 0.0), (a,), pull)


def silu(a) -> DiffArray:
    a = _wrap(a)
    sig = 1.0 / (1.0 + np.exp(-a.data))
    out = a.data * sig

    def pull(g):
        return ((a, g * (sig + a.data * sig * (1.0 - sig))),)

    return _node(out, (a,), pull)


def softbound(a) -> DiffArray:
    """Odd smooth squash into (-1, 1): x / (1 + x^6)^(1/6)."""
    a = _wrap(a)
    denom = (1.0 + a.data ** 6) ** (1.0 / 6.0)

    def pull(g):
        return ((a, g * (1.0 + a.data ** 6) ** (-7.0 / 6.0)),)

    return _node(a.data / denom, (a,), pull)


def layernorm(x, gamma, beta, eps: float = 1e-5) -> DiffArray:
    """Normalize over the last axis, then scale/shift."""
    x, gamma, beta = _wrap(x), _wrap(gamma), _wrap(beta)
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = xhat * gamma.data + beta.data

    def pull(g):
        reduce_axes = tuple(range(g.ndim - 1))
        ggamma = _unbroadcast((g * xhat).sum(axis=reduce_axes), gamma.shape)
        gbeta = _unbroadcast(g.sum(axis=reduce_axes), beta.shape)
        dxhat = g * gamma.data
        gx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        return ((x, gx), (gamma, ggamma), (beta, gbeta))

    return _node(out, (x, gamma, beta), pull)


def groupnorm(x, gamma, beta, groups: int, eps: float = 1e-5) -> DiffArray:
    """Normalize [B, C, T] (or [C, T]) over (C/groups, T) per group,
    then apply per-channel affine."""
    x, gamma, beta = _wrap(x), _wrap(gamma), _wrap(beta)
    squeeze = x.ndim == 2
    xd = x.data[None] if squeeze else x.data
    b_, c, t = xd.shape
    if c % groups:
        raise ValueError(f"channels {c} not divisible by groups {groups}")
    cg = c // groups
    xg = xd.reshape(b_, groups, cg * t)
    mu = xg.mean(axis=-1, keepdims=True)
    var = xg.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = ((xg - mu) * inv).reshape(b_, c, t)
    out = xhat * gamma.data[:, None] + beta.data[:, None]
    if squeeze:
        out = out[0]

    def pull(g):
        g3 = g[None] if squeeze else g
        grads = []
        if x.requires_grad:
            dxhat = (g3 * gamma.data[:, None]).reshape(b_, groups, cg * t)
            xh = xhat.reshape(b_, groups, cg * t)
            gx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                        - xh * (dxhat * xh).mean(axis=-1, keepdims=True))
            gx = gx.reshape(b_, c, t)
            grads.append((x, gx[0] if squeeze else gx))
        if gamma.requires_grad:
            grads.append((gamma, (g3 * xhat).sum(axis=(0, 2))))
        if beta.requires_grad:
            grads.append((beta, g3.sum(axis=(0, 2))))
        return tuple(grads)

    return _node(out, (x, gamma, beta), pull)


def softmax(a) -> DiffArray:
    """Softmax over the last axis."""
    a = _wrap(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def pull(g):
        inner = (g * out).sum(axis=-1, keepdims=True)
        return ((a, out * (g - inner)),)

    return _node(out, (a,), pull)


# ------------------------------------------------------------------- conv1d

def conv1d(x, w, bias=None, stride: int = 1, padding: int = 0,
           dilation: int = 1) -> DiffArray:
    """x [B, Cin, T] (or [Cin, T]) * w [Cout, Cin, k] -> [B, Cout, L],
    L = floor((T + 2p - dilation*(k-1) - 1)/stride) + 1."""
    x, w = _wrap(x), _wrap(w)
    if stride < 1 or padding < 0 or dilation < 1:
        raise ValueError(f"invalid stride/padding/dilation: {stride}/{padding}/{dilation}")
    squeeze = x.ndim == 2
    xd = x.data[None] if squeeze else x.data
    if xd.ndim != 3 or w.ndim != 3 or xd.shape[1] != w.shape[1]:
        raise ValueError(f"shape mismatch: x {x.shape} vs w {w.shape}")
    b_, cin, t = xd.shape
    cout, _, k = w.shape
    span = dilation * (k - 1) + 1
    if t + 2 * padding < span:
        raise ValueError(f"input length {t} too short for kernel span {span}")
    length = (t + 2 * padding - span) // stride + 1
    xp = np.pad(xd, ((0, 0), (0, 0), (padding, padding)))
    # im2col via k strided slices, then one BLAS matmul
    cols = np.empty((b_, length, cin * k))
    for j in range(k):
        off = j * dilation
        tap = xp[:, :, off:off + (length - 1) * stride + 1:stride]
        cols[:, :, j::k] = tap.transpose(0, 2, 1).reshape(b_, length, cin)
    wcol = w.data.transpose(1, 2, 0).reshape(cin * k, cout)
    out = (cols @ wcol).transpose(0, 2, 1)                 # [B, Cout, L]
    parents = [x, w]
    if bias is not None:
        bias = _wrap(bias)
        out = out + bias.data[None, :, None]
        parents.append(bias)
    if squeeze:
        out = out[0]

    def pull(g):
        gb3 = (g[None] if squeeze else g).transpose(0, 2, 1)   # [B, L, Cout]
        grads = []
        if x.requires_grad:
            gcols = gb3 @ wcol.T                               # [B, L, Cin*k]
            gxp = np.zeros_like(xp)
            for j in range(k):
                off = j * dilation
                slab = gcols[:, :, j::k].transpose(0, 2, 1)
                gxp[:, :, off:off + (length - 1) * stride + 1:stride] += slab
            gx = gxp[:, :, padding:padding + t] if padding else gxp
            grads.append((x, gx[0] if squeeze else gx))
        if w.requires_grad:
            gwcol = cols.reshape(-1, cin * k).T @ gb3.reshape(-1, cout)
            grads.append((w, gwcol.reshape(cin, k, cout).transpose(2, 0, 1)))
        if bias is not None and bias.requires_grad:
            grads.append((bias, gb3.sum(axis=(0, 1))))
        return tuple(grads)

    return _node(out, tuple(parents), pull)


# -------------------------------------------------------- lookup & attention

def embedding(table, ids) -> DiffArray:
    """Row gather: table [V, d], ids int array -> [*ids.shape, d]."""
    table = _wrap(table)
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ValueError(f"ids out of range [0, {table.shape[0]})")

    def pull(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        return ((table, gt),)

    return _node(table.data[ids], (table,), pull)


def rope(x, cos, sin) -> DiffArray:
    """Rotary twist of the last axis, split into two halves.

    x [..., T, D] with D even; cos/sin [T, D/2]. The map is a rotation,
    so the pullback applies the inverse rotation to the gradient.
    """
    x = _wrap(x)
    d = x.shape[-1]
    if d % 2:
        raise ValueError("rope needs an even feature dim")
    h = d // 2
    x1, x2 = x.data[..., :h], x.data[..., h:]
    out = np.concatenate([x1 * cos - x2 * sin, x1 * sin + x2 * cos], axis=-1)

    def pull(g):
        g1, g2 = g[..., :h], g[..., h:]
        gx = np.concatenate([g1 * cos + g2 * sin, -g1 * sin + g2 * cos], axis=-1)
        return ((x, gx),)

    return _node(out, (x,), pull)


def attention(q, k, v, causal: bool = False) -> DiffArray:
    """Scaled dot-product attention over [..., T, D] heads.

    Composite of matmul/softmax primitives; the causal mask adds -1e30
    above the diagonal so masked weights are exactly zero.
    """
    q, k, v = _wrap(q), _wrap(k), _wrap(v)
    d = q.shape[-1]
    scores = scale(matmul(q, transpose(k, tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2))),
                   1.0 / np.sqrt(d))
    if causal:
        tq, tk = q.shape[-2], k.shape[-2]
        mask = np.where(np.arange(tk)[None, :] > np.arange(tq)[:, None], _MASK_NEG, 0.0)
        scores = add(scores, constant(mask))
    return matmul(softmax(scores), v)


# ------------------------------------------------------------------- losses

def total(a) -> DiffArray:
    a = _wrap(a)
    shape = a.shape
    return _node(np.asarray(a.data.sum()), (a,),
                 lambda g: ((a, np.broadcast_to(g, shape).copy()),))


def mean(a, axis=None) -> DiffArray:
    a = _wrap(a)
    out = a.data.mean(axis=axis)
    denom = a.data.size if axis is None else a.data.shape[axis]

    def pull(g):
        if axis is None:
            return ((a, np.broadcast_to(g / denom, a.shape).copy()),)
        ge = np.expand_dims(g, axis) / denom
        return ((a, np.broadcast_to(ge, a.shape).copy()),)

    return _node(out, (a,), pull)


def _masked_mean_count(mask, shape):
    if mask is None:
        return None, float(np.prod(shape))
    m = np.asarray(mask, dtype=np.float64)
    m = np.broadcast_to(m, shape)
    return m, max(float(m.sum()), 1.0)


def smooth_l1_loss(pred, target, beta: float = 1.0, mask=None) -> DiffArray:
    """Mean smooth-L1: 0.5 r^2/beta for |r|<beta else |r|-0.5 beta."""
    pred = _wrap(pred)
    tgt = np.asarray(target.data if isinstance(target, DiffArray) else target)
    r = pred.data - tgt
    quad = np.abs(r) < beta
    elems = np.where(quad, 0.5 * r * r / beta, np.abs(r) - 0.5 * beta)
    m, count = _masked_mean_count(mask, pred.shape)
    if m is not None:
        elems = elems * m
    out = np.asarray(elems.sum() / count)

    def pull(g):
        gr = np.clip(r / beta, -1.0, 1.0) / count
        if m is not None:
            gr = gr * m
        return ((pred, g * gr),)

    return _node(out, (pred,), pull)


def mse_loss(pred, target, mask=None) -> DiffArray:
    pred = _wrap(pred)
    tgt = np.asarray(target.data if isinstance(target, DiffArray) else target)
    r = pred.data - tgt
    m, count = _masked_mean_count(mask, pred.shape)
    sq = r * r if m is None else r * r * m
    out = np.asarray(sq.sum() / count)

    def pull(g):
        gr = 2.0 * r / count
        if m is not None:
            gr = gr * m
        return ((pred, g * gr),)

    return _node(out, (pred,), pull)


def cross_entropy(logits, targets, ignore_index: int = -1) -> DiffArray:
    """Mean NLL over rows whose target != ignore_index; exact invariance
    to target values at ignored rows."""
    logits = _wrap(logits)
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or targets.shape != (logits.shape[0],):
        raise ValueError(f"need logits [N, V] and targets [N], got "
                         f"{logits.shape} / {targets.shape}")
    valid = targets != ignore_index
    safe = np.where(valid, targets, 0)
    if safe.size and (safe.min() < 0 or safe.max() >= logits.shape[1]):
        raise ValueError("targets out of vocabulary range")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logz
    count = max(int(valid.sum()), 1)
    nll = -(logp[np.arange(len(safe)), safe] * valid).sum() / count

    def pull(g):
        probs = np.exp(logp)
        probs[np.arange(len(safe)), safe] -= 1.0
        probs *= (valid / count)[:, None]
        return ((logits, g * probs),)

    return _node(np.asarray(nll), (logits,), pull)


def straight_through(x, fn) -> DiffArray:
    """Apply a non-differentiable same-shape map; gradient passes through
    unchanged."""
    x = _wrap(x)
    out = np.asarray(fn(x.data), dtype=np.float64)
    if out.shape != x.shape:
        raise ValueError(f"straight-through map changed shape {x.shape} -> {out.shape}")
    return _node(out, (x,), lambda g: ((x, g),))
