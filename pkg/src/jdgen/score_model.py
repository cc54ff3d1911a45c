"""Score network: a tanh MLP with hand-written backprop and Adam updates.

Architecture is fixed to (d+1) -> 200 -> 200 -> 200 -> 200 -> d with tanh
on the four hidden layers and a linear output.  The network input is
(x_1..x_d, t/t_scale) so the time feature lives in [0, 1].  Gradients are
exact reverse-mode derivatives of the mean squared residual; training runs
in float64, and a float32 fast path exists for bulk generation.
"""

import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np

HIDDEN_WIDTH = 200
N_HIDDEN = 4


@dataclass
class ScoreNetParams:
    """Layer weights/biases plus the time normalization constant."""

    weights: list
    biases: list
    d: int
    t_scale: float

    def copy(self):
        return ScoreNetParams(
            [w.copy() for w in self.weights], [b.copy() for b in self.biases],
            self.d, self.t_scale,
        )


def layer_shapes(d):
    dims = [d + 1] + [HIDDEN_WIDTH] * N_HIDDEN + [d]
    return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]


def init_params(cfg, seed):
    """Fan-in-scaled zero-mean init, zero biases; deterministic per seed."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    weights, biases = [], []
    for rows, cols in layer_shapes(cfg.d):
        weights.append(rng.standard_normal((rows, cols)) / math.sqrt(cols))
        biases.append(np.zeros(rows))
    return ScoreNetParams(weights, biases, cfg.d, float(cfg.T))


def _assemble_input(params, x, t):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    tb = np.broadcast_to(np.asarray(t, dtype=np.float64), (xb.shape[0],))
    inp = np.concatenate([xb, (tb / params.t_scale)[:, None]], axis=1)
    return inp, single


def forward(params, x, t):
    """Network output for one point (x 1-d) or a batch (x 2-d)."""
    inp, single = _assemble_input(params, x, t)
    if not np.all(np.isfinite(inp)):
        raise ValueError("non-finite network input")
    h = inp
    for i in range(N_HIDDEN):
        h = np.tanh(h @ params.weights[i].T + params.biases[i])
    out = h @ params.weights[-1].T + params.biases[-1]
    return out[0] if single else out


def loss_and_grad(params, x, t, targets):
    """Mean over the batch of ||s(x,t) - target||^2, with exact gradients."""
    inp, _ = _assemble_input(params, x, t)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[None, :]
    n = inp.shape[0]
    if targets.shape != (n, params.d):
        raise ValueError(f"targets shape {targets.shape} does not match batch ({n}, {params.d})")

    acts = [inp]
    h = inp
    for i in range(N_HIDDEN):
        h = np.tanh(h @ params.weights[i].T + params.biases[i])
        acts.append(h)
    out = h @ params.weights[-1].T + params.biases[-1]

    resid = out - targets
    loss = float((resid * resid).sum() / n)

    g_w = [None] * (N_HIDDEN + 1)
    g_b = [None] * (N_HIDDEN + 1)
    delta = 2.0 * resid / n
    g_w[-1] = delta.T @ acts[-1]
    g_b[-1] = delta.sum(axis=0)
    back = delta @ params.weights[-1]
    for i in range(N_HIDDEN - 1, -1, -1):
        dz = back * (1.0 - acts[i + 1] * acts[i + 1])
        g_w[i] = dz.T @ acts[i]
        g_b[i] = dz.sum(axis=0)
        if i > 0:
            back = dz @ params.weights[i]
    return loss, (g_w, g_b)


# ---------------------------------------------------------------------------
# Optimizer

@dataclass
class OptimizerState:
    """Adam accumulators; arrays are updated in place by optimizer_step."""

    m_w: list
    m_b: list
    v_w: list
    v_b: list
    step: int = 0
    n_skipped: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_optimizer(params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    return OptimizerState(
        [np.zeros_like(w) for w in params.weights],
        [np.zeros_like(b) for b in params.biases],
        [np.zeros_like(w) for w in params.weights],
        [np.zeros_like(b) for b in params.biases],
        lr=lr, beta1=beta1, beta2=beta2, eps=eps,
    )


def optimizer_step(params, grads, state):
    """One bias-corrected adaptive-moment update (in place).

    Non-finite gradients skip the update and bump n_skipped so callers can
    notice a diverging loss without corrupting the moments.
    """
    g_w, g_b = grads
    finite = all(np.all(np.isfinite(g)) for g in g_w) and all(
        np.all(np.isfinite(g)) for g in g_b
    )
    if not finite:
        state.n_skipped += 1
        return params, state
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1**state.step
    corr2 = 1.0 - b2**state.step
    scale = state.lr / corr1
    for tgt, grad, m, v in (
        (params.weights, g_w, state.m_w, state.v_w),
        (params.biases, g_b, state.m_b, state.v_b),
    ):
        for i in range(len(tgt)):
            m[i] *= b1
            m[i] += (1.0 - b1) * grad[i]
            v[i] *= b2
            v[i] += (1.0 - b2) * grad[i] * grad[i]
            tgt[i] -= scale * m[i] / (np.sqrt(v[i] / corr2) + state.eps)
    return params, state


# ---------------------------------------------------------------------------
# float32 fast path for bulk generation

def cast_params_f32(params):
    return (
        [w.astype(np.float32) for w in params.weights],
        [b.astype(np.float32) for b in params.biases],
        np.float32(params.t_scale),
    )


def forward_f32(params32, x32, t):
    """Batched forward pass in float32; x32 is (n, d), t a scalar time."""
    weights, biases, t_scale = params32
    tcol = np.full((x32.shape[0], 1), np.float32(t) / t_scale, dtype=np.float32)
    h = np.concatenate([x32, tcol], axis=1)
    for i in range(N_HIDDEN):
        h = np.tanh(h @ weights[i].T + biases[i])
    return h @ weights[-1].T + biases[-1]


# ---------------------------------------------------------------------------
# Persistence

WEIGHTS_MAGIC = b"JDLW"
WEIGHTS_VERSION = 1


def save_params(params, path):
    """Binary weights file with trailing CRC32 of everything before it."""
    blob = bytearray()
    blob += WEIGHTS_MAGIC
    blob += struct.pack("<I", WEIGHTS_VERSION)
    blob += struct.pack("<I", params.d)
    blob += struct.pack("<I", len(params.weights))
    for w, b in zip(params.weights, params.biases):
        rows, cols = w.shape
        blob += struct.pack("<II", rows, cols)
        blob += np.ascontiguousarray(w, dtype="<f8").tobytes()
        blob += np.ascontiguousarray(b, dtype="<f8").tobytes()
    blob += struct.pack("<I", zlib.crc32(bytes(blob)) & 0xFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_params(path, cfg):
    """Read a weights file; the time scale is re-attached from the config."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != WEIGHTS_MAGIC:
        raise ValueError(f"{path}: bad magic {blob[:4]!r}")
    (stored_crc,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != stored_crc:
        raise ValueError(f"{path}: checksum mismatch")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != WEIGHTS_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    (d,) = struct.unpack("<I", blob[8:12])
    (n_layers,) = struct.unpack("<I", blob[12:16])
    off = 16
    weights, biases = [], []
    for _ in range(n_layers):
        rows, cols = struct.unpack("<II", blob[off : off + 8])
        off += 8
        w = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=off).reshape(rows, cols)
        off += rows * cols * 8
        b = np.frombuffer(blob, dtype="<f8", count=rows, offset=off)
        off += rows * 8
        weights.append(w.astype(np.float64))
        biases.append(b.astype(np.float64))
    if d != cfg.d:
        raise ValueError(f"{path}: stored d={d} does not match config d={cfg.d}")
    return ScoreNetParams(weights, biases, int(d), float(cfg.T))
