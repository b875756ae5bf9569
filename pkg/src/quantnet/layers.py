"""Differentiable layer kernels: affine map, LSTM cell, tanh signal head.

Forward passes run over a whole window at once (columns = time steps) and
return the cache needed for an exact reverse pass. Backward passes accumulate
(+=) into the gradient buffers of the owning ParamStore, and return the
adjoint of their input sequence so layers chain. Recurrent adjoints stop at
the window boundary, which is what truncating backpropagation means here:
credit flows back at most the window length.

LSTM, gate order [p, f, o, g] = [input, forget, output, candidate]:

    u = W x_t + V h_{t-1} + b            (one packed 4h vector)
    c_t = sigmoid(u_f) * c_{t-1} + sigmoid(u_p) * tanh(u_g)
    h_t = sigmoid(u_o) * tanh(c_t)

The logistic function is computed as 0.5*(1+tanh(u/2)), which saturates
without overflow warnings and agrees with 1/(1+exp(-u)) to rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .params import ParamStore

# signals are clamped to +/-(1 - 1e-12) after tanh; the clamp's gradient is
# treated as the identity inside the open interval
SIGNAL_CLAMP = 1.0 - 1e-12


def sigmoid(u: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * u))


@dataclass
class LstmState:
    hidden: np.ndarray
    cell: np.ndarray


def zero_state(dim: int) -> LstmState:
    return LstmState(hidden=np.zeros(dim), cell=np.zeros(dim))


class LstmCell:
    """One LSTM cell bound to packed parameters in a ParamStore."""

    def __init__(self, store: ParamStore, prefix: str):
        self.prefix = prefix
        self.W = store.entries[f"{prefix}/W"]
        self.V = store.entries[f"{prefix}/V"]
        self.b = store.entries[f"{prefix}/b"]
        self.gW = store.grads[f"{prefix}/W"]
        self.gV = store.grads[f"{prefix}/V"]
        self.gb = store.grads[f"{prefix}/b"]
        self.hidden = self.V.shape[1]
        self.in_dim = self.W.shape[1]
        if self.W.shape[0] != 4 * self.hidden or self.b.shape[0] != 4 * self.hidden:
            raise ShapeError(f"{prefix}: packed gate shapes disagree")

    def step(self, x: np.ndarray, state: LstmState) -> LstmState:
        """Single step, no cache."""
        h = self.hidden
        if x.shape != (self.in_dim,):
            raise ShapeError(f"{self.prefix}/W expects input length {self.in_dim}, got {x.shape}")
        if state.hidden.shape != (h,):
            raise ShapeError(f"{self.prefix}/V expects state length {h}, got {state.hidden.shape}")
        u = self.W @ x + self.V @ state.hidden + self.b
        i = sigmoid(u[:h])
        f = sigmoid(u[h : 2 * h])
        o = sigmoid(u[2 * h : 3 * h])
        g = np.tanh(u[3 * h :])
        c = f * state.cell + i * g
        return LstmState(hidden=o * np.tanh(c), cell=c)

    def forward_seq(self, x_seq: np.ndarray, h0: np.ndarray, c0: np.ndarray):
        """Run the window. x_seq is (in_dim, k); returns (h_seq, final_state, cache)."""
        if x_seq.ndim != 2 or x_seq.shape[0] != self.in_dim:
            raise ShapeError(
                f"{self.prefix}/W expects input rows {self.in_dim}, got {x_seq.shape}"
            )
        h = self.hidden
        k = x_seq.shape[1]
        wx = self.W @ x_seq + self.b[:, None]
        gates = np.empty((4 * h, k))
        cs = np.empty((h, k))
        tcs = np.empty((h, k))
        hs = np.empty((h, k))
        hprev = h0
        cprev = c0
        for t in range(k):
            u = wx[:, t] + self.V @ hprev
            i = sigmoid(u[:h])
            f = sigmoid(u[h : 2 * h])
            o = sigmoid(u[2 * h : 3 * h])
            g = np.tanh(u[3 * h :])
            c = f * cprev + i * g
            tc = np.tanh(c)
            hv = o * tc
            gates[:h, t] = i
            gates[h : 2 * h, t] = f
            gates[2 * h : 3 * h, t] = o
            gates[3 * h :, t] = g
            cs[:, t] = c
            tcs[:, t] = tc
            hs[:, t] = hv
            hprev = hs[:, t]
            cprev = cs[:, t]
        cache = (x_seq, gates, cs, tcs, hs, h0, c0)
        return hs, LstmState(hidden=hs[:, -1].copy(), cell=cs[:, -1].copy()), cache

    def backward_seq(self, cache, dh_ext: np.ndarray, want_dx: bool = True):
        """Reverse pass over a recorded window.

        dh_ext holds the adjoint injected into h_t at every step (loss terms
        and/or the layer above). Accumulates parameter gradients; returns
        (dx_seq or None, dh0, dc0). dh0/dc0 are the adjoints of the incoming
        state; truncation drops them at the window boundary.
        """
        x_seq, gates, cs, tcs, hs, h0, c0 = cache
        h = self.hidden
        k = x_seq.shape[1]
        if dh_ext.shape != (h, k):
            raise ShapeError(f"{self.prefix}: adjoint shape {dh_ext.shape}, expected {(h, k)}")
        i_g = gates[:h]
        f_g = gates[h : 2 * h]
        o_g = gates[2 * h : 3 * h]
        g_g = gates[3 * h :]
        c_prev = np.empty_like(cs)
        c_prev[:, 0] = c0
        c_prev[:, 1:] = cs[:, :-1]
        # per-step multipliers, hoisted out of the loop
        k1 = o_g * (1.0 - tcs * tcs)        # dh -> dc
        p_i = g_g * i_g * (1.0 - i_g)       # dc -> du_p
        p_f = c_prev * f_g * (1.0 - f_g)    # dc -> du_f
        p_o = tcs * o_g * (1.0 - o_g)       # dh -> du_o
        p_g = i_g * (1.0 - g_g * g_g)       # dc -> du_g
        du = np.empty((4 * h, k))
        carry_h = np.zeros(h)
        carry_c = np.zeros(h)
        vt = self.V.T
        for t in range(k - 1, -1, -1):
            dh = dh_ext[:, t] + carry_h
            dc = carry_c + dh * k1[:, t]
            du[:h, t] = dc * p_i[:, t]
            du[h : 2 * h, t] = dc * p_f[:, t]
            du[2 * h : 3 * h, t] = dh * p_o[:, t]
            du[3 * h :, t] = dc * p_g[:, t]
            carry_c = dc * f_g[:, t]
            carry_h = vt @ du[:, t]
        h_prev = np.empty_like(hs)
        h_prev[:, 0] = h0
        h_prev[:, 1:] = hs[:, :-1]
        self.gW += du @ x_seq.T
        self.gV += du @ h_prev.T
        self.gb += du.sum(axis=1)
        dx = self.W.T @ du if want_dx else None
        return dx, carry_h, carry_c


class LinearMap:
    """Stateless affine map y = W x + b, applied columnwise over a window."""

    def __init__(self, store: ParamStore, prefix: str):
        self.prefix = prefix
        self.W = store.entries[f"{prefix}/W"]
        self.b = store.entries[f"{prefix}/b"]
        self.gW = store.grads[f"{prefix}/W"]
        self.gb = store.grads[f"{prefix}/b"]
        self.out_dim, self.in_dim = self.W.shape

    def step(self, x: np.ndarray) -> np.ndarray:
        if x.shape != (self.in_dim,):
            raise ShapeError(f"{self.prefix}/W expects input length {self.in_dim}, got {x.shape}")
        return self.W @ x + self.b

    def forward_seq(self, x_seq: np.ndarray):
        if x_seq.ndim != 2 or x_seq.shape[0] != self.in_dim:
            raise ShapeError(
                f"{self.prefix}/W expects input rows {self.in_dim}, got {x_seq.shape}"
            )
        return self.W @ x_seq + self.b[:, None], x_seq

    def backward_seq(self, cache, dy: np.ndarray, want_dx: bool = True):
        x_seq = cache
        self.gW += dy @ x_seq.T
        self.gb += dy.sum(axis=1)
        return self.W.T @ dy if want_dx else None


class TanhHead:
    """Signal head s = tanh(W d + b), clamped to +/-(1 - 1e-12)."""

    def __init__(self, store: ParamStore, prefix: str):
        self.linear = LinearMap(store, prefix)

    def step(self, d: np.ndarray) -> np.ndarray:
        raw = np.tanh(self.linear.step(d))
        return np.clip(raw, -SIGNAL_CLAMP, SIGNAL_CLAMP)

    def forward_seq(self, d_seq: np.ndarray):
        pre, _ = self.linear.forward_seq(d_seq)
        raw = np.tanh(pre)
        signals = np.clip(raw, -SIGNAL_CLAMP, SIGNAL_CLAMP)
        return signals, (d_seq, raw)

    def backward_seq(self, cache, ds: np.ndarray, want_dx: bool = True):
        d_seq, raw = cache
        dpre = ds * (1.0 - raw * raw)  # clamp gradient is the identity inside the interval
        return self.linear.backward_seq(d_seq, dpre, want_dx=want_dx)


def dropout_mask(rng: np.random.Generator, shape: tuple[int, int], p: float) -> np.ndarray:
    """Inverted-dropout mask: keep with probability 1-p, scale kept units by 1/(1-p)."""
    keep = rng.random(shape) >= p
    return keep / (1.0 - p)
