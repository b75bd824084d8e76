"""Recurrent Q-network, hand-rolled in numpy.

Architecture: flattened 12x5 observation -> rectified linear layer (15 units)
-> GRU (15 units) -> linear readout of 12 per-node Q-values. Unreachable
nodes are masked to -inf before any argmax/max. The backward pass is written
by hand and verified against central finite differences (`gradient_check`).
"""

from __future__ import annotations

import numpy as np

N_IN = 12 * 5
N_HIDDEN = 15
N_OUT = 12

PARAM_SHAPES = {
    "W_in": (N_IN, N_HIDDEN),
    "b_in": (N_HIDDEN,),
    "W_z": (N_HIDDEN, N_HIDDEN),
    "U_z": (N_HIDDEN, N_HIDDEN),
    "b_z": (N_HIDDEN,),
    "W_r": (N_HIDDEN, N_HIDDEN),
    "U_r": (N_HIDDEN, N_HIDDEN),
    "b_r": (N_HIDDEN,),
    "W_n": (N_HIDDEN, N_HIDDEN),
    "U_n": (N_HIDDEN, N_HIDDEN),
    "b_n": (N_HIDDEN,),
    "W_out": (N_HIDDEN, N_OUT),
    "b_out": (N_OUT,),
}

NEG_INF = -1e30  # finite stand-in so masked arithmetic never produces NaNs


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class QNetwork:
    """Parameters plus forward/backward passes. Stateless across episodes:
    callers own the hidden state and reset it to zeros at episode start."""

    def __init__(self, seed: int | None = None, params: dict | None = None):
        if params is not None:
            self.params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        else:
            rng = np.random.default_rng(seed)
            self.params = {}
            for name, shape in PARAM_SHAPES.items():
                fan_in = shape[0] if len(shape) > 1 else N_HIDDEN
                bound = 1.0 / np.sqrt(fan_in)
                self.params[name] = rng.uniform(-bound, bound, size=shape)

    def copy(self) -> "QNetwork":
        return QNetwork(params={k: v.copy() for k, v in self.params.items()})

    def zero_hidden(self, batch: int = 1) -> np.ndarray:
        return np.zeros((batch, N_HIDDEN))

    # -- forward ------------------------------------------------------------

    def step(self, x: np.ndarray, h: np.ndarray, cache: list | None = None):
        """One timestep for a batch: x (B, 60), h (B, 15) -> (q (B, 12), h')."""
        p = self.params
        a = x @ p["W_in"] + p["b_in"]
        x1 = np.maximum(a, 0.0)
        z = _sigmoid(x1 @ p["W_z"] + h @ p["U_z"] + p["b_z"])
        r = _sigmoid(x1 @ p["W_r"] + h @ p["U_r"] + p["b_r"])
        hU = h @ p["U_n"]
        n = np.tanh(x1 @ p["W_n"] + r * hU + p["b_n"])
        h_new = (1.0 - z) * n + z * h
        q = h_new @ p["W_out"] + p["b_out"]
        if cache is not None:
            cache.append((x, a, x1, z, r, n, h, hU))
        return q, h_new

    def forward_sequence(self, obs: np.ndarray, want_cache: bool = False):
        """Unroll from a zero hidden state: obs (B, T, 60) -> q (B, T, 12)."""
        B, T, _ = obs.shape
        h = self.zero_hidden(B)
        qs = np.empty((B, T, N_OUT))
        cache = [] if want_cache else None
        for t in range(T):
            q, h = self.step(obs[:, t], h, cache)
            qs[:, t] = q
        return (qs, cache) if want_cache else qs

    # -- backward -----------------------------------------------------------

    def backward_sequence(self, cache: list, dq: np.ndarray) -> dict:
        """Backprop-through-time given dL/dq (B, T, 12); returns grads per param."""
        p = self.params
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        B, T, _ = dq.shape
        dh_next = np.zeros((B, N_HIDDEN))
        for t in range(T - 1, -1, -1):
            x, a, x1, z, r, n, h_prev, hU = cache[t]
            dq_t = dq[:, t]
            h_new = (1.0 - z) * n + z * h_prev
            grads["W_out"] += h_new.T @ dq_t
            grads["b_out"] += dq_t.sum(axis=0)
            dh = dq_t @ p["W_out"].T + dh_next

            dz = dh * (h_prev - n)
            dn = dh * (1.0 - z)
            dh_prev = dh * z

            dn_pre = dn * (1.0 - n * n)
            grads["W_n"] += x1.T @ dn_pre
            grads["b_n"] += dn_pre.sum(axis=0)
            dr = dn_pre * hU
            drhU = dn_pre * r
            grads["U_n"] += h_prev.T @ drhU
            dh_prev += drhU @ p["U_n"].T

            dz_pre = dz * z * (1.0 - z)
            grads["W_z"] += x1.T @ dz_pre
            grads["U_z"] += h_prev.T @ dz_pre
            grads["b_z"] += dz_pre.sum(axis=0)
            dh_prev += dz_pre @ p["U_z"].T

            dr_pre = dr * r * (1.0 - r)
            grads["W_r"] += x1.T @ dr_pre
            grads["U_r"] += h_prev.T @ dr_pre
            grads["b_r"] += dr_pre.sum(axis=0)
            dh_prev += dr_pre @ p["U_r"].T

            dx1 = dn_pre @ p["W_n"].T + dz_pre @ p["W_z"].T + dr_pre @ p["W_r"].T
            da = dx1 * (a > 0)
            grads["W_in"] += x.T @ da
            grads["b_in"] += da.sum(axis=0)

            dh_next = dh_prev
        return grads


def mask_q(q: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Set Q-values of unreachable nodes to -inf (finite sentinel)."""
    return np.where(mask, q, NEG_INF)


def masked_argmax(q: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Greedy action over reachable nodes; ties resolve to the smallest id."""
    return np.argmax(mask_q(q, mask), axis=-1)


class Adam:
    """Adaptive-moment optimizer with the standard moment constants."""

    def __init__(self, params: dict, lr: float = 1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def apply(self, params: dict, grads: dict):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for k, g in grads.items():
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            m_hat = self.m[k] / (1 - b1 ** self.t)
            v_hat = self.v[k] / (1 - b2 ** self.t)
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


# ---------------------------------------------------------------------------
# TD loss and gradient verification


def td_targets(q_target: np.ndarray, masks: np.ndarray, rewards: np.ndarray, gamma: float):
    """Bellman targets over full episodes: y_t = r_t + gamma * max_a' Q-(o_{t+1}, a');
    the final step bootstraps nothing (y_T = r_T)."""
    B, T, _ = q_target.shape
    y = rewards.astype(np.float64).copy()
    next_max = np.max(mask_q(q_target[:, 1:], masks[:, 1:]), axis=-1)  # (B, T-1)
    y[:, : T - 1] += gamma * next_max
    return y


def td_loss_and_grads(
    policy: QNetwork,
    target: QNetwork,
    obs: np.ndarray,
    masks: np.ndarray,
    actions: np.ndarray,
    rewards: np.ndarray,
    gamma: float,
    corrupt_backward: bool = False,
):
    """Mean squared TD error over a batch of whole episodes, plus its gradient.

    `corrupt_backward` is a test-only hook that breaks one gradient so the
    finite-difference checker can prove it would catch a wrong backward pass.
    """
    B, T, _ = obs.shape
    q_target = target.forward_sequence(obs)
    y = td_targets(q_target, masks, rewards, gamma)
    qs, cache = policy.forward_sequence(obs, want_cache=True)
    bi = np.arange(B)[:, None]
    ti = np.arange(T)[None, :]
    qa = qs[bi, ti, actions]
    diff = qa - y
    loss = float(np.mean(diff * diff))
    dq = np.zeros_like(qs)
    dq[bi, ti, actions] = 2.0 * diff / (B * T)
    grads = policy.backward_sequence(cache, dq)
    if corrupt_backward:
        grads["W_n"] = grads["W_n"] * 1.5 + 0.05
    return loss, grads


def gradient_check(
    policy: QNetwork,
    target: QNetwork,
    batch: tuple,
    gamma: float = 0.99,
    n_probes: int = 200,
    h: float = 1e-4,
    seed: int = 0,
    corrupt_backward: bool = False,
    floor: float = 1e-6,
) -> float:
    """Max relative error between analytic gradients and central differences
    over `n_probes` randomly chosen parameters.

    The probe batch should carry unit-scale rewards (see
    `training.make_probe_batch`): central differences on a large-magnitude
    loss lose significance to cancellation, which would show up here as
    spurious error. `floor` bounds the denominator for near-zero gradients.
    """
    obs, masks, actions, rewards = batch
    _, grads = td_loss_and_grads(
        policy, target, obs, masks, actions, rewards, gamma, corrupt_backward
    )

    def loss_only():
        loss, _ = td_loss_and_grads(policy, target, obs, masks, actions, rewards, gamma)
        return loss

    rng = np.random.default_rng(seed)
    names = sorted(policy.params)
    sizes = np.array([policy.params[n].size for n in names])
    flat_total = int(sizes.sum())
    picks = rng.choice(flat_total, size=min(n_probes, flat_total), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    max_rel = 0.0
    for flat_idx in picks:
        pi = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
        name = names[pi]
        local = int(flat_idx - offsets[pi])
        arr = policy.params[name]
        orig = arr.flat[local]
        arr.flat[local] = orig + h
        lp = loss_only()
        arr.flat[local] = orig - h
        lm = loss_only()
        arr.flat[local] = orig
        numeric = (lp - lm) / (2 * h)
        analytic = grads[name].flat[local]
        denom = max(abs(numeric), abs(analytic), floor)
        max_rel = max(max_rel, abs(numeric - analytic) / denom)
    return max_rel
