"""Small actor-critic MLP in numpy with hand-written backprop, Adam and checkpoints."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0
LOG_2PI = math.log(2 * math.pi)
CHECKPOINT_MAGIC = "rlreadout-policy-v1"


def relu6(x):
    return np.clip(x, 0.0, 6.0)


def relu6_grad(x):
    return ((x > 0) & (x < 6)).astype(x.dtype)


@dataclass(frozen=True)
class NetConfig:
    obs_dim: int = 1
    act_dim: int = 121
    hidden: int = 128
    n_hidden: int = 2
    log_std_init: float = -0.5
    mean_init_scale: float = 0.01
    # if set, the mean is bound * tanh(linear head) so it cannot drift past
    # an action clip where the reward gradient vanishes
    mean_bound: float | None = None

    def __post_init__(self):
        if min(self.obs_dim, self.act_dim, self.hidden, self.n_hidden) < 1:
            raise InvalidParameterError("network dimensions must be positive")
        if self.mean_bound is not None and not self.mean_bound > 0:
            raise InvalidParameterError("mean_bound must be positive")


def _uniform_fan_in(rng, fan_in, shape):
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class PolicyNet:
    """Shared ReLU6 trunk with a Gaussian mean head, a value head and a
    state-independent log standard deviation.

    ``params`` is an ordered dict of float64 arrays; gradients use the same keys.
    """

    def __init__(self, cfg: NetConfig, rng: np.random.Generator):
        self.cfg = cfg
        p = {}
        fan = cfg.obs_dim
        for i in range(cfg.n_hidden):
            p[f"W{i}"] = _uniform_fan_in(rng, fan, (fan, cfg.hidden))
            p[f"b{i}"] = _uniform_fan_in(rng, fan, (cfg.hidden,))
            fan = cfg.hidden
        p["W_mu"] = cfg.mean_init_scale * _uniform_fan_in(rng, fan, (fan, cfg.act_dim))
        p["b_mu"] = np.zeros(cfg.act_dim)
        p["W_v"] = _uniform_fan_in(rng, fan, (fan, 1))
        p["b_v"] = np.zeros(1)
        p["log_std"] = np.full(cfg.act_dim, cfg.log_std_init)
        self.params = p

    # ------------------------------------------------------------ forward/back
    def forward(self, obs):
        """Return mean (B, act), clamped log_std (act,), value (B,) and a cache for backward."""
        x = np.atleast_2d(np.asarray(obs, dtype=float))
        if x.shape[-1] != self.cfg.obs_dim:
            raise InvalidParameterError(f"observation width {x.shape[-1]} != {self.cfg.obs_dim}")
        p = self.params
        pre, acts = [], [x]
        h = x
        for i in range(self.cfg.n_hidden):
            z = h @ p[f"W{i}"] + p[f"b{i}"]
            h = relu6(z)
            pre.append(z)
            acts.append(h)
        mean = h @ p["W_mu"] + p["b_mu"]
        squash = None
        if self.cfg.mean_bound is not None:
            squash = np.tanh(mean / self.cfg.mean_bound)
            mean = self.cfg.mean_bound * squash
        value = (h @ p["W_v"] + p["b_v"])[:, 0]
        log_std = np.clip(p["log_std"], LOG_STD_MIN, LOG_STD_MAX)
        return mean, log_std, value, (pre, acts, squash)

    def backward(self, cache, d_mean, d_log_std, d_value) -> dict:
        pre, acts, squash = cache
        p = self.params
        g = {}
        if squash is not None:
            d_mean = d_mean * (1 - squash**2)
        h = acts[-1]
        d_value = np.asarray(d_value, dtype=float)[:, None]
        g["W_mu"] = h.T @ d_mean
        g["b_mu"] = d_mean.sum(axis=0)
        g["W_v"] = h.T @ d_value
        g["b_v"] = d_value.sum(axis=0)
        raw = p["log_std"]
        g["log_std"] = np.asarray(d_log_std) * ((raw >= LOG_STD_MIN) & (raw <= LOG_STD_MAX))
        dh = d_mean @ p["W_mu"].T + d_value @ p["W_v"].T
        for i in reversed(range(self.cfg.n_hidden)):
            dz = dh * relu6_grad(pre[i])
            g[f"W{i}"] = acts[i].T @ dz
            g[f"b{i}"] = dz.sum(axis=0)
            if i:
                dh = dz @ p[f"W{i}"].T
        return {k: g[k] for k in p}

    # ------------------------------------------------------------ params
    def get_flat(self) -> np.ndarray:
        return np.concatenate([v.ravel() for v in self.params.values()])

    def set_flat(self, flat) -> None:
        flat = np.asarray(flat, dtype=float)
        i = 0
        for k, v in self.params.items():
            self.params[k] = flat[i:i + v.size].reshape(v.shape).copy()
            i += v.size
        if i != flat.size:
            raise InvalidParameterError("flat parameter vector has the wrong length")

    def copy_params(self) -> dict:
        return {k: v.copy() for k, v in self.params.items()}

    def load_params(self, params: dict) -> None:
        self.params = {k: np.array(params[k], dtype=float) for k in self.params}

    @property
    def n_params(self) -> int:
        return sum(v.size for v in self.params.values())

    # ------------------------------------------------------------ checkpoints
    def save(self, path) -> None:
        """Plain-text checkpoint: a magic line, the config, one shape line per
        tensor, then every value in repr form so reloading is exact."""
        with open(path, "w") as fh:
            fh.write(CHECKPOINT_MAGIC + "\n")
            c = self.cfg
            fh.write(f"config {c.obs_dim} {c.act_dim} {c.hidden} {c.n_hidden} "
                     f"{c.log_std_init!r} {c.mean_init_scale!r} {c.mean_bound!r}\n")
            for k, v in self.params.items():
                fh.write(f"tensor {k} {' '.join(map(str, v.shape))}\n")
                fh.write(" ".join(repr(float(x)) for x in v.ravel()) + "\n")

    @classmethod
    def load(cls, path) -> "PolicyNet":
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != CHECKPOINT_MAGIC:
            raise InvalidParameterError(f"{path}: not a policy checkpoint")
        head = lines[1].split()
        if head[0] != "config" or len(head) != 8:
            raise InvalidParameterError(f"{path}: malformed config line")
        bound = None if head[7] == "None" else float(head[7])
        cfg = NetConfig(int(head[1]), int(head[2]), int(head[3]), int(head[4]), float(head[5]), float(head[6]), bound)
        net = cls(cfg, np.random.default_rng(0))
        loaded = {}
        for shape_line, data_line in zip(lines[2::2], lines[3::2]):
            parts = shape_line.split()
            name, shape = parts[1], tuple(int(s) for s in parts[2:])
            values = np.array([float(x) for x in data_line.split()])
            if name not in net.params or values.size != math.prod(shape) or shape != net.params[name].shape:
                raise InvalidParameterError(f"{path}: tensor {name} has unexpected shape {shape}")
            loaded[name] = values.reshape(shape)
        if set(loaded) != set(net.params):
            raise InvalidParameterError(f"{path}: missing tensors {sorted(set(net.params) - set(loaded))}")
        net.load_params(loaded)
        return net


# ---------------------------------------------------------------- Gaussian policy

def gaussian_log_prob(actions, mean, log_std) -> np.ndarray:
    """Sum over action dimensions of the diagonal Gaussian log density."""
    z = (actions - mean) * np.exp(-log_std)
    return -0.5 * np.sum(z**2, axis=-1) - np.sum(log_std) - 0.5 * LOG_2PI * mean.shape[-1]


def gaussian_entropy(log_std) -> float:
    return float(np.sum(log_std) + 0.5 * (1 + LOG_2PI) * np.size(log_std))


def sample_action(net: PolicyNet, obs, rng: np.random.Generator):
    """Draw actions for a batch of observations; returns (actions, log_probs, values, means)."""
    mean, log_std, value, _ = net.forward(obs)
    actions = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
    return actions, gaussian_log_prob(actions, mean, log_std), value, mean


# ---------------------------------------------------------------- optimiser

class Adam:
    def __init__(self, params: dict, lr: float = 3e-4, betas=(0.9, 0.999), eps: float = 1e-8):
        if not lr > 0:
            raise InvalidParameterError("learning rate must be positive")
        self.lr, (self.b1, self.b2), self.eps = lr, betas, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c1 = 1 - self.b1**self.t
        c2 = 1 - self.b2**self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] = params[k] - self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)

    def state(self) -> tuple:
        return ({k: v.copy() for k, v in self.m.items()}, {k: v.copy() for k, v in self.v.items()}, self.t)

    def restore(self, state) -> None:
        m, v, self.t = state
        self.m = {k: a.copy() for k, a in m.items()}
        self.v = {k: a.copy() for k, a in v.items()}


def global_norm(grads: dict) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_grad_norm(grads: dict, max_norm: float) -> tuple[dict, float]:
    """Scale all gradients together so their global L2 norm is at most ``max_norm``."""
    norm = global_norm(grads)
    if norm > max_norm:
        s = max_norm / (norm + 1e-12)
        grads = {k: g * s for k, g in grads.items()}
    return grads, norm


# ---------------------------------------------------------------- diagnostics

def gradient_check(net: PolicyNet, obs, rng: np.random.Generator, h: float = 1e-5) -> float:
    """Largest per-tensor relative error between backprop and central differences.

    The scalar probed is a random linear functional of (mean, log_std, value),
    so every head and every trunk parameter receives a gradient.
    """
    obs = np.atleast_2d(obs)
    mean, log_std, value, cache = net.forward(obs)
    c_mean = rng.standard_normal(mean.shape)
    c_ls = rng.standard_normal(log_std.shape)
    c_v = rng.standard_normal(value.shape)

    def scalar():
        m, ls, v, _ = net.forward(obs)
        return float(np.sum(c_mean * m) + np.sum(c_ls * ls) + np.sum(c_v * v))

    grads = net.backward(cache, c_mean, c_ls, c_v)
    worst = 0.0
    for k, p in net.params.items():
        num = np.zeros_like(p)
        for i in np.ndindex(p.shape):
            old = p[i]
            p[i] = old + h
            up = scalar()
            p[i] = old - h
            down = scalar()
            p[i] = old
            num[i] = (up - down) / (2 * h)
        scale = max(np.linalg.norm(num), np.linalg.norm(grads[k]), 1e-12)
        worst = max(worst, float(np.linalg.norm(num - grads[k]) / scale))
    return worst
