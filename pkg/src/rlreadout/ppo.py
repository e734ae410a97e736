"""Proximal policy optimisation for single-step (bandit-style) environments.

An environment exposes ``obs_dim``, ``action_dim``, ``observation()`` and
``evaluate_batch(actions) -> (rewards, info)``; ``info`` maps names to
per-sample arrays that get averaged into the training log.
"""
from __future__ import annotations

import csv
import math
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .nn import Adam, NetConfig, PolicyNet, clip_grad_norm, gaussian_entropy, gaussian_log_prob

CHECKPOINT_UPDATES = (80, 300)


@dataclass(frozen=True)
class PpoConfig:
    n_updates: int = 5000
    n_envs: int = 128
    n_epochs: int = 4
    n_minibatches: int = 4
    lr: float = 3e-4
    clip_eps: float = 0.2
    value_clip: float = 0.2
    value_coef: float = 0.5
    entropy_coef: float = 0.0
    max_grad_norm: float = 0.5
    hidden: int = 128
    n_hidden: int = 2
    log_std_init: float = -0.5
    mean_init_scale: float = 0.01
    normalize_advantages: bool = True
    squash_mean: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_envs % self.n_minibatches:
            raise InvalidParameterError("n_envs must be divisible by n_minibatches")
        if min(self.n_updates, self.n_envs, self.n_epochs, self.n_minibatches) < 1:
            raise InvalidParameterError("PPO counts must be positive")
        if not (0 < self.clip_eps < 1 and self.value_clip > 0 and self.max_grad_norm > 0):
            raise InvalidParameterError("clip settings must be positive")

    def net_config(self, obs_dim: int, act_dim: int, action_bound: float | None = None) -> NetConfig:
        bound = action_bound if self.squash_mean else None
        return NetConfig(obs_dim, act_dim, self.hidden, self.n_hidden, self.log_std_init, self.mean_init_scale,
                         bound)


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    info: dict


def collect_batch(net: PolicyNet, env, rng: np.random.Generator, n_envs: int, extra_actions=None) -> tuple[Batch, dict]:
    """Sample ``n_envs`` actions and evaluate them in one call.

    ``extra_actions`` (e.g. the policy mean) ride along in the same
    evaluation; their info is returned separately and never enters the update.
    """
    obs = np.tile(env.observation(), (n_envs, 1))
    mean, log_std, values, _ = net.forward(obs)
    actions = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
    log_probs = gaussian_log_prob(actions, mean, log_std)
    todo = actions if extra_actions is None else np.vstack([actions, np.atleast_2d(extra_actions)])
    rewards, info = env.evaluate_batch(todo)
    extra = {k: np.asarray(v)[n_envs:] for k, v in info.items()}
    extra["reward"] = rewards[n_envs:]
    info = {k: np.asarray(v)[:n_envs] for k, v in info.items()}
    return Batch(obs, actions, log_probs, values, rewards[:n_envs], info), extra


def ppo_loss_and_grads(net: PolicyNet, cfg: PpoConfig, obs, actions, old_log_probs, old_values, returns, adv):
    """Clipped surrogate + clipped value loss; returns (loss, grads, stats)."""
    mean, log_std, v, cache = net.forward(obs)
    b = actions.shape[0]
    logp = gaussian_log_prob(actions, mean, log_std)
    ratio = np.exp(logp - old_log_probs)
    lo, hi = 1 - cfg.clip_eps, 1 + cfg.clip_eps
    surr1 = ratio * adv
    surr2 = np.clip(ratio, lo, hi) * adv
    pol_loss = -np.mean(np.minimum(surr1, surr2))
    # derivative of the min w.r.t. log-prob: zero where the clipped branch binds
    use1 = surr1 <= surr2
    inside = (ratio > lo) & (ratio < hi)
    d_logp = -(adv * ratio * (use1 | inside)) / b

    v_clip = old_values + np.clip(v - old_values, -cfg.value_clip, cfg.value_clip)
    e1, e2 = (v - returns) ** 2, (v_clip - returns) ** 2
    val_loss = 0.5 * np.mean(np.maximum(e1, e2))
    pick1 = e1 >= e2
    v_inside = np.abs(v - old_values) < cfg.value_clip
    d_v = cfg.value_coef * np.where(pick1, v - returns, (v_clip - returns) * v_inside) / b

    ent = gaussian_entropy(log_std)
    loss = pol_loss + cfg.value_coef * val_loss - cfg.entropy_coef * ent

    inv_var = np.exp(-2 * log_std)
    diff = actions - mean
    d_mean = d_logp[:, None] * diff * inv_var
    d_log_std = d_logp @ (diff**2 * inv_var - 1.0) - cfg.entropy_coef
    grads = net.backward(cache, d_mean, d_log_std, d_v)
    stats = {
        "policy_loss": float(pol_loss), "value_loss": float(val_loss), "entropy": ent,
        "approx_kl": float(np.mean(old_log_probs - logp)),
        "clip_frac": float(np.mean(~inside)), "ratio_dev": float(np.max(np.abs(ratio - 1))),
    }
    return float(loss), grads, stats


def ppo_update(net: PolicyNet, opt: Adam, batch: Batch, cfg: PpoConfig, rng: np.random.Generator) -> dict:
    """Epochs of minibatch steps on one batch.  A non-finite loss or gradient
    restores the parameters and optimiser state from before the update."""
    returns = batch.rewards
    adv = returns - batch.values
    if cfg.normalize_advantages:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    saved = net.copy_params(), opt.state()
    size = cfg.n_envs // cfg.n_minibatches
    acc: dict = {}
    first_ratio_dev = None
    grad_norm = 0.0
    for _ in range(cfg.n_epochs):
        perm = rng.permutation(cfg.n_envs)
        for j in range(cfg.n_minibatches):
            idx = perm[j * size:(j + 1) * size]
            loss, grads, st = ppo_loss_and_grads(
                net, cfg, batch.obs[idx], batch.actions[idx], batch.log_probs[idx],
                batch.values[idx], returns[idx], adv[idx])
            if first_ratio_dev is None:
                first_ratio_dev = st["ratio_dev"]
            grads, grad_norm = clip_grad_norm(grads, cfg.max_grad_norm)
            if not (math.isfinite(loss) and math.isfinite(grad_norm)):
                net.load_params(saved[0])
                opt.restore(saved[1])
                return {"skipped": 1.0, "first_ratio_dev": float(first_ratio_dev)}
            opt.step(net.params, grads)
            for k, v in st.items():
                acc[k] = acc.get(k, 0.0) + v
    n = cfg.n_epochs * cfg.n_minibatches
    out = {k: v / n for k, v in acc.items()}
    out.update(skipped=0.0, first_ratio_dev=float(first_ratio_dev), grad_norm=float(grad_norm))
    return out


@dataclass
class TrainingLog:
    rows: list = field(default_factory=list)

    def append(self, row: dict) -> None:
        self.rows.append(row)

    @property
    def columns(self) -> list:
        cols: list = []
        for r in self.rows:
            cols.extend(k for k in r if k not in cols)
        return cols

    def column(self, name) -> np.ndarray:
        return np.array([r.get(name, np.nan) for r in self.rows], dtype=float)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=self.columns)
            w.writeheader()
            for r in self.rows:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


@dataclass
class TrainResult:
    net: PolicyNet
    log: TrainingLog
    final_action: np.ndarray
    best_action: np.ndarray
    best_reward: float
    elapsed_s: float
    incidents: list


def _means(prefix: str, info: dict) -> dict:
    out = {}
    for k, v in info.items():
        v = np.asarray(v)
        if v.dtype.kind in "fb" and v.size:
            out[prefix + k] = float(np.mean(v))
    return out


def train(env, cfg: PpoConfig, out_dir=None, checkpoints=CHECKPOINT_UPDATES, callback=None,
          time_limit_s: float | None = None) -> TrainResult:
    """Train a fresh policy on ``env``.

    Every update also evaluates the deterministic policy mean; its metrics
    are logged under ``eval_`` and it is the candidate for ``best_action``.
    Results depend only on ``cfg`` (including its seed) and the environment.
    """
    rng = np.random.default_rng(cfg.seed)
    net = PolicyNet(cfg.net_config(env.obs_dim, env.action_dim, getattr(env, "action_bound", None)), rng)
    opt = Adam(net.params, cfg.lr)
    log = TrainingLog()
    incidents = []
    best_reward, best_action = -math.inf, None
    t0 = time.perf_counter()
    obs1 = env.observation()[None]
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    for upd in range(1, cfg.n_updates + 1):
        mean_action = net.forward(obs1)[0][0]
        batch, ev = collect_batch(net, env, rng, cfg.n_envs, extra_actions=mean_action)
        eval_reward = float(ev["reward"][0])
        if eval_reward > best_reward:
            best_reward, best_action = eval_reward, mean_action.copy()
        stats = ppo_update(net, opt, batch, cfg, rng)
        if stats["skipped"]:
            incidents.append({"update": upd, "reason": "non-finite loss or gradient; update skipped"})
        row = {"update": upd, "reward_mean": float(batch.rewards.mean()),
               "reward_std": float(batch.rewards.std()), "reward_max": float(batch.rewards.max()),
               "eval_reward": eval_reward, "log_std_mean": float(np.mean(net.params["log_std"])),
               "action_mean": float(np.mean(mean_action))}
        row.update(_means("", batch.info))
        row.update({"eval_" + k: float(np.asarray(v)[0]) for k, v in ev.items()
                    if k != "reward" and np.asarray(v).dtype.kind in "fb"})
        row.update(stats)
        log.append(row)
        if out_dir is not None and (upd in checkpoints or upd == cfg.n_updates):
            save_checkpoint(out_dir, upd, net, env)
        if callback is not None and callback(upd, row, net) is False:
            break
        if time_limit_s is not None and time.perf_counter() - t0 > time_limit_s:
            incidents.append({"update": upd, "reason": "time limit reached"})
            break
    final_action = net.forward(obs1)[0][0]
    if best_action is None:
        best_action = final_action
    return TrainResult(net, log, final_action, best_action, best_reward, time.perf_counter() - t0, incidents)


def save_checkpoint(out_dir, update: int, net: PolicyNet, env) -> None:
    net.save(os.path.join(out_dir, f"policy_{update:05d}.txt"))
    mean = net.forward(env.observation()[None])[0][0]
    if hasattr(env, "waveform"):
        from .pulses import write_waveform
        write_waveform(os.path.join(out_dir, f"waveform_{update:05d}.txt"), env.waveform(mean))


class QuadraticEnv:
    """Toy bandit with reward -(a - target)^2 summed over action dimensions."""

    obs_dim = 1

    def __init__(self, target: float = 0.5, action_dim: int = 1):
        self.target = target
        self.action_dim = action_dim

    def observation(self) -> np.ndarray:
        return np.zeros(self.obs_dim)

    def evaluate_batch(self, actions):
        a = np.atleast_2d(actions)
        r = -np.sum((a - self.target) ** 2, axis=-1)
        return r, {"distance": np.abs(a - self.target).max(axis=-1)}


def config_dict(cfg: PpoConfig) -> dict:
    return asdict(cfg)
