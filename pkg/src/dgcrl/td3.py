"""TD3 agent: twin critics, target policy smoothing, delayed actor updates."""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .numerics import AdamState, ContractError, Mlp, adam_step, backward, forward_cache, soft_update
from .rng import Rng

STATE_DIM = 2
ACTION_DIM = 2
RESET_MODES = ("actor", "critic", "both")


class InsufficientExperience(RuntimeError):
    pass


@dataclass
class Td3Config:
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    gamma: float = 0.99
    tau: float = 0.005
    action_noise: float = 0.05
    policy_noise: float = 0.02
    noise_clip: float = 0.05
    actor_delay: int = 2
    batch_size: int = 100
    buffer_capacity: int = 100_000
    action_bound: float = 0.1
    actor_hidden: list[int] = field(default_factory=lambda: [400, 300])
    critic_hidden: list[int] = field(default_factory=lambda: [400, 300])

    def validate(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ContractError(f"gamma must be in [0, 1), got {self.gamma}")
        if not 0.0 <= self.tau <= 1.0:
            raise ContractError(f"tau must be in [0, 1], got {self.tau}")
        if self.actor_delay < 1:
            raise ContractError("actor_delay must be >= 1")
        if not 1 <= self.batch_size <= self.buffer_capacity:
            raise ContractError("need 1 <= batch_size <= buffer_capacity")
        for name in ("actor_lr", "critic_lr", "action_bound", "noise_clip"):
            if getattr(self, name) <= 0:
                raise ContractError(f"{name} must be positive")
        for name in ("action_noise", "policy_noise"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be non-negative")
        return self


class ReplayBuffer:
    """Fixed-capacity ring buffer backed by preallocated arrays."""

    def __init__(self, capacity: int, state_dim=STATE_DIM, action_dim=ACTION_DIM):
        self.capacity = int(capacity)
        self.states = np.zeros((self.capacity, state_dim))
        self.actions = np.zeros((self.capacity, action_dim))
        self.rewards = np.zeros(self.capacity)
        self.next_states = np.zeros((self.capacity, state_dim))
        self.dones = np.zeros(self.capacity)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, state, action, reward, next_state, done):
        i = self.cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = float(done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def clear(self):
        self.cursor = 0
        self.size = 0

    def oldest(self) -> int:
        """Storage index of the oldest live element."""
        return self.cursor if self.size == self.capacity else 0

    def batch(self, idx: np.ndarray):
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx], self.dones[idx])


class Td3Agent:
    """Deterministic actor with tanh output scaled to the action bound.

    Critics see (state, action / action_bound) so both halves of their input
    are O(1).
    """

    def __init__(self, config: Td3Config, rng: Rng):
        self.config = config.validate()
        self.rng = rng
        self.buffer = ReplayBuffer(config.buffer_capacity)
        self.update_counter = 0
        self._build_actor()
        self._build_critics()

    def _build_actor(self):
        c = self.config
        self.actor = Mlp.init([STATE_DIM, *c.actor_hidden, ACTION_DIM],
                              self.rng.stream("init"), "tanh")
        self.actor_target = self.actor.copy()
        self.actor_opt = AdamState.for_params(self.actor.params(), lr=c.actor_lr)

    def _build_critics(self):
        c = self.config
        sizes = [STATE_DIM + ACTION_DIM, *c.critic_hidden, 1]
        self.critic1 = Mlp.init(sizes, self.rng.stream("init"))
        self.critic2 = Mlp.init(sizes, self.rng.stream("init"))
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()
        self.critic1_opt = AdamState.for_params(self.critic1.params(), lr=c.critic_lr)
        self.critic2_opt = AdamState.for_params(self.critic2.params(), lr=c.critic_lr)

    def networks(self) -> dict[str, Mlp]:
        return {
            "actor": self.actor, "actor_target": self.actor_target,
            "critic1": self.critic1, "critic2": self.critic2,
            "critic1_target": self.critic1_target, "critic2_target": self.critic2_target,
        }

    def act(self, state) -> np.ndarray:
        """Deterministic policy output for one state (already within the bound)."""
        x = np.asarray(state, dtype=np.float64).reshape(1, -1)
        if x.shape[1] != STATE_DIM:
            raise ContractError(f"state length mismatch: expected {STATE_DIM}, got {x.shape[1]}")
        u, _ = forward_cache(self.actor, x)
        return self.config.action_bound * u[0]

    def select_action(self, state, noise_scale: float = 0.0) -> np.ndarray:
        bound = self.config.action_bound
        a = self.act(state)
        bad = np.flatnonzero(~np.isfinite(a))
        if bad.size:
            raise FloatingPointError(f"non-finite actor output in component {int(bad[0])}")
        if noise_scale > 0.0:
            a = a + self.rng.stream("action-noise").normal(noise_scale * bound, size=ACTION_DIM)
        return np.clip(a, -bound, bound)

    def store(self, transition):
        self.buffer.add(transition.state, transition.action, transition.reward,
                        transition.next_state, transition.done)

    def critic_targets(self, rewards, next_states, dones, noise):
        """Bootstrapped regression target; `noise` is the already-clipped smoothing noise."""
        c = self.config
        u2, _ = forward_cache(self.actor_target, next_states)
        a2 = np.clip(c.action_bound * u2 + noise, -c.action_bound, c.action_bound)
        x2 = np.hstack([next_states, a2 / c.action_bound])
        q1, _ = forward_cache(self.critic1_target, x2)
        q2, _ = forward_cache(self.critic2_target, x2)
        return rewards + c.gamma * (1.0 - dones) * np.minimum(q1[:, 0], q2[:, 0])

    def train_step(self):
        """One TD3 update. Returns (critic_loss, actor_loss or None)."""
        c = self.config
        n = c.batch_size
        if self.buffer.size < n:
            raise InsufficientExperience(
                f"insufficient experience: {self.buffer.size} transitions, batch needs {n}"
            )
        idx = self.rng.stream("replay").integers(self.buffer.size, size=n)
        s, a, r, s2, d = self.buffer.batch(idx)
        noise = self.rng.stream("policy-noise").normal(c.policy_noise, size=(n, ACTION_DIM))
        np.clip(noise, -c.noise_clip, c.noise_clip, out=noise)
        y = self.critic_targets(r, s2, d, noise)

        x = np.hstack([s, a / c.action_bound])
        critic_loss = 0.0
        for net, opt in ((self.critic1, self.critic1_opt), (self.critic2, self.critic2_opt)):
            q, acts = forward_cache(net, x)
            err = q[:, 0] - y
            critic_loss += float(np.mean(err * err))
            grads, _ = backward(net, acts, (2.0 / n) * err[:, None])
            adam_step(net.params(), grads, opt)

        self.update_counter += 1
        actor_loss = None
        if self.update_counter % c.actor_delay == 0:
            u, actor_acts = forward_cache(self.actor, s)
            q, critic_acts = forward_cache(self.critic1, np.hstack([s, u]))
            actor_loss = -float(np.mean(q))
            _, dx = backward(self.critic1, critic_acts, np.full((n, 1), -1.0 / n))
            grads, _ = backward(self.actor, actor_acts, dx[:, STATE_DIM:])
            adam_step(self.actor.params(), grads, self.actor_opt)
            soft_update(self.actor_target, self.actor, c.tau)
            soft_update(self.critic1_target, self.critic1, c.tau)
            soft_update(self.critic2_target, self.critic2, c.tau)
        return critic_loss, actor_loss

    def reset_components(self, mode: str = "both"):
        mode = mode.lower()
        if mode not in RESET_MODES:
            raise ContractError(f"reset mode must be one of {RESET_MODES}, got {mode!r}")
        if mode in ("actor", "both"):
            self._build_actor()
        if mode in ("critic", "both"):
            self._build_critics()
        self.buffer.clear()
        return self


def reset_components(agent: Td3Agent, mode: str = "both") -> Td3Agent:
    return agent.reset_components(mode)


# Snapshot layout (little-endian):
#   8 bytes   magic b"DGCRLAG1"
#   4 bytes   uint32 header length L
#   L bytes   UTF-8 JSON header: version, config, update_counter, network layer sizes
#   then, for each network in sorted-name order, every parameter of
#   Mlp.params() as raw float64 in C order.
SNAPSHOT_MAGIC = b"DGCRLAG1"
SNAPSHOT_VERSION = 1


def save_agent(path, agent: Td3Agent):
    nets = agent.networks()
    header = {
        "version": SNAPSHOT_VERSION,
        "config": asdict(agent.config),
        "update_counter": agent.update_counter,
        "networks": {k: [nets[k].layer_sizes, nets[k].output_activation] for k in sorted(nets)},
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in sorted(nets):
            for p in nets[name].params():
                fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_agent(path, rng: Rng | None = None) -> Td3Agent:
    with open(path, "rb") as fh:
        if fh.read(8) != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not an agent snapshot")
        (n,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(n))
        if header["version"] != SNAPSHOT_VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {header['version']}")
        agent = Td3Agent(Td3Config(**header["config"]), rng or Rng(0))
        agent.update_counter = header["update_counter"]
        nets = agent.networks()
        for name in sorted(header["networks"]):
            for p in nets[name].params():
                p[...] = np.frombuffer(fh.read(p.size * 8), dtype="<f8").reshape(p.shape)
    return agent
