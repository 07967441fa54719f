"""Small analytic control tasks with heterogeneous scripted data collectors.

All dynamics are deterministic.  ``step(state, action, t)`` clamps the action
to the box, returns ``(next_state, reward, done)`` and sets ``done`` on an
environmental terminal or, when ``t`` is given, on reaching the horizon.
``dynamics(state, action)`` is the pure, horizon-free core and reports
whether the transition ended the episode environmentally.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class EnvSpec:
    name: str
    state_dim: int
    action_dim: int
    action_bound: float
    horizon: int
    gamma: float = 0.99

    def __post_init__(self):
        if self.action_bound <= 0:
            raise ConfigError("action bound must be positive")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")


class Env:
    spec: EnvSpec
    modes: tuple = ()
    expert_mode: str = ""
    # tasks that share the dynamics but differ in reward
    tasks: tuple = ()
    task = None
    reward_range = (0.0, 1.0)

    @property
    def env_id(self):
        return self.spec.name if self.task is None else f"{self.spec.name}:{self.task}"

    def clip_action(self, action):
        b = self.spec.action_bound
        return np.clip(np.asarray(action, dtype=np.float64), -b, b)

    def reset(self, rng=None):
        raise NotImplementedError

    def transition(self, state, action):
        raise NotImplementedError

    def reward(self, state, action, next_state, task=None):
        raise NotImplementedError

    def dynamics(self, state, action):
        """Pure ``(next_state, reward, terminal)``; ignores the horizon."""
        state = np.asarray(state, dtype=np.float64)
        action = self.clip_action(action)
        nxt = self.transition(state, action)
        r = self.reward(state, action, nxt)
        return nxt, r, self.is_terminal(state, nxt)

    def is_terminal(self, state, next_state):
        return False

    def step(self, state, action, t=None):
        nxt, r, terminal = self.dynamics(state, action)
        return nxt, r, terminal or (t is not None and t + 1 >= self.spec.horizon)

    def expert_action(self, mode, state, rng):
        raise NotImplementedError

    def _noisy(self, action, rng, sigma_frac=0.1):
        b = self.spec.action_bound
        noise = rng.normal(0.0, sigma_frac * b, size=self.spec.action_dim) if rng is not None else 0.0
        return np.clip(action + noise, -b, b)

    def _check_mode(self, mode):
        if mode not in self.modes:
            raise ConfigError(f"unknown mode {mode!r} for {self.spec.name}; expected one of {self.modes}")

    def success(self, ret):
        return ret > 0.5


def _toward(pos, target, bound):
    """Velocity command toward ``target``, largest component at most ``bound``."""
    d = np.asarray(target, dtype=np.float64) - pos
    m = np.max(np.abs(d))
    return d if m <= bound else d * (bound / m)


def _segment_dist(p, q, c):
    d = q - p
    dd = float(d @ d)
    u = 0.0 if dd == 0.0 else float(np.clip((c - p) @ d / dd, 0.0, 1.0))
    return float(np.linalg.norm(p + u * d - c))


class ObstacleNav2D(Env):
    """Reach the goal above a round obstacle that sits on the straight path.

    Two scripted experts detour left or right of the obstacle, so the data
    action distribution at the start state is bimodal.
    """

    modes = ("left", "right")
    expert_mode = "left"
    start = np.array([0.0, 0.0])
    goal = np.array([0.0, 1.0])
    center = np.array([0.0, 0.5])
    radius = 0.15
    goal_tol = 0.05
    waypoint_dx = 0.22
    arena = (np.array([-1.0, -0.5]), np.array([1.0, 1.5]))

    def __init__(self):
        self.spec = EnvSpec("obstacle-nav", 2, 2, 0.1, 60)

    def reset(self, rng=None):
        return self.start.copy()

    def transition(self, state, action):
        return np.clip(state + action, *self.arena)

    def collided(self, state, next_state):
        return _segment_dist(state, next_state, self.center) < self.radius

    def reached(self, next_state):
        return float(np.linalg.norm(next_state - self.goal)) < self.goal_tol

    def reward(self, state, action, next_state, task=None):
        state, next_state = np.asarray(state), np.asarray(next_state)
        if self.collided(state, next_state):
            return 0.0
        return 1.0 if self.reached(next_state) else 0.0

    def is_terminal(self, state, next_state):
        state, next_state = np.asarray(state), np.asarray(next_state)
        return self.collided(state, next_state) or self.reached(next_state)

    def expert_action(self, mode, state, rng):
        self._check_mode(mode)
        state = np.asarray(state, dtype=np.float64)
        side = -1.0 if mode == "left" else 1.0
        waypoint = np.array([side * self.waypoint_dx, self.center[1]])
        if state[1] < self.center[1] - 1e-9 and np.linalg.norm(state - waypoint) > 0.03:
            target = waypoint
        else:
            target = self.goal
        return self._noisy(_toward(state, target, self.spec.action_bound), rng)


class MultiTaskPoint(Env):
    """1-D point mass with drag; forward / backward / still tasks share dynamics.

    State is (position, velocity); ``v' = v + 0.1 (a - v)`` and ``x' = x + 0.1 v'``.
    Rewards are functions of the next velocity only.
    """

    modes = ("forward", "backward", "still")
    tasks = ("forward", "backward", "still")
    dt = 0.1
    velocity_cap = 1.0
    reward_range = (-1.0, 1.0)

    def __init__(self, task="forward"):
        if task not in self.tasks:
            raise ConfigError(f"unknown task {task!r} for multitask-point")
        self.task = task
        self.spec = EnvSpec("multitask-point", 2, 1, 1.0, 50)

    @property
    def expert_mode(self):
        return self.task

    def reset(self, rng=None):
        return np.zeros(2)

    def transition(self, state, action):
        v = state[1] + self.dt * (float(action[0]) - state[1])
        return np.array([state[0] + self.dt * v, v])

    def reward(self, state, action, next_state, task=None):
        task = task or self.task
        v = float(next_state[1])
        if task == "forward":
            return v
        if task == "backward":
            return -v
        if task == "still":
            return -abs(v)
        raise ConfigError(f"unknown reward function {task!r}")

    def expert_action(self, mode, state, rng):
        self._check_mode(mode)
        v = float(np.asarray(state)[1])
        if mode == "forward":
            a = 1.0 if v < self.velocity_cap else 0.0
        elif mode == "backward":
            a = -1.0 if v > -self.velocity_cap else 0.0
        else:
            a = 0.0
        return self._noisy(np.array([a]), rng)

    def best_return(self):
        """Return of full force in the task direction for a whole episode."""
        t = np.arange(1, self.spec.horizon + 1)
        return float(np.sum(1.0 - (1.0 - self.dt) ** t))

    def success(self, ret):
        return ret > 0.5 * self.best_return() if self.task != "still" else ret > -1.0


class SparseMaze(Env):
    """U-shaped corridor in the unit square; reward 1 (terminal) in the goal disc.

    The inner wall block ``0.35 < x < 0.65, y > 0.35`` separates the start
    (top of the left arm) from the goal (top of the right arm).
    """

    modes = ("expert", "noisy")
    expert_mode = "expert"
    start = np.array([0.175, 0.85])
    goal = np.array([0.825, 0.85])
    goal_radius = 0.1
    block = (0.35, 0.65, 0.35)
    waypoints = (np.array([0.175, 0.175]), np.array([0.825, 0.175]))
    noise_levels = {"expert": 0.1, "noisy": 3.0}

    def __init__(self):
        self.spec = EnvSpec("sparse-maze", 2, 2, 0.05, 120)

    def reset(self, rng=None):
        return self.start.copy()

    def _blocked(self, p):
        x0, x1, y0 = self.block
        return x0 < p[0] < x1 and p[1] > y0

    def transition(self, state, action):
        cand = np.clip(state + action, 0.0, 1.0)
        if not self._blocked(cand):
            return cand
        for trial in (np.array([cand[0], state[1]]), np.array([state[0], cand[1]])):
            if not self._blocked(trial):
                return trial
        return state.copy()

    def in_goal(self, p):
        return float(np.linalg.norm(np.asarray(p) - self.goal)) < self.goal_radius

    def reward(self, state, action, next_state, task=None):
        return 1.0 if self.in_goal(next_state) else 0.0

    def is_terminal(self, state, next_state):
        return self.in_goal(next_state)

    def expert_action(self, mode, state, rng):
        self._check_mode(mode)
        state = np.asarray(state, dtype=np.float64)
        if state[0] < 0.5 and state[1] > 0.25:
            target = self.waypoints[0]
        elif state[0] < 0.75:
            target = self.waypoints[1]
        else:
            target = self.goal
        return self._noisy(_toward(state, target, self.spec.action_bound), rng, self.noise_levels[mode])


ENVS = {"obstacle-nav": ObstacleNav2D, "multitask-point": MultiTaskPoint, "sparse-maze": SparseMaze}


def split_env_id(env_id):
    name, _, task = env_id.partition(":")
    return name, (task or None)


def make_env(env_id):
    """Build an env from ``"name"`` or ``"name:task"`` (multitask-point only)."""
    name, task = split_env_id(env_id)
    if name not in ENVS:
        raise ConfigError(f"unknown env {name!r}; expected one of {sorted(ENVS)}")
    if name == "multitask-point":
        return MultiTaskPoint(task or "forward")
    if task is not None:
        raise ConfigError(f"env {name!r} has no tasks")
    return ENVS[name]()


def reset(env, rng=None):
    return env.reset(rng)


def step(env, state, action, t=None):
    return env.step(state, action, t)


def scripted_expert(env, mode, state, rng):
    return env.expert_action(mode, state, rng)


def rollout(env, policy, rng=None, max_steps=None):
    """Run one episode of ``policy(state) -> action``; returns (return, n_steps, states)."""
    s = env.reset(rng)
    ret, states = 0.0, [s]
    horizon = env.spec.horizon if max_steps is None else max_steps
    for t in range(horizon):
        s, r, done = env.step(s, policy(s), t)
        ret += r
        states.append(s)
        if done:
            return ret, t + 1, states
    return ret, horizon, states
