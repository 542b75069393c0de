"""Fixed-step simulation of the delayed leader-following closed loop.

Each follower obeys ``x'' = u`` with

    u_i = sum_j a_ij (x_j(t-r) - x_i(t-r)) + b_i (x0(t-r) - x_i(t-r)) + k (v0 - v_i(t))

while the leader moves at constant velocity, ``x0(t) = x0_init + v0 t``.
Integration is classical RK4 with a fixed step. Delayed positions come from
cubic Hermite interpolation of the stored history (positions together with
their derivatives, the velocities), so the scheme keeps fourth order on
smooth stretches. When the delayed instant falls inside the step being
taken, the interpolant spans the step start and the current stage value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .digraph import LeaderTopology, check_common_order

__all__ = [
    "ConfigError",
    "SimulationDiverged",
    "DelayFunction",
    "SwitchingSchedule",
    "SimConfig",
    "Trajectory",
    "ErrorMetrics",
    "control_input",
    "evaluate_delay",
    "validate_delay_against_bound",
    "seeded_initial_state",
    "integrate",
    "error_metrics",
]

DIVERGENCE_LIMIT = 1e9


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DelayFunction:
    """``constant``: r(t) = value; ``abs_cos``: r(t) = value * |cos t|."""

    kind: str
    value: float

    KINDS = ("constant", "abs_cos")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown delay kind {self.kind!r}; expected one of {self.KINDS}")
        if not math.isfinite(self.value) or self.value < 0:
            raise ConfigError(f"delay {self.kind} parameter must be nonnegative, got {self.value}")

    @classmethod
    def constant(cls, value: float) -> "DelayFunction":
        return cls("constant", float(value))

    @classmethod
    def abs_cos(cls, amplitude: float) -> "DelayFunction":
        return cls("abs_cos", float(amplitude))

    @property
    def max_delay(self) -> float:
        return self.value

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.value
        return self.value * abs(math.cos(t))


def evaluate_delay(d: DelayFunction, t: float) -> float:
    if t < 0:
        raise ValueError(f"delay is evaluated for t >= 0, got {t}")
    return d(t)


def validate_delay_against_bound(d: DelayFunction, tau: float) -> bool:
    if not tau > 0:
        raise ValueError(f"delay bound must be positive, got {tau}")
    return d.max_delay < tau


@dataclass(frozen=True)
class SwitchingSchedule:
    """Cycles through ``order`` (topology indices), spending ``dwell`` seconds on each."""

    order: tuple[int, ...]
    dwell: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        if not self.order:
            raise ConfigError("switching order is empty")
        if not self.dwell > 0:
            raise ConfigError(f"dwell must be positive, got {self.dwell}")

    @classmethod
    def fixed(cls, index: int = 0) -> "SwitchingSchedule":
        return cls((index,), 1.0)

    def index_at(self, t: float) -> int:
        # small guard so t = m*dwell computed as m*dt lands on the new slot
        slot = int(math.floor(t / self.dwell + 1e-9))
        return self.order[slot % len(self.order)]


@dataclass(frozen=True)
class SimConfig:
    topologies: tuple[LeaderTopology, ...]
    schedule: SwitchingSchedule
    k: float
    delay: DelayFunction
    v0: float
    x0_init: float
    x_init: np.ndarray
    v_init: np.ndarray
    t_end: float
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "topologies", tuple(self.topologies))
        n = check_common_order(self.topologies)
        x = np.array(self.x_init, dtype=float).reshape(-1)
        v = np.array(self.v_init, dtype=float).reshape(-1)
        if x.shape != (n,) or v.shape != (n,):
            raise ConfigError(f"initial states must have length {n}, got {x.shape[0]} and {v.shape[0]}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise ConfigError("initial states must be finite")
        x.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "x_init", x)
        object.__setattr__(self, "v_init", v)
        for idx in self.schedule.order:
            if not 0 <= idx < len(self.topologies):
                raise ConfigError(f"switching index {idx} outside 0..{len(self.topologies) - 1}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if self.delay.max_delay > 0 and self.dt > self.delay.max_delay / 10 * (1 + 1e-12):
            raise ConfigError(
                f"dt={self.dt} too coarse for max delay {self.delay.max_delay}; need dt <= max_delay/10"
            )
        if not (math.isfinite(self.k) and self.k >= 0):
            raise ConfigError(f"gain k must be nonnegative, got {self.k}")
        if not (math.isfinite(self.v0) and math.isfinite(self.x0_init)):
            raise ConfigError("leader parameters must be finite")

    @property
    def n(self) -> int:
        return self.topologies[0].n

    @property
    def steps(self) -> int:
        return int(math.floor(self.t_end / self.dt + 1e-9))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    leader_x: np.ndarray
    agent_x: np.ndarray
    agent_v: np.ndarray
    err_x: np.ndarray
    err_v: np.ndarray
    sigma: np.ndarray
    v0: float

    def __len__(self):
        return len(self.times)

    def error_norms(self) -> np.ndarray:
        """Max-norm of the stacked error ``(err_x, err_v)`` per sample."""
        if len(self) == 0:
            return np.empty(0)
        return np.maximum(np.abs(self.err_x).max(axis=1), np.abs(self.err_v).max(axis=1))


class SimulationDiverged(ArithmeticError):
    def __init__(self, t_last: float, trajectory: Trajectory):
        super().__init__(f"state diverged after t={t_last:g}")
        self.t_last = t_last
        self.trajectory = trajectory


class _Coupling:
    """Arc list of one topology in array form for the agent-by-agent control law."""

    def __init__(self, topo: LeaderTopology):
        arcs = topo.graph.arcs
        self.n = topo.n
        self.src = np.array([i - 1 for i, _, _ in arcs], dtype=np.intp)
        self.dst = np.array([j - 1 for _, j, _ in arcs], dtype=np.intp)
        self.w = np.array([w for _, _, w in arcs], dtype=float)
        self.b = np.array(topo.leader_weights, dtype=float)

    def __call__(self, k, x_delayed, x0_delayed, v_now, v0):
        pull = self.w * (x_delayed[self.dst] - x_delayed[self.src])
        u = np.bincount(self.src, weights=pull, minlength=self.n)
        return u + self.b * (x0_delayed - x_delayed) + k * (v0 - v_now)


def control_input(t: LeaderTopology, k: float, x_delayed, x0_delayed: float, v_now, v0: float) -> np.ndarray:
    x_delayed = np.asarray(x_delayed, dtype=float)
    v_now = np.asarray(v_now, dtype=float)
    if x_delayed.shape != (t.n,) or v_now.shape != (t.n,):
        raise ValueError(f"state vectors must have length {t.n}")
    return _Coupling(t)(k, x_delayed, float(x0_delayed), v_now, float(v0))


def seeded_initial_state(n: int, seed: int, x0_init: float = 0.0, v0: float = 0.0):
    """Followers spread around the leader: position errors in [-2, 2], velocity errors in [-1, 1]."""
    rng = np.random.default_rng(seed)
    ex = rng.uniform(-2.0, 2.0, n)
    ev = rng.uniform(-1.0, 1.0, n)
    return x0_init + ex, v0 + ev


def _hermite(s, h, xa, va, xb, vb):
    s2 = s * s
    h01 = s2 * (3.0 - 2.0 * s)
    c_a = h * s * (1.0 - s) ** 2
    c_b = h * s2 * (s - 1.0)
    return xa + h01 * (xb - xa) + c_a * va + c_b * vb


def integrate(cfg: SimConfig) -> Trajectory:
    n, steps, dt = cfg.n, cfg.steps, cfg.dt
    k, v0, x00 = cfg.k, cfg.v0, cfg.x0_init
    delay = cfg.delay
    couplings = [_Coupling(t) for t in cfg.topologies]

    times = dt * np.arange(steps + 1)
    xs = np.empty((steps + 1, n))
    vs = np.empty((steps + 1, n))
    sig = np.empty(steps + 1, dtype=np.intp)
    xs[0] = cfg.x_init
    vs[0] = cfg.v_init
    x_hist0 = xs[0].copy()

    def delayed(ts, m, x_stage, v_stage):
        td = ts - delay(ts)
        if td <= 0.0:
            return x_hist0, x00
        x0d = x00 + v0 * td
        tm = times[m]
        if td >= ts:
            return x_stage, x0d
        if td > tm:
            h = ts - tm
            s = (td - tm) / h
            return _hermite(s, h, xs[m], vs[m], x_stage, v_stage), x0d
        j = min(int(td / dt), m - 1)
        s = (td - times[j]) / dt
        if s >= 1.0:
            return xs[j + 1], x0d
        return _hermite(s, dt, xs[j], vs[j], xs[j + 1], vs[j + 1]), x0d

    def accel(ts, m, x, v, coupling):
        xd, x0d = delayed(ts, m, x, v)
        return coupling(k, xd, x0d, v, v0)

    half = dt / 2
    for m in range(steps):
        t = times[m]
        sig[m] = cfg.schedule.index_at(t)
        cp = couplings[sig[m]]
        x, v = xs[m], vs[m]
        a1 = accel(t, m, x, v, cp)
        x2 = x + half * v
        v2 = v + half * a1
        a2 = accel(t + half, m, x2, v2, cp)
        x3 = x + half * v2
        v3 = v + half * a2
        a3 = accel(t + half, m, x3, v3, cp)
        x4 = x + dt * v3
        v4 = v + dt * a3
        a4 = accel(t + dt, m, x4, v4, cp)
        xs[m + 1] = x + dt / 6 * (v + 2 * v2 + 2 * v3 + v4)
        vs[m + 1] = v + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        worst = max(np.abs(xs[m + 1]).max(), np.abs(vs[m + 1]).max())
        if not worst <= DIVERGENCE_LIMIT:
            partial = _assemble(cfg, times[: m + 1], xs[: m + 1], vs[: m + 1], sig[: m + 1])
            raise SimulationDiverged(float(t), partial)
    sig[steps] = cfg.schedule.index_at(times[steps])
    return _assemble(cfg, times, xs, vs, sig)


def _assemble(cfg, times, xs, vs, sig) -> Trajectory:
    leader = cfg.x0_init + cfg.v0 * times
    arrays = dict(
        times=times.copy(),
        leader_x=leader,
        agent_x=xs.copy(),
        agent_v=vs.copy(),
        err_x=xs - leader[:, None],
        err_v=vs - cfg.v0,
        sigma=sig.copy(),
    )
    for arr in arrays.values():
        arr.flags.writeable = False
    return Trajectory(v0=cfg.v0, **arrays)


@dataclass(frozen=True)
class ErrorMetrics:
    final_err_x: float
    final_err_v: float
    settle_time: float | None


def error_metrics(tr: Trajectory, band: float = 0.01, floor: float = 1e-12) -> ErrorMetrics:
    """Final max-norm errors and the time after which the error stays within ``band`` of its start.

    ``floor`` is an absolute allowance so rounding residue around an exact
    equilibrium does not count as leaving the band.
    """
    if len(tr) == 0:
        raise ValueError("empty trajectory")
    norms = tr.error_norms()
    limit = max(band * norms[0], floor)
    outside = np.nonzero(norms > limit)[0]
    if not outside.size:
        settle = float(tr.times[0])
    elif outside[-1] == len(tr) - 1:
        settle = None
    else:
        settle = float(tr.times[outside[-1] + 1])
    return ErrorMetrics(
        final_err_x=float(np.abs(tr.err_x[-1]).max()),
        final_err_v=float(np.abs(tr.err_v[-1]).max()),
        settle_time=settle,
    )
