"""Command-line front end: ``analyze``, ``simulate``, ``scenario`` and ``check``.

Configs are JSON files (``-`` reads standard input, ``builtin:NAME`` loads a
bundled scenario). Exit codes: 0 success, 2 parse or validation error,
3 analysis failure, 4 divergence.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

from .ddesim import (
    ConfigError,
    DelayFunction,
    SimConfig,
    SimulationDiverged,
    SwitchingSchedule,
    Trajectory,
    error_metrics,
    integrate,
    seeded_initial_state,
    validate_delay_against_bound,
)
from .digraph import GraphError, LeaderTopology, WeightedDigraph, leader_globally_reachable
from .matops import LinAlgError
from .stability import (
    AnalysisError,
    FixedAnalysis,
    SwitchedAnalysis,
    analyze_fixed,
    analyze_switched,
    fixed_constants,
    h_matrix,
    switched_constants,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ANALYSIS = 3
EXIT_DIVERGED = 4

DEFAULT_SEED = 7


class ParseError(ValueError):
    """Config problem; the message names the offending field."""


# --------------------------------------------------------------------------
# scenario configs


@dataclass(frozen=True)
class GraphSpec:
    name: str
    arcs: tuple[tuple[int, int, float], ...]
    leader_arcs: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class ScenarioConfig:
    agents: int
    graphs: tuple[GraphSpec, ...]
    order: tuple[str, ...]
    dwell: float
    gain_k: float
    q: float
    delay_type: str
    delay_param: float
    t_end: float
    dt: float
    v0: float = 1.0
    x0_init: float = 0.0
    init_seed: int | None = DEFAULT_SEED
    x_init: tuple[float, ...] | None = None
    v_init: tuple[float, ...] | None = None

    def graph_index(self) -> dict[str, int]:
        return {g.name: i for i, g in enumerate(self.graphs)}

    def topologies(self) -> tuple[LeaderTopology, ...]:
        out = []
        for g in self.graphs:
            b = [0.0] * self.agents
            for i, w in g.leader_arcs:
                b[i - 1] = w
            out.append(LeaderTopology(WeightedDigraph(self.agents, g.arcs), tuple(b)))
        return tuple(out)

    def delay(self) -> DelayFunction:
        return DelayFunction(self.delay_type, self.delay_param)

    def schedule(self) -> SwitchingSchedule:
        idx = self.graph_index()
        return SwitchingSchedule(tuple(idx[name] for name in self.order), self.dwell)

    def initial_state(self, seed: int | None = None):
        seed = self.init_seed if seed is None else seed
        if seed is None:
            return np.array(self.x_init, dtype=float), np.array(self.v_init, dtype=float)
        return seeded_initial_state(self.agents, seed, self.x0_init, self.v0)

    def sim_config(self, seed: int | None = None) -> SimConfig:
        x, v = self.initial_state(seed)
        return SimConfig(
            topologies=self.topologies(),
            schedule=self.schedule(),
            k=self.gain_k,
            delay=self.delay(),
            v0=self.v0,
            x0_init=self.x0_init,
            x_init=x,
            v_init=v,
            t_end=self.t_end,
            dt=self.dt,
        )

    def to_dict(self) -> dict[str, Any]:
        key = "amplitude" if self.delay_type == "abs_cos" else "value"
        sim: dict[str, Any] = {"t_end": self.t_end, "dt": self.dt, "v0": self.v0, "x0_init": self.x0_init}
        if self.init_seed is not None:
            sim["init_seed"] = self.init_seed
        else:
            sim["x_init"] = list(self.x_init)
            sim["v_init"] = list(self.v_init)
        return {
            "agents": self.agents,
            "graphs": [
                {
                    "name": g.name,
                    "arcs": [list(a) for a in g.arcs],
                    "leader_arcs": [list(a) for a in g.leader_arcs],
                }
                for g in self.graphs
            ],
            "switching": {"order": list(self.order), "dwell": self.dwell},
            "gain_k": self.gain_k,
            "q": self.q,
            "delay": {"type": self.delay_type, key: self.delay_param},
            "sim": sim,
        }

    @classmethod
    def from_dict(cls, doc: Any) -> "ScenarioConfig":
        return _parse_config(doc)


def _req(doc, key, where):
    if not isinstance(doc, dict):
        raise ParseError(f"{where or 'config'}: expected an object")
    if key not in doc:
        raise ParseError(f"{where + '.' if where else ''}{key}: missing required field")
    return doc[key]


def _num(value, where, *, positive=False, nonneg=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ParseError(f"{where}: expected a finite number, got {value!r}")
    if positive and not value > 0:
        raise ParseError(f"{where}: must be positive, got {value!r}")
    if nonneg and value < 0:
        raise ParseError(f"{where}: must be nonnegative, got {value!r}")
    return float(value)


def _int(value, where) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{where}: expected an integer, got {value!r}")
    return value


def _list(value, where) -> list:
    if not isinstance(value, list):
        raise ParseError(f"{where}: expected a list, got {type(value).__name__}")
    return value


def _parse_config(doc: Any) -> ScenarioConfig:
    n = _int(_req(doc, "agents", ""), "agents")
    if n < 1:
        raise ParseError(f"agents: must be at least 1, got {n}")

    graphs = []
    names = set()
    for gi, gdoc in enumerate(_list(_req(doc, "graphs", ""), "graphs")):
        where = f"graphs[{gi}]"
        name = _req(gdoc, "name", where)
        if not isinstance(name, str) or not name:
            raise ParseError(f"{where}.name: expected a nonempty string")
        if name in names:
            raise ParseError(f"{where}.name: duplicate graph name {name!r}")
        names.add(name)
        arcs = []
        for ai, arc in enumerate(_list(_req(gdoc, "arcs", where), f"{where}.arcs")):
            aw = f"{where}.arcs[{ai}]"
            if not isinstance(arc, list) or len(arc) != 3:
                raise ParseError(f"{aw}: expected [i, j, w]")
            arcs.append((_int(arc[0], aw + "[0]"), _int(arc[1], aw + "[1]"), _num(arc[2], aw + "[2]", positive=True)))
        leader = []
        for li, la in enumerate(_list(gdoc.get("leader_arcs", []), f"{where}.leader_arcs")):
            lw = f"{where}.leader_arcs[{li}]"
            if not isinstance(la, list) or len(la) != 2:
                raise ParseError(f"{lw}: expected [i, b_i]")
            i = _int(la[0], lw + "[0]")
            if not 1 <= i <= n:
                raise ParseError(f"{lw}[0]: node {i} outside 1..{n}")
            leader.append((i, _num(la[1], lw + "[1]", nonneg=True)))
        if len({i for i, _ in leader}) != len(leader):
            raise ParseError(f"{where}.leader_arcs: duplicate agent")
        try:
            WeightedDigraph(n, tuple(arcs))
        except GraphError as exc:
            raise ParseError(f"{where}.arcs: {exc}") from None
        graphs.append(GraphSpec(name, tuple(arcs), tuple(leader)))
    if not graphs:
        raise ParseError("graphs: at least one graph is required")

    sw = doc.get("switching", {"order": [graphs[0].name], "dwell": 1.0})
    order = _list(_req(sw, "order", "switching"), "switching.order")
    if not order:
        raise ParseError("switching.order: must not be empty")
    for oi, name in enumerate(order):
        if name not in names:
            raise ParseError(f"switching.order[{oi}]: unknown graph {name!r}")
    dwell = _num(sw.get("dwell", 1.0), "switching.dwell", positive=True)

    gain_k = _num(_req(doc, "gain_k", ""), "gain_k", nonneg=True)
    q = _num(doc.get("q", 1.05), "q")

    ddoc = _req(doc, "delay", "")
    dtype = _req(ddoc, "type", "delay")
    if dtype == "abs_cos":
        dparam = _num(_req(ddoc, "amplitude", "delay"), "delay.amplitude", nonneg=True)
    elif dtype == "constant":
        dparam = _num(_req(ddoc, "value", "delay"), "delay.value", nonneg=True)
    else:
        raise ParseError(f"delay.type: expected 'abs_cos' or 'constant', got {dtype!r}")

    sim = _req(doc, "sim", "")
    t_end = _num(_req(sim, "t_end", "sim"), "sim.t_end", positive=True)
    dt = _num(_req(sim, "dt", "sim"), "sim.dt", positive=True)
    v0 = _num(sim.get("v0", 1.0), "sim.v0")
    x0_init = _num(sim.get("x0_init", 0.0), "sim.x0_init")
    seed = x_init = v_init = None
    if "x_init" in sim or "v_init" in sim:
        vecs = []
        for key in ("x_init", "v_init"):
            vec = _list(_req(sim, key, "sim"), f"sim.{key}")
            if len(vec) != n:
                raise ParseError(f"sim.{key}: expected {n} entries, got {len(vec)}")
            vecs.append(tuple(_num(x, f"sim.{key}[{i}]") for i, x in enumerate(vec)))
        x_init, v_init = vecs
    else:
        seed = _int(sim.get("init_seed", DEFAULT_SEED), "sim.init_seed")

    cfg = ScenarioConfig(
        agents=n,
        graphs=tuple(graphs),
        order=tuple(order),
        dwell=dwell,
        gain_k=gain_k,
        q=q,
        delay_type=dtype,
        delay_param=dparam,
        t_end=t_end,
        dt=dt,
        v0=v0,
        x0_init=x0_init,
        init_seed=seed,
        x_init=x_init,
        v_init=v_init,
    )
    try:
        cfg.sim_config()
    except (ConfigError, GraphError) as exc:
        raise ParseError(f"sim: {exc}") from None
    return cfg


_G1 = GraphSpec("G1", ((1, 2, 1.0), (2, 1, 1.0), (4, 2, 1.0), (4, 3, 1.0)), ((1, 1.0), (3, 1.0)))
_G2 = GraphSpec("G2", ((1, 2, 1.0), (2, 1, 1.0), (3, 4, 1.0), (4, 3, 1.0)), ((1, 1.0), (3, 1.0)))

BUILTIN_SCENARIOS = {
    "fig1": ScenarioConfig(4, (_G1,), ("G1",), 1.0, 3.0, 1.05, "abs_cos", 0.03, 50.0, 1e-3),
    "fig2": ScenarioConfig(4, (_G2,), ("G2",), 1.0, 3.0, 1.05, "abs_cos", 0.03, 50.0, 1e-3),
    "switched": ScenarioConfig(4, (_G1, _G2), ("G1", "G2"), 1.0, 9.0, 1.05, "abs_cos", 0.015, 50.0, 1e-3),
}


def builtin_scenario(name: str) -> ScenarioConfig:
    try:
        return BUILTIN_SCENARIOS[name]
    except KeyError:
        raise ParseError(
            f"unknown scenario {name!r}; available: {', '.join(sorted(BUILTIN_SCENARIOS))}"
        ) from None


def load_config(source: str) -> ScenarioConfig:
    if source.startswith("builtin:"):
        return builtin_scenario(source.split(":", 1)[1])
    try:
        text = sys.stdin.read() if source == "-" else open(source, encoding="utf-8").read()
    except OSError as exc:
        raise ParseError(f"cannot read config {source!r}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return ScenarioConfig.from_dict(doc)


# --------------------------------------------------------------------------
# reports


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


_MATRIX_FIELDS = {"h", "p_bar", "q_matrix"}


def report_to_dict(res: FixedAnalysis | SwitchedAnalysis, scenario: str | None = None) -> dict[str, Any]:
    mode = "fixed" if isinstance(res, FixedAnalysis) else "switched"
    analysis = {name: _jsonable(value) for name, value in res.__dict__.items() if name not in ("norm", "warnings")}
    return {
        "mode": mode,
        "scenario": scenario,
        "analysis": analysis,
        "metadata": {
            "norm": res.norm,
            "k_star_readings": {
                "formula": _jsonable(res.k_star_formula),
                "alternate": _jsonable(res.k_star_alternate),
                "gate": "max of both readings",
            },
            "k_evaluated": res.k,
            "warnings": list(res.warnings),
        },
    }


def report_from_dict(doc: dict[str, Any]) -> FixedAnalysis | SwitchedAnalysis:
    a = dict(doc["analysis"])
    meta = doc["metadata"]
    if doc["mode"] == "fixed":
        for name in _MATRIX_FIELDS:
            a[name] = np.array(a[name], dtype=float)
        scalars = {k: float(v) for k, v in a.items() if k not in _MATRIX_FIELDS}
        return FixedAnalysis(**{**a, **scalars}, norm=meta["norm"], warnings=tuple(meta["warnings"]))
    a["h_list"] = tuple(np.array(h, dtype=float) for h in a["h_list"])
    a["balanced"] = tuple(bool(b) for b in a["balanced"])
    scalars = {k: float(v) for k, v in a.items() if k not in ("h_list", "balanced")}
    return SwitchedAnalysis(**{**a, **scalars}, norm=meta["norm"], warnings=tuple(meta["warnings"]))


def _resolve_mode(cfg: ScenarioConfig, mode: str | None) -> str:
    if mode:
        return mode
    return "switched" if len(set(cfg.order)) > 1 else "fixed"


def run_analysis(cfg: ScenarioConfig, mode: str | None = None):
    mode = _resolve_mode(cfg, mode)
    topos = cfg.topologies()
    idx = cfg.graph_index()
    if mode == "fixed":
        return analyze_fixed(topos[idx[cfg.order[0]]], cfg.gain_k, cfg.q)
    members = [topos[i] for i in dict.fromkeys(idx[name] for name in cfg.order)]
    return analyze_switched(members, cfg.gain_k, cfg.q)


# --------------------------------------------------------------------------
# CSV


def csv_header(n: int) -> list[str]:
    cols = ["t", "sigma", "x0"]
    for prefix in ("x", "v", "errx", "errv"):
        cols += [f"{prefix}_{i}" for i in range(1, n + 1)]
    return cols


def write_csv(tr: Trajectory, stream, trailer: str | None = None) -> None:
    n = tr.agent_x.shape[1]
    stream.write(",".join(csv_header(n)) + "\n")
    fmt = "%.17g"
    for r in range(len(tr)):
        row = [fmt % tr.times[r], str(int(tr.sigma[r]) + 1), fmt % tr.leader_x[r]]
        for block in (tr.agent_x, tr.agent_v, tr.err_x, tr.err_v):
            row += [fmt % val for val in block[r]]
        stream.write(",".join(row) + "\n")
    if trailer:
        stream.write(f"# {trailer}\n")


# --------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    res = run_analysis(cfg, args.mode)
    json.dump(report_to_dict(res, args.config), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    sim = cfg.sim_config(args.seed)
    status = EXIT_OK
    trailer = None
    try:
        tr = integrate(sim)
    except SimulationDiverged as exc:
        tr = exc.trajectory
        trailer = f"diverged: aborted after t={exc.t_last:.17g}"
        status = EXIT_DIVERGED
    try:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(tr, fh, trailer)
    except OSError as exc:
        raise ParseError(f"cannot write {args.out!r}: {exc.strerror}") from None
    m = error_metrics(tr)
    settle = "none" if m.settle_time is None else f"{m.settle_time:g}"
    print(
        f"wrote {len(tr)} rows to {args.out}; final |errx|={m.final_err_x:.3e} "
        f"|errv|={m.final_err_v:.3e} settle={settle}"
    )
    if trailer:
        print(trailer, file=sys.stderr)
    return status


def cmd_scenario(args) -> int:
    cfg = builtin_scenario(args.name)
    json.dump(cfg.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def check_conditions(cfg: ScenarioConfig, mode: str | None = None) -> list[tuple[str, bool, str]]:
    """(name, passed, detail) for leader reachability, the gain threshold and the delay bound."""
    mode = _resolve_mode(cfg, mode)
    topos = cfg.topologies()
    idx = cfg.graph_index()
    if mode == "fixed":
        members = [topos[idx[cfg.order[0]]]]
    else:
        members = [topos[i] for i in dict.fromkeys(idx[name] for name in cfg.order)]
    reachable = all(leader_globally_reachable(t) for t in members)
    out = [("reachability", reachable, "leader globally reachable" if reachable else "leader not globally reachable")]
    if not reachable:
        out.append(("gain", False, "not evaluated: leader not globally reachable"))
        out.append(("delay", False, "not evaluated: leader not globally reachable"))
        return out
    k, q = cfg.gain_k, cfg.q
    if mode == "fixed":
        res = fixed_constants(h_matrix(members[0]), k, q)
    else:
        res = switched_constants([h_matrix(t) for t in members], k, q)
    gain_ok = k > 1 and k > res.k_star
    out.append((
        "gain",
        gain_ok,
        f"k={k:g} {'>' if gain_ok else '<='} k*={res.k_star:.4f} "
        f"(formula {res.k_star_formula:.4f}, alternate reading {res.k_star_alternate:.4f})",
    ))
    delay = cfg.delay()
    if math.isfinite(res.tau) and res.tau > 0:
        ok = validate_delay_against_bound(delay, res.tau)
        out.append(("delay", ok, f"sup r={delay.max_delay:g} {'<' if ok else '>='} tau={res.tau:.4f}"))
    else:
        out.append(("delay", False, f"no admissible delay bound at k={k:g}"))
    return out


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    results = check_conditions(cfg, args.mode)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_ANALYSIS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leaderfollow",
        description="Leader-following consensus with coupling delays: analysis and simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="print the stability report as JSON")
    p.add_argument("config", help="config path, '-' for stdin, or builtin:NAME")
    p.add_argument("--mode", choices=("fixed", "switched"), default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="integrate the closed loop and write a CSV")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override sim.init_seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scenario", help="print a built-in scenario config")
    p.add_argument("name")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("check", help="PASS/FAIL for reachability, gain threshold and delay bound")
    p.add_argument("config")
    p.add_argument("--mode", choices=("fixed", "switched"), default=None)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (AnalysisError, LinAlgError) as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
