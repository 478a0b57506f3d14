"""Command-line front end: validate networks, query distances, run and
audit transport scenarios.

Network files are line oriented: ``V <id>`` declares a vertex, ``E <key>
<tail> <head> <weight>`` an edge, ``#`` starts a comment.  Scenarios are
JSON documents pointing at a network file and describing velocity, initial
data, junction matrices, and run parameters.  Exit codes: 0 success, 1
domain failure, 2 file or parse failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calculus import GridFunction, Mesh, integrate, integration_by_parts_residual
from .network import (
    Disconnected,
    EdgeInterior,
    Network,
    NetworkError,
    Vertex,
    WeightedGraph,
    build_network,
    distance,
    locate,
    shortest_path,
    validate_regularity,
)
from .solver import (
    Constant,
    DensityState,
    JunctionRule,
    QuasiLinear,
    TestFunction,
    cfl_dt,
    init_state,
    kirchhoff_residual,
    step,
    total_mass,
    weak_residual,
)


class ParseError(Exception):
    """A network file, scenario, or point spec could not be read."""


# ---------------------------------------------------------------------------
# network files


def parse_graph(path) -> WeightedGraph:
    """Read a line-oriented network file into a weighted graph."""
    vertices = []
    edges = []
    weights = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "V" and len(parts) == 2:
            vertices.append(parts[1])
        elif parts[0] == "E" and len(parts) == 5:
            key, tail, head, w_s = parts[1:]
            try:
                w = float(w_s)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad weight {w_s!r}") from None
            if not w > 0.0:
                raise ParseError(
                    f"{path}:{lineno}: weight must be positive, got {w_s}"
                )
            edges.append((key, tail, head))
            weights[key] = w
        else:
            raise ParseError(f"{path}:{lineno}: unrecognized record {line!r}")
    if not vertices or not edges:
        raise ParseError(f"{path}: network file declares no vertices or no edges")
    return WeightedGraph(
        vertices=frozenset(vertices), edges=tuple(edges), weights=weights
    )


def write_graph(graph: WeightedGraph, path) -> None:
    """Write a graph in the same line-oriented format (round-trip safe)."""
    lines = [f"V {v}" for v in sorted(graph.vertices)]
    for key, tail, head in graph.edges:
        lines.append(f"E {key} {tail} {head} {graph.weights[key]!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_point(net: Network, spec: str):
    """Parse ``v:<id>`` or ``e:<key>:<coordinate>`` into a network point."""
    parts = spec.split(":")
    if parts[0] == "v" and len(parts) == 2:
        return Vertex(parts[1])
    if parts[0] == "e" and len(parts) == 3:
        try:
            x = float(parts[2])
        except ValueError:
            raise ParseError(f"bad coordinate in point spec {spec!r}") from None
        return locate(net, parts[1], x)
    raise ParseError(f"bad point spec {spec!r}, expected v:<id> or e:<key>:<x>")


# ---------------------------------------------------------------------------
# scenarios


@dataclass
class ScenarioConfig:
    """Run description: network, velocity, initial data, junctions, numbers."""

    network_path: Path
    velocity: dict
    initial: dict
    junctions: dict
    t_end: float
    h: float
    cfl: float
    stride: int
    output_dir: Path
    snapshots: bool


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    try:
        network = data["network"]
        velocity = data["velocity"]
        initial = data["initial"]
        t_end = float(data["T"])
        h = float(data["h"])
    except KeyError as exc:
        raise ParseError(f"{path}: missing scenario field {exc}") from None
    return ScenarioConfig(
        network_path=(path.parent / network),
        velocity=velocity,
        initial=initial,
        junctions=data.get("junctions", {"mode": "equal_split"}),
        t_end=t_end,
        h=h,
        cfl=float(data.get("cfl", 0.9)),
        stride=int(data.get("stride", 1)),
        # input paths resolve against the scenario file, outputs against cwd
        output_dir=Path(data.get("output_dir", "out")),
        snapshots=bool(data.get("snapshots", False)),
    )


def _build_model(cfg: ScenarioConfig, net: Network):
    vel = cfg.velocity
    kind = vel.get("kind")
    if kind == "constant":
        if "speeds" in vel:
            table = {str(k): float(v) for k, v in vel["speeds"].items()}
            missing = [e.key for e in net.edges if str(e.key) not in table]
            if missing:
                raise ParseError(f"velocity table misses edges {missing}")
            return Constant({e.key: table[str(e.key)] for e in net.edges})
        return Constant(float(vel["speed"]))
    if kind == "lwr":
        return QuasiLinear(float(vel.get("v_max", 1.0)), float(vel.get("rho_max", 1.0)))
    raise ParseError(f"unknown velocity kind {kind!r}")


def _build_rule(cfg: ScenarioConfig, net: Network) -> JunctionRule:
    junc = cfg.junctions
    mode = junc.get("mode", "equal_split")
    supply_demand = bool(junc.get("supply_demand", mode == "supply_demand"))
    if mode in ("equal_split", "supply_demand"):
        return JunctionRule.equal_split(net, supply_demand=supply_demand)
    if mode == "matrices":
        base = JunctionRule.equal_split(net, supply_demand=supply_demand)
        matrices = dict(base.matrices)
        for name, rows in junc.get("matrices", {}).items():
            if name not in matrices:
                raise ParseError(f"matrix given for unknown junction vertex {name!r}")
            matrices[name] = np.asarray(rows, float)
        return JunctionRule(matrices=matrices, supply_demand=supply_demand)
    raise ParseError(f"unknown junction mode {mode!r}")


def _bump(x: np.ndarray, center: float, width: float, amplitude: float) -> np.ndarray:
    u = (x - center) / (0.5 * width)
    out = np.zeros_like(x)
    inside = np.abs(u) < 1.0
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def _build_initial(cfg: ScenarioConfig, net: Network):
    init = cfg.initial
    kind = init.get("kind")
    if kind == "constant":
        value = float(init["value"])
        return lambda key, x: np.full_like(x, value)
    if kind == "bump":
        edge = str(init["edge"])
        center = float(init["center"])
        width = float(init["width"])
        amplitude = float(init.get("amplitude", 1.0))

        def sampler(key, x):
            if str(key) != edge:
                return np.zeros_like(x)
            return _bump(x, center, width, amplitude)

        return sampler
    if kind == "csv":
        table = {}
        csv_path = cfg.network_path.parent / init["path"]
        try:
            rows = csv_path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ParseError(f"{csv_path}: {exc.strerror or exc}") from None
        for row in rows[1:]:
            if not row.strip():
                continue
            name, x_s, v_s = row.split(",")
            table.setdefault(name, []).append((float(x_s), float(v_s)))

        def sampler(key, x):
            pts = sorted(table.get(str(key), []))
            if not pts:
                return np.zeros_like(x)
            xs = np.array([p[0] for p in pts])
            vs = np.array([p[1] for p in pts])
            return np.interp(x, xs, vs)

        return sampler
    raise ParseError(f"unknown initial kind {kind!r}")


# ---------------------------------------------------------------------------
# simulation driver and outputs


@dataclass
class RunResult:
    times: list
    masses: list
    residual_rows: list  # (t, vertex, residual) per recorded step
    recorded: list  # (step index, state) pairs
    final: DensityState
    steps: int


def run_scenario(cfg: ScenarioConfig, store_all: bool = False) -> RunResult:
    graph = parse_graph(cfg.network_path)
    net = build_network(graph)
    model = _build_model(cfg, net)
    rule = _build_rule(cfg, net)
    state = init_state(net, _build_initial(cfg, net), model, cfg.h)

    times = [state.t]
    masses = [total_mass(state)]
    residual_rows = []
    recorded = [(0, state)]
    n = 0
    slack = 1e-12 * max(1.0, cfg.t_end)
    while cfg.t_end - state.t > slack:
        dt = min(cfl_dt(state, cfg.cfl, cfg.t_end), cfg.t_end - state.t)
        state = step(state, dt, rule)
        n += 1
        if store_all or n % cfg.stride == 0 or cfg.t_end - state.t <= slack:
            times.append(state.t)
            masses.append(total_mass(state))
            entry = state.ledger[-1]
            for v in net.vertices:
                tin, tout = entry.fluxes[v]
                residual_rows.append(
                    (state.t, v, abs(math.fsum(tin) - math.fsum(tout)))
                )
            recorded.append((n, state))
    return RunResult(
        times=times,
        masses=masses,
        residual_rows=residual_rows,
        recorded=recorded,
        final=state,
        steps=n,
    )


def _write_csv(path: Path, header: list, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(c) if isinstance(c, float) else str(c) for c in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


def _polyline(xs, ys, box, xlim, ylim, color) -> str:
    x0, y0, w, h = box
    xmin, xmax = xlim
    ymin, ymax = ylim
    if xmax == xmin:
        xmax = xmin + 1.0
    if ymax == ymin:
        ymax = ymin + 1.0
    pts = " ".join(
        f"{x0 + (x - xmin) / (xmax - xmin) * w:.2f},"
        f"{y0 + h - (y - ymin) / (ymax - ymin) * h:.2f}"
        for x, y in zip(xs, ys)
    )
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'
    )


def write_summary_svg(path: Path, result: RunResult) -> None:
    """Two-panel run summary: total mass over time, final densities per edge."""
    net = result.final.mesh.net
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 520" '
        'font-family="monospace" font-size="12">',
        '<rect width="800" height="520" fill="white"/>',
    ]

    box = (60, 40, 700, 180)
    ylim = (min(result.masses), max(result.masses))
    parts.append('<text x="60" y="25">total mass</text>')
    parts.append(
        f'<text x="760" y="25" text-anchor="end">drift '
        f"{result.masses[-1] - result.masses[0]:.3e}</text>"
    )
    parts.append(
        f'<rect x="{box[0]}" y="{box[1]}" width="{box[2]}" height="{box[3]}" '
        'fill="none" stroke="#999"/>'
    )
    parts.append(
        _polyline(
            result.times, result.masses, box, (result.times[0], result.times[-1]),
            ylim, "#1f77b4",
        )
    )
    parts.append(f'<text x="55" y="{box[1] + 10}" text-anchor="end">{ylim[1]:.6g}</text>')
    parts.append(
        f'<text x="55" y="{box[1] + box[3]}" text-anchor="end">{ylim[0]:.6g}</text>'
    )

    box = (60, 290, 700, 180)
    parts.append('<text x="60" y="275">final density by edge</text>')
    parts.append(
        f'<rect x="{box[0]}" y="{box[1]}" width="{box[2]}" height="{box[3]}" '
        'fill="none" stroke="#999"/>'
    )
    final = result.final
    lo = min(float(np.min(c)) for c in final.cells.values())
    hi = max(float(np.max(c)) for c in final.cells.values())
    xmax = max(e.length for e in net.edges)
    for i, e in enumerate(net.edges):
        mids = final.mesh.midpoints(e.key)
        color = _PALETTE[i % len(_PALETTE)]
        parts.append(
            _polyline(mids, final.cells[e.key], box, (0.0, xmax), (lo, hi), color)
        )
        parts.append(
            f'<text x="{65 + 90 * i}" y="500" fill="{color}">edge {e.key}</text>'
        )
    parts.append(f'<text x="55" y="{box[1] + 10}" text-anchor="end">{hi:.6g}</text>')
    parts.append(f'<text x="55" y="{box[1] + box[3]}" text-anchor="end">{lo:.6g}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8", newline="\n")


def _write_snapshot(path: Path, state: DensityState) -> None:
    rows = []
    for e in state.mesh.net.edges:
        mids = state.mesh.midpoints(e.key)
        for x, r in zip(mids, state.cells[e.key]):
            rows.append((e.key, float(x), float(r)))
    _write_csv(path, ["edge", "x_mid", "rho"], rows)


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    graph = parse_graph(args.network)
    net = build_network(graph)
    report = validate_regularity(net)
    print(f"vertices: {report.vertex_count}")
    print(f"edges: {report.edge_count}")
    print(f"max degree: {report.max_degree}")
    print(f"min edge length: {report.min_edge_length:g}")
    print(f"connected: {'yes' if report.connected else 'no'}")
    print(f"regular: {'yes' if report.regular else 'no'}")
    for reason in report.reasons:
        print(f"  {reason}")
    return 0 if report.regular else 1


def cmd_distance(args) -> int:
    net = build_network(parse_graph(args.network))
    p = parse_point(net, args.p)
    q = parse_point(net, args.q)
    d = distance(net, p, q)
    path = shortest_path(net, p, q)
    print(f"{d:.12f}")
    print("path:", " ".join(str(k) for k in path.edge_keys))
    return 0


def cmd_simulate(args) -> int:
    cfg = load_scenario(args.scenario)
    _apply_overrides(cfg, args)
    result = run_scenario(cfg)

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "mass.csv",
        ["t", "total_mass"],
        zip(result.times, result.masses),
    )
    _write_csv(out / "kirchhoff.csv", ["t", "vertex", "residual"], result.residual_rows)
    if cfg.snapshots:
        for n, state in result.recorded:
            _write_snapshot(out / f"density_{n:06d}.csv", state)
    write_summary_svg(out / "summary.svg", result)

    drift = result.masses[-1] - result.masses[0]
    print(f"steps: {result.steps}")
    print(f"final time: {result.final.t:g}")
    print(f"mass drift: {drift:.6e}")
    print(f"outputs: {out}")
    return 0


def _apply_overrides(cfg: ScenarioConfig, args) -> None:
    if getattr(args, "output_dir", None) is not None:
        cfg.output_dir = Path(args.output_dir)
    if getattr(args, "stride", None) is not None:
        cfg.stride = args.stride
    if getattr(args, "h", None) is not None:
        cfg.h = args.h
    if getattr(args, "cfl", None) is not None:
        cfg.cfl = args.cfl


def _uniform_trajectory(cfg: ScenarioConfig) -> list:
    """Run the scenario with one fixed dt that divides T, storing every step."""
    net = build_network(parse_graph(cfg.network_path))
    model = _build_model(cfg, net)
    rule = _build_rule(cfg, net)
    state = init_state(net, _build_initial(cfg, net), model, cfg.h)
    dt0 = cfl_dt(state, cfg.cfl, cfg.t_end)
    n = max(1, math.ceil(cfg.t_end / dt0 - 1e-12))
    dt = cfg.t_end / n
    states = [state]
    for _ in range(n):
        state = step(state, dt, rule)
        states.append(state)
    return states


def _windowed_trig(net: Network, h: float):
    """sin and cos per edge, windowed to value and slope zero at edge ends
    that meet a vertex of degree three or more (the ends where admissible
    functions must be flat).  Other ends are left untouched so the boundary
    terms stay nontrivial.
    """
    mesh = Mesh.build(net, h)

    def window(key, x):
        e = net.edge(key)
        u = x / e.length
        w = np.ones_like(u)
        if net.degree(e.tail) >= 3:
            w = w * u**2 * (3.0 - 2.0 * u)
        if net.degree(e.head) >= 3:
            w = w * (1.0 - u) ** 2 * (1.0 + 2.0 * u)
        return w

    f = GridFunction.sample(mesh, lambda k, x: np.sin(x) * window(k, x))
    g = GridFunction.sample(mesh, lambda k, x: np.cos(x) * window(k, x))
    return f, g


def cmd_verify(args) -> int:
    cfg = load_scenario(args.scenario)
    _apply_overrides(cfg, args)
    suite = args.suite

    if suite == "kirchhoff":
        result = run_scenario(cfg)
        net = result.final.mesh.net
        worst = max(kirchhoff_residual(result.final, v) for v in net.vertices)
        ok = worst <= 1e-12
        print(f"kirchhoff: worst vertex residual {worst:.3e} "
              f"(tolerance 1e-12): {'PASS' if ok else 'FAIL'}")
        return 0 if ok else 1

    if suite == "mass":
        result = run_scenario(cfg)
        drift = abs(result.masses[-1] - result.masses[0])
        ok = drift <= 1e-12
        print(f"mass: |drift| {drift:.3e} over {result.steps} steps "
              f"(tolerance 1e-12): {'PASS' if ok else 'FAIL'}")
        return 0 if ok else 1

    if suite == "weakform":
        residuals = []
        for h in (cfg.h, 0.5 * cfg.h):
            sub = ScenarioConfig(**{**cfg.__dict__, "h": h})
            states = _uniform_trajectory(sub)
            net = states[0].mesh.net
            e0 = net.edges[0]
            phi = TestFunction.bump(
                net,
                EdgeInterior(e0.key, 0.5 * e0.length),
                0.4 * net.min_edge_length,
                0.1 * cfg.t_end,
                0.9 * cfg.t_end,
            )
            residuals.append(weak_residual(states, phi))
        order = math.log2(residuals[0] / residuals[1])
        ok = order >= 0.8
        print(f"weakform: residuals {residuals[0]:.3e} -> {residuals[1]:.3e}, "
              f"observed order {order:.2f} (needs >= 0.8): {'PASS' if ok else 'FAIL'}")
        return 0 if ok else 1

    if suite == "classical":
        net = build_network(parse_graph(cfg.network_path))
        if len(net.edges) != 1 or net.edges[0].tail == net.edges[0].head:
            print("classical: scenario network must be a single non-loop edge: FAIL")
            return 1
        residuals = []
        for h in (cfg.h, 0.5 * cfg.h):
            sub = ScenarioConfig(**{**cfg.__dict__, "h": h})
            states = _uniform_trajectory(sub)
            residuals.append(_fd_pde_residual(states))
        order = math.log2(residuals[0] / residuals[1])
        ok = order >= 0.8
        print(f"classical: L1 residuals {residuals[0]:.3e} -> {residuals[1]:.3e}, "
              f"observed order {order:.2f} (needs >= 0.8): {'PASS' if ok else 'FAIL'}")
        return 0 if ok else 1

    if suite == "ibp":
        net = build_network(parse_graph(cfg.network_path))
        residuals = []
        for h in (cfg.h, 0.5 * cfg.h):
            f, g = _windowed_trig(net, h)
            residuals.append(integration_by_parts_residual(net, f, g))
        order = math.log2(residuals[0] / residuals[1])
        ok = order >= 1.8
        print(f"ibp: residuals {residuals[0]:.3e} -> {residuals[1]:.3e}, "
              f"observed order {order:.2f} (needs >= 1.8): {'PASS' if ok else 'FAIL'}")
        return 0 if ok else 1

    raise ParseError(f"unknown verify suite {suite!r}")


def _fd_pde_residual(states) -> float:
    """Space-time L1 mean of the finite-difference defect of the transport
    equation, from a trajectory on a single edge stored every step."""
    state0 = states[0]
    key = state0.mesh.net.edges[0].key
    h = state0.mesh.spacing[key]
    dt = states[1].t - states[0].t
    mids = state0.mesh.midpoints(key)
    rho = np.stack([s.cells[key] for s in states])
    model = state0.model
    if isinstance(model, Constant):
        q = model.at(key) * rho
    elif isinstance(model, QuasiLinear):
        p = model.at_edge(key)
        q = p.v_max * rho * (1.0 - rho / p.rho_max)
    else:
        q = np.stack(
            [model.at(key, s.t, mids) for s in states]
        ) * rho
    rho_t = (rho[2:, :] - rho[:-2, :]) / (2.0 * dt)
    q_x = (q[1:-1, 2:] - q[1:-1, :-2]) / (2.0 * h)
    defect = rho_t[:, 1:-1] + q_x
    return float(np.mean(np.abs(defect)))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="netflux",
        description="metric-network transport: validation, distances, simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a network file and report structure")
    p.add_argument("network")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("distance", help="shortest-path distance between two points")
    p.add_argument("network")
    p.add_argument("p", help="point spec: v:<id> or e:<key>:<x>")
    p.add_argument("q", help="point spec: v:<id> or e:<key>:<x>")
    p.set_defaults(func=cmd_distance)

    for name, fn in (("simulate", cmd_simulate), ("verify", cmd_verify)):
        p = sub.add_parser(name)
        p.add_argument("scenario")
        if name == "verify":
            p.add_argument(
                "suite",
                choices=["kirchhoff", "mass", "weakform", "classical", "ibp"],
            )
        p.add_argument("--output-dir", default=None)
        p.add_argument("--stride", type=int, default=None)
        p.add_argument("--h", type=float, default=None)
        p.add_argument("--cfl", type=float, default=None)
        p.set_defaults(func=fn)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NetworkError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
