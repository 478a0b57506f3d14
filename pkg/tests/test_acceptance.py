"""End-to-end acceptance suite: one check per shipped guarantee.

Every test prints a single pass/fail line with the measured numbers, so
``pytest tests/test_acceptance.py -s`` gives a readable tally.  Tolerances
are asserted exactly as documented in the README; nothing here is tuned to
the implementation beyond fixing seeds and mesh sizes.
"""

import math

import numpy as np

from conftest import WHEATSTONE
from oracles import floyd_warshall, point_distance, random_connected_graph, random_point_spec

from netflux import (
    Constant,
    GridFunction,
    Mesh,
    QuasiLinear,
    Vertex,
    WeightedGraph,
    boundary_trace,
    build_network,
    check_c1,
    distance,
    init_state,
    integrate,
    integration_by_parts_residual,
    kirchhoff_residual,
    locate,
    shortest_path,
    step,
    total_mass,
    total_measure,
    weak_residual,
)
from netflux.solver import JunctionRule, TestFunction


def report(num, name, detail, ok):
    line = f"criterion {num:2d} ({name}): {detail}"
    print(f"{line} ... {'PASS' if ok else 'FAIL'}")
    assert ok, line


def as_point(net, spec):
    if spec[0] == "v":
        return Vertex(spec[1])
    return locate(net, spec[1], spec[2])


def smooth_bump(u):
    """C-infinity bump on (-1, 1), vectorized, zero outside."""
    u = np.asarray(u, float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0 - 1e-14
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def bump_ic(keys, center=0.5, width=0.6, amp=0.5):
    """Initial density: a smooth bump on the named edges, zero elsewhere."""

    def rho0(key, x):
        x = np.asarray(x, float)
        if key not in keys:
            return np.zeros_like(x)
        return amp * smooth_bump((x - center) / (width / 2))

    return rho0


def windowed(net, h, base):
    """base(x) per edge, flattened (value and slope zero) at edge ends that
    meet a vertex of degree three or more; left alone elsewhere."""
    mesh = Mesh.build(net, h)

    def fn(key, x):
        e = net.edge(key)
        u = x / e.length
        w = np.ones_like(u)
        if net.degree(e.tail) >= 3:
            w = w * u**2 * (3.0 - 2.0 * u)
        if net.degree(e.head) >= 3:
            w = w * (1.0 - u) ** 2 * (1.0 + 2.0 * u)
        return base(x) * w

    return GridFunction.sample(mesh, fn)


def orders(seq):
    return [math.log2(a / b) for a, b in zip(seq, seq[1:])]


def test_metric_axioms():
    rng = np.random.default_rng(409)
    graphs = [WeightedGraph.from_edge_list(WHEATSTONE)]
    graphs += [random_connected_graph(rng) for _ in range(20)]

    symmetric = identity = True
    worst_oracle = worst_triangle = -math.inf
    triples = 0
    for graph in graphs:
        net = build_network(graph)
        dv = floyd_warshall(graph)
        for _ in range(500):
            specs = [random_point_spec(rng, graph) for _ in range(3)]
            p, q, r = (as_point(net, s) for s in specs)
            dpq = distance(net, p, q)
            symmetric &= distance(net, q, p) == dpq
            identity &= distance(net, p, p) == 0.0
            worst_oracle = max(
                worst_oracle, abs(dpq - point_distance(graph, dv, specs[0], specs[1]))
            )
            slack = distance(net, p, r) - (dpq + distance(net, q, r))
            worst_triangle = max(worst_triangle, slack)
            triples += 1

    ok = symmetric and identity and worst_oracle <= 1e-12 and worst_triangle <= 1e-12
    report(
        1,
        "metric axioms",
        f"{len(graphs)} networks, {triples} triples, oracle gap {worst_oracle:.1e}, "
        f"triangle slack {worst_triangle:.1e}, symmetry exact: {symmetric}",
        ok,
    )


def test_shortest_paths(wheatstone):
    rng = np.random.default_rng(410)
    graphs = [WeightedGraph.from_edge_list(WHEATSTONE)]
    graphs += [random_connected_graph(rng) for _ in range(20)]

    worst_gap = -math.inf
    repeatable = True
    pairs = 0
    for graph in graphs:
        net = build_network(graph)
        for _ in range(100):
            p = as_point(net, random_point_spec(rng, graph))
            q = as_point(net, random_point_spec(rng, graph))
            path = shortest_path(net, p, q)
            worst_gap = max(worst_gap, abs(path.length - distance(net, p, q)))
            repeatable &= shortest_path(net, p, q).edge_keys == path.edge_keys
            pairs += 1

    # two equal-length routes from 1 to 6: the key-lexicographic one wins
    tie = shortest_path(wheatstone, Vertex("1"), Vertex("6")).edge_keys
    ok = worst_gap <= 1e-12 and repeatable and tie == ("1", "2", "5", "7")
    report(
        2,
        "shortest paths",
        f"{pairs} pairs, |length - distance| <= {worst_gap:.1e}, "
        f"repeatable: {repeatable}, tie -> {'-'.join(tie)}",
        ok,
    )


def test_measure_and_integral(wheatstone):
    total = total_measure(wheatstone)

    mesh = Mesh.build(wheatstone, 0.25)
    iconst = integrate(wheatstone, GridFunction.constant(mesh, 0.375))
    iaffine = integrate(wheatstone, GridFunction.sample(mesh, lambda k, x: 0.25 + 0.5 * x))

    rng = np.random.default_rng(411)
    f = GridFunction.sample(mesh, lambda k, x: rng.uniform(-1, 1, x.shape))
    g = GridFunction.sample(mesh, lambda k, x: rng.uniform(-1, 1, x.shape))
    a, b = 1.5, -2.25
    lin_gap = abs(
        integrate(wheatstone, a * f + b * g)
        - (a * integrate(wheatstone, f) + b * integrate(wheatstone, g))
    )

    ok = total == 7.0 and iconst == 0.375 * 7 and iaffine == 3.5 and lin_gap <= 1e-12
    report(
        3,
        "measure",
        f"total {total!r}, constant {iconst!r}, affine {iaffine!r}, "
        f"linearity gap {lin_gap:.1e}",
        ok,
    )


def test_integration_by_parts(wheatstone):
    residuals = []
    for h in (0.02, 0.01, 0.005):
        f = windowed(wheatstone, h, np.sin)
        g = windowed(wheatstone, h, np.cos)
        residuals.append(integration_by_parts_residual(wheatstone, f, g))
    o = orders(residuals)

    ok = all(x >= 1.8 for x in o)
    report(
        4,
        "integration by parts",
        f"residuals {residuals[0]:.2e} -> {residuals[1]:.2e} -> {residuals[2]:.2e}, "
        f"orders {o[0]:.2f}, {o[1]:.2f}",
        ok,
    )


def test_branch_vertex_slope_detection(wheatstone):
    # continuous everywhere, but two of the three edge ends at vertex 2
    # leave with slope +1: exactly the configuration the check must reject
    def kinked(key, x):
        if key == "1":
            return 1.0 - x
        if key == "2":
            return x * (1.0 - x) ** 2
        return np.zeros_like(x)

    mesh = Mesh.build(wheatstone, 0.005)
    bad = check_c1(wheatstone, GridFunction.sample(mesh, kinked), tol=1e-3)
    flagged = (
        bad.continuous
        and not bad.passed
        and {v for v, _, _ in bad.violations} == {"2"}
    )

    good = check_c1(wheatstone, windowed(wheatstone, 0.005, np.sin), tol=1e-3)

    ok = flagged and good.passed
    report(
        5,
        "branch-vertex slopes",
        f"kinked data flagged at vertex 2 only: {flagged}, "
        f"windowed data passes: {good.passed} (worst {good.worst_mismatch:.1e})",
        ok,
    )


def _advect_single_edge(net, h, t_end, cfl):
    state = init_state(net, bump_ic({"e"}, center=0.3, width=0.3), Constant(1.0), h)
    rule = JunctionRule.equal_split(net)
    n = max(1, math.ceil(t_end / (cfl * h) - 1e-12))
    dt = t_end / n
    states = [state]
    for _ in range(n):
        state = step(state, dt, rule)
        states.append(state)
    return states


def test_classical_equivalence(single_edge):
    residuals = []
    worst_end = -math.inf
    for h in (1 / 128, 1 / 256, 1 / 512):
        states = _advect_single_edge(single_edge, h, 0.25, 0.9)
        rho = np.stack([s.cells["e"] for s in states])
        dt = states[1].t - states[0].t
        rho_t = (rho[2:] - rho[:-2]) / (2 * dt)
        q_x = (rho[1:-1, 2:] - rho[1:-1, :-2]) / (2 * h)
        residuals.append(float(np.mean(np.abs(rho_t[:, 1:-1] + q_x))))
        for end in ("tail", "head"):
            _, vals = boundary_trace(states, "e", end)
            worst_end = max(worst_end, float(np.max(np.abs(vals))))
    o = orders(residuals)

    ok = all(x >= 0.8 for x in o) and worst_end <= 1e-12
    report(
        6,
        "classical equivalence",
        f"interior residual orders {o[0]:.2f}, {o[1]:.2f}, "
        f"end flux while bump interior {worst_end:.1e}",
        ok,
    )


def test_vertex_flux_balance(wheatstone):
    from netflux import run

    # congested merge: edges 5 and 6 both feed vertex 5, edge 7 drains it
    state = init_state(
        wheatstone,
        bump_ic({"5", "6"}, width=0.8, amp=0.9),
        QuasiLinear(v_max=1.0, rho_max=1.0),
        0.05,
    )
    merge = run(state, JunctionRule.equal_split(wheatstone, supply_demand=True), 2.0)
    worst_merge = max(kirchhoff_residual(merge[-1], v) for v in wheatstone.vertices)

    state = init_state(wheatstone, bump_ic({"1"}), Constant(1.0), 0.05)
    lin = run(state, JunctionRule.equal_split(wheatstone), 2.0)
    worst_lin = max(kirchhoff_residual(lin[-1], v) for v in wheatstone.vertices)

    ok = worst_merge <= 1e-12 and worst_lin <= 1e-12
    report(
        7,
        "vertex flux balance",
        f"worst per-vertex residual: merge {worst_merge:.1e}, "
        f"equal-split advection {worst_lin:.1e}",
        ok,
    )


def test_mass_conservation(ring, wheatstone):
    drifts = []
    for net, rho0, h in (
        (ring, lambda k, x: 0.5 + 0.4 * np.sin(2 * np.pi * x), 0.02),
        (wheatstone, bump_ic({"1"}), 0.05),
    ):
        state = init_state(net, rho0, Constant(1.0), h)
        rule = JunctionRule.equal_split(net)
        m0 = total_mass(state)
        dt = 0.9 * h
        for _ in range(10_000):
            state = step(state, dt, rule)
        drifts.append(abs(total_mass(state) - m0))

    ok = all(d <= 1e-10 for d in drifts)
    report(
        8,
        "mass conservation",
        f"1e4 steps, |drift| ring {drifts[0]:.1e}, dead-end walls {drifts[1]:.1e}",
        ok,
    )


def test_weak_residual_refinement(single_edge):
    runs = {}
    for h in (1 / 64, 1 / 128, 1 / 256):
        # unit CFL: dt == h, the update is an exact shift and the residual
        # isolates the quadrature of the integral identity
        state = init_state(single_edge, bump_ic({"e"}, center=0.2, width=0.2), Constant(1.0), h)
        rule = JunctionRule.equal_split(single_edge)
        states = [state]
        for _ in range(round(0.25 / h)):
            state = step(state, h, rule)
            states.append(state)
        runs[h] = states

    rng = np.random.default_rng(77)
    worst = math.inf
    for _ in range(5):
        c = rng.uniform(0.35, 0.65)
        r = rng.uniform(0.2, 0.45)
        t0 = rng.uniform(0.02, 0.08)
        t1 = rng.uniform(0.17, 0.23)
        phi = TestFunction.bump(single_edge, locate(single_edge, "e", c), r, t0, t1)
        res = [weak_residual(runs[h], phi) for h in (1 / 64, 1 / 128, 1 / 256)]
        worst = min(worst, min(orders(res)))

    ok = worst >= 0.8
    report(
        9,
        "weak residual",
        f"5 random test functions, 3 mesh levels, slowest observed order {worst:.2f}",
        ok,
    )


def test_mollifier_boundary_limit():
    # a space mollifier of width 1/gamma concentrated at the tail of a unit
    # edge: integrating f(t,x) * gamma * tau(t) * w(gamma x) must approach
    # the time integral of f(t, 0) * tau(t) at first order in 1/gamma
    xi = np.linspace(0.0, 1.0, 4001)
    w = smooth_bump(2 * xi - 1)
    w /= np.trapezoid(w, xi)  # unit mass

    a, b = 0.3, 2.8
    t = np.linspace(a, b, 4001)
    tau = smooth_bump((2 * t - (a + b)) / (b - a))

    f = lambda t, x: (1.0 + x) * np.sin(t)
    ref = np.trapezoid(f(t, 0.0) * tau, t)
    errs = []
    for gamma in (4, 8, 16, 32):
        inner = np.trapezoid(f(t[:, None], xi[None, :] / gamma) * w[None, :], xi, axis=1)
        errs.append(abs(np.trapezoid(inner * tau, t) - ref))
    o = orders(errs)

    ok = all(x >= 0.8 for x in o)
    report(
        10,
        "boundary evaluation",
        f"errors {errs[0]:.2e} -> {errs[-1]:.2e} over gamma 4..32, "
        f"orders {o[0]:.2f}, {o[1]:.2f}, {o[2]:.2f}",
        ok,
    )


def test_density_bounds(wheatstone):
    state = init_state(
        wheatstone,
        bump_ic({"5", "6"}, width=0.8, amp=0.9),
        QuasiLinear(v_max=1.0, rho_max=1.0),
        0.05,
    )
    rule = JunctionRule.equal_split(wheatstone, supply_demand=True)
    lo, hi = math.inf, -math.inf
    dt = 0.9 * 0.05
    for _ in range(10_000):
        state = step(state, dt, rule)
        lo = min(lo, min(float(c.min()) for c in state.cells.values()))
        hi = max(hi, max(float(c.max()) for c in state.cells.values()))

    ok = lo >= -1e-12 and hi <= 1.0 + 1e-12
    report(
        11,
        "density bounds",
        f"1e4 steps at CFL 0.9, density range [{lo:.1e}, {hi:.17f}]",
        ok,
    )
