"""Command-line frontend.

Exit codes: 0 success, 1 domain outcome (infeasible, complex spectrum, ...),
2 unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from . import examples
from .coarsest import coarsest_eep
from .errors import DomainError, ParseError
from .exact import Matrix
from .graph import Digraph, is_rooted, is_weakly_connected, laplacian, load_graph, reaches
from .partition import Partition, format_partition, is_eep, load_partition, partition_to_json
from .sim import (
    DEFAULT_CAP,
    DEFAULT_DT,
    DEFAULT_HORIZON,
    DEFAULT_TOL,
    convergence_report,
    random_initial,
    settling_horizon,
    simulate_second,
    simulate_single,
    slowest_rate,
)
from .stability import gain_region, second_order_decay
from .synthesis import (
    ControlLayer,
    Mode,
    apply_layer,
    build_bip,
    constructive_add,
    format_layer_diff,
    parse_layer_diff,
    solve_bip,
    to_dot,
)


@dataclass
class RunConfig:
    command: str
    graph: Path | None = None
    partition: Path | None = None
    layer: Path | None = None
    mode: str = "add"
    model: str = "single"
    a: float = 0.0
    b: float = 0.0
    k1: float | None = None
    k2: float | None = None
    dt: float = DEFAULT_DT
    horizon: float | None = None
    seed: int = 0
    tol: float = DEFAULT_TOL
    x0: str = "random"
    frame: str = "absolute"
    cap: float = DEFAULT_CAP
    budget: int = 10**7
    out: Path | None = None
    number: int | None = None


def _fmt_num(x: float) -> str:
    return f"{x:.12g}"


def _fmt_matrix(m: Matrix) -> str:
    return "\n".join(" ".join(str(x) for x in r) for r in m.rows) + "\n"


def _write(out: Path | None, name: str, text: str, stream: TextIO) -> None:
    if out is None:
        stream.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8", newline="\n")


def _positive(name: str, x: float | None) -> None:
    if x is not None and not x > 0:
        raise ParseError(f"--{name} must be positive, got {x}")


def _load_layer(path: Path, n: int) -> ControlLayer:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        return parse_layer_diff(text, n)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _total(cfg: RunConfig) -> tuple[Digraph, Matrix]:
    if cfg.graph is None:
        raise ParseError("--graph is required")
    g = load_graph(cfg.graph)
    L = laplacian(g)
    if cfg.layer is not None:
        L, _ = apply_layer(L, _load_layer(cfg.layer, g.n))
    return g, L


def _initial(cfg: RunConfig, n: int) -> tuple[np.ndarray, np.ndarray]:
    if cfg.x0 == "random":
        z = random_initial(n, cfg.seed, 2)
        return z[:n], z[n:]
    p = Path(cfg.x0)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{p}: {exc.strerror}") from None
    try:
        vals = [float(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ParseError(f"{p}: {exc}") from None
    if len(vals) == n:
        return np.array(vals), np.zeros(n)
    if len(vals) == 2 * n:
        return np.array(vals[:n]), np.array(vals[n:])
    raise ParseError(f"{p}: expected {n} or {2 * n} numbers, found {len(vals)}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_analyze(cfg: RunConfig, out: TextIO) -> int:
    g, L = _total(cfg)
    ce = coarsest_eep(L)
    d = ce.decomposition

    def one_based(cells):
        return [[v + 1 for v in c] for c in cells]

    doc = {
        "n": g.n,
        "reaches": one_based(sorted(r) for r in reaches(g)),
        "mu": ce.mu,
        "H": one_based(d.H),
        "C": [v + 1 for v in d.C],
        "pi_star": one_based(ce.pi_star.cells),
        "gamma": [[str(x) for x in gv] for gv in ce.gamma],
        "rooted": is_rooted(g),
    }
    if is_rooted(g):
        doc["note"] = "consensus case, L^u = 0 suffices"
    if ce.agreement is not None and ce.agreement != ce.pi_star:
        doc["agreement_classes"] = one_based(ce.agreement.cells)
    if cfg.partition is not None:
        t = load_partition(cfg.partition, g.n)
        doc["target"] = one_based(t.cells)
        doc["target_is_eep"] = is_eep(L, t)
        doc["target_refines_pi_star"] = t.refines(ce.pi_star)
    out.write(json.dumps(doc, indent=2) + "\n")
    return 0


def _synthesize(L: Matrix, target: Partition, mode: str, budget: int) -> ControlLayer:
    if mode == "constructive":
        return constructive_add(L, target)
    return solve_bip(build_bip(L, target, Mode(mode)), budget=budget)


def cmd_synthesize(cfg: RunConfig, out: TextIO) -> int:
    if cfg.partition is None:
        raise ParseError("--partition is required")
    g, L = _total(cfg)
    target = load_partition(cfg.partition, g.n)
    u = _synthesize(L, target, cfg.mode, cfg.budget)
    total, _ = apply_layer(L, u)
    diff = format_layer_diff(u)
    if cfg.out is None:
        out.write(f"# layer ({cfg.mode}), cost {u.cost}\n{diff}")
        out.write("# L + L^u\n" + _fmt_matrix(total))
        out.write("# dot\n" + to_dot(Digraph.from_laplacian(L), u))
    else:
        _write(cfg.out, "layer.diff", diff, out)
        _write(cfg.out, "controlled.txt", _fmt_matrix(total), out)
        _write(cfg.out, "controlled.dot", to_dot(Digraph.from_laplacian(L), u), out)
        out.write(f"cost {u.cost}; wrote layer.diff, controlled.txt, controlled.dot to {cfg.out}\n")
    return 0


def cmd_gains(cfg: RunConfig, out: TextIO) -> int:
    _, L = _total(cfg)
    ce = coarsest_eep(L)
    region = gain_region(L, ce.pi_star, cfg.a, cfg.b, ce.decomposition)
    doc = region.to_json()
    doc["pi_star"] = partition_to_json(ce.pi_star)["cells"]
    out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def _run_sim(cfg: RunConfig, L: Matrix, cells: Partition, out: TextIO, csv_name: str | None):
    n = L.n
    x0, v0 = _initial(cfg, n)
    frame = cells if cfg.frame == "error" else None
    if cfg.model == "single":
        horizon = cfg.horizon or settling_horizon(slowest_rate(L))
        tr = simulate_single(L, x0, cfg.dt, horizon, frame=frame)
    else:
        if cfg.k1 is None or cfg.k2 is None:
            raise ParseError("--k1 and --k2 are required for the second-order model")
        horizon = cfg.horizon or DEFAULT_HORIZON
        tr = simulate_second(L, cfg.a, cfg.b, cfg.k1, cfg.k2, x0, v0, cfg.dt, horizon, frame=frame, cap=cfg.cap)
    rep = convergence_report(tr, cells, cfg.tol)
    if csv_name is not None and cfg.out is not None:
        _write(cfg.out, csv_name, tr.to_csv(), out)
    return tr, rep


def cmd_simulate(cfg: RunConfig, out: TextIO) -> int:
    g, L = _total(cfg)
    cells = load_partition(cfg.partition, g.n) if cfg.partition is not None else coarsest_eep(L).pi_star
    _, rep = _run_sim(cfg, L, cells, out, "trajectory.csv")
    text = json.dumps(rep.to_json(), indent=2, sort_keys=True) + "\n"
    if cfg.out is None:
        out.write(text)
    else:
        _write(cfg.out, "report.json", text, out)
        out.write(f"wrote trajectory.csv, report.json to {cfg.out}\n")
    return 0


def _stable_line(rep) -> str:
    cells = rep.stable_cells()
    return f"stable cells ({len(cells)}): " + " ".join("{" + ",".join(str(v + 1) for v in c) + "}" for c in cells)


def cmd_example(cfg: RunConfig, out: TextIO) -> int:
    ex = examples.load(cfg.number)
    L = ex.L
    out.write(f"example {ex.number}: {ex.graph.n} nodes, target {format_partition(ex.target)}\n")
    mode = ex.mode.value if ex.mode is not None else "add"
    u = solve_bip(build_bip(L, ex.target, mode), budget=cfg.budget)
    total, g_total = apply_layer(L, u)
    out.write(f"layer ({mode}), cost {u.cost}:\n{format_layer_diff(u)}")
    if ex.mode is Mode.ADD:
        c = constructive_add(L, ex.target)
        out.write(f"constructive cost: {c.cost}\n")
    out.write(f"weakly connected after control: {'yes' if is_weakly_connected(g_total) else 'no'}\n")
    ce = coarsest_eep(total)
    out.write(f"coarsest EEP of L + L^u: {format_partition(ce.pi_star)}\n")
    out.write(f"target is EEP: {'yes' if is_eep(total, ex.target) else 'no'}\n")

    if ex.a is None:
        sim_cfg = RunConfig("simulate", model="single", seed=cfg.seed, dt=cfg.dt, tol=cfg.tol, horizon=cfg.horizon)
        _, rep = _run_sim(sim_cfg, total, ex.target, out, None)
        out.write(_stable_line(rep) + "\n")
        out.write(f"distinct cluster values: {rep.distinct_means(10 * cfg.tol)}\n")
        return 0

    region = gain_region(total, ce.pi_star, ex.a, ex.b, ce.decomposition)
    out.write(f"gamma: {_fmt_num(region.gamma)}; k1 > {_fmt_num(region.k1_min)}, k2 > {_fmt_num(region.k2_min)}\n")
    k1 = cfg.k1 if cfg.k1 is not None else ex.stable_gains[0]
    k2 = cfg.k2 if cfg.k2 is not None else ex.stable_gains[1]
    stable_rows = region.stable_clusters(k1, k2)
    rate = min(
        (second_order_decay(ex.a, ex.b, k1, k2, [x for x in r.spectrum if abs(x) > 1e-9]) for r in stable_rows),
        default=math.inf,
    )
    horizon = cfg.horizon or settling_horizon(rate)
    sim_cfg = RunConfig(
        "simulate", model="second", a=ex.a, b=ex.b, k1=k1, k2=k2, seed=cfg.seed, dt=cfg.dt,
        tol=cfg.tol, horizon=horizon, frame="error", cap=math.inf,
    )
    _, rep = _run_sim(sim_cfg, total, ce.pi_star, out, None)
    out.write(f"gains k1={_fmt_num(k1)}, k2={_fmt_num(k2)}, horizon {_fmt_num(horizon)}\n")
    out.write(_stable_line(rep) + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multiconsensus", description="Multi-consensus analysis and control synthesis.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, layer=True):
        sp.add_argument("--graph", type=Path, required=True, help="edge list (1-based 'u v') or JSON")
        if layer:
            sp.add_argument("--layer", type=Path, help="control layer diff ('+ u v' / '- u v') applied first")

    a = sub.add_parser("analyze", help="reaches, coarsest EEP and target status")
    common(a)
    a.add_argument("--partition", type=Path)

    s = sub.add_parser("synthesize", help="minimal control layer for a target partition")
    common(s, layer=False)
    s.add_argument("--partition", type=Path, required=True)
    s.add_argument("--mode", choices=[m.value for m in Mode] + ["constructive"], default="add")
    s.add_argument("--budget", type=int, default=10**7)
    s.add_argument("--out", type=Path)

    g = sub.add_parser("gains", help="second-order gain region as JSON")
    common(g)
    g.add_argument("--a", type=float, required=True)
    g.add_argument("--b", type=float, required=True)

    m = sub.add_parser("simulate", help="RK4 simulation and convergence report")
    common(m)
    m.add_argument("--partition", type=Path, help="cells to report on (default: coarsest EEP)")
    m.add_argument("--model", choices=["single", "second"], default="single")
    for name in ("a", "b"):
        m.add_argument(f"--{name}", type=float, default=0.0)
    for name in ("k1", "k2"):
        m.add_argument(f"--{name}", type=float)
    m.add_argument("--dt", type=float, default=DEFAULT_DT)
    m.add_argument("--horizon", type=float)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--tol", type=float, default=DEFAULT_TOL)
    m.add_argument("--x0", default="random", help="'random' or a file with N or 2N numbers")
    m.add_argument("--frame", choices=["absolute", "error"], default="absolute")
    m.add_argument("--cap", type=float, default=DEFAULT_CAP)
    m.add_argument("--out", type=Path)

    e = sub.add_parser("example", help="run a built-in worked example end to end")
    e.add_argument("number", type=int, choices=range(1, 7))
    e.add_argument("--k1", type=float)
    e.add_argument("--k2", type=float)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--dt", type=float, default=DEFAULT_DT)
    e.add_argument("--horizon", type=float)
    e.add_argument("--tol", type=float, default=DEFAULT_TOL)
    e.add_argument("--budget", type=int, default=10**7)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command)
    for key, value in vars(ns).items():
        if key == "command":
            continue
        setattr(cfg, key, value)
    for name in ("dt", "horizon", "tol", "k1", "k2", "cap"):
        _positive(name, getattr(cfg, name, None))
    for name in ("graph", "partition", "layer"):
        path = getattr(cfg, name, None)
        if path is not None and not Path(path).exists():
            raise ParseError(f"{path}: no such file")
    if cfg.x0 != "random" and not Path(cfg.x0).exists():
        raise ParseError(f"{cfg.x0}: no such file")
    return cfg


COMMANDS = {
    "analyze": cmd_analyze,
    "synthesize": cmd_synthesize,
    "gains": cmd_gains,
    "simulate": cmd_simulate,
    "example": cmd_example,
}


def run(cfg: RunConfig, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        return COMMANDS[cfg.command](cfg, out)
    except ParseError as exc:
        err.write(f"error: {exc}\n")
        return 2
    except DomainError as exc:
        err.write(f"{type(exc).__name__}: {exc}\n")
        return 1
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return 2


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ParseError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
