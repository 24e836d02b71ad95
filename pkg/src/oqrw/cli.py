"""
Command-line front end.

Exit codes: 0 success, 1 domain or validation failure, 2 I/O or parse failure.

Config files are JSON::

    {
      "walk": {"preset": "z_sqrt3", "params": {}},
      "initial": {"vertex": 0, "block": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]}
    }

``walk`` may instead be ``{"kind": "lattice_z", "chirality_dim": d, "B": ..., "C": ...}``
(``B`` moves left, ``C`` moves right) or ``{"kind": "graph", "chirality_dim": d,
"vertices": V, "edges": [{"source": j, "target": i, "operator": ...}, ...]}``.
``initial`` may list several blocks as ``{"blocks": [{"vertex": v, "block": ...}, ...]}``
and may be omitted for presets. Matrices are lists of rows of ``[re, im]`` pairs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import analysis, constructors, realization, trajectory
from . import matrix as mx
from .errors import DimensionError, OQRWError, UnitaryConditionError, WindowOverflowError
from .walk import (
    BlockState,
    FiniteGraph,
    LatticeZ,
    TransitionOperators,
    WalkDistribution,
    distribution,
    evolve,
    validate_transitions,
)

EXIT_OK, EXIT_DOMAIN, EXIT_PARSE = 0, 1, 2


class ConfigError(Exception):
    """Malformed input; the message names the offending location."""


@dataclass
class WalkConfig:
    ops: TransitionOperators
    initial: BlockState | None
    raw: dict


# ---------------------------------------------------------------------------
# Parsing and serialization
# ---------------------------------------------------------------------------


def _matrix(lit: Any, where: str) -> np.ndarray:
    try:
        return mx.matrix_from_literal(lit)
    except DimensionError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _get(obj: dict, key: str, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ConfigError(f"{where}: missing key {key!r}")
    return obj[key]


def _int(x: Any, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{where}: expected an integer, got {x!r}")
    return x


def parse_walk(doc: dict) -> tuple[TransitionOperators, BlockState | None]:
    """Operators (not yet validated) and the preset's default initial state, if any."""
    if not isinstance(doc, dict):
        raise ConfigError("walk: expected an object")
    if "preset" in doc:
        params = doc.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("walk.params: expected an object")
        pre = constructors.preset(doc["preset"], **params)
        return pre.ops, pre.initial
    kind = _get(doc, "kind", "walk")
    d = _int(_get(doc, "chirality_dim", "walk"), "walk.chirality_dim")
    if kind == "lattice_z":
        B = _matrix(_get(doc, "B", "walk"), "walk.B")
        C = _matrix(_get(doc, "C", "walk"), "walk.C")
        return TransitionOperators(LatticeZ(0, 0), d, stationary=(B, C)), None
    if kind == "graph":
        V = _int(_get(doc, "vertices", "walk"), "walk.vertices")
        edges = {}
        raw_edges = _get(doc, "edges", "walk")
        if not isinstance(raw_edges, list):
            raise ConfigError("walk.edges: expected a list")
        for n, e in enumerate(raw_edges):
            where = f"walk.edges[{n}]"
            key = (_int(_get(e, "target", where), f"{where}.target"), _int(_get(e, "source", where), f"{where}.source"))
            if key in edges:
                raise ConfigError(f"{where}: duplicate edge {key[1]}->{key[0]}")
            edges[key] = _matrix(_get(e, "operator", where), f"{where}.operator")
        return TransitionOperators(FiniteGraph(V), d, edges), None
    raise ConfigError(f"walk.kind: unknown kind {kind!r} (expected lattice_z or graph)")


def parse_blocks(doc: dict, where: str) -> dict[int, np.ndarray]:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    if "blocks" in doc:
        items = doc["blocks"]
        if not isinstance(items, list) or not items:
            raise ConfigError(f"{where}.blocks: expected a non-empty list")
    else:
        items = [doc]
    blocks = {}
    for n, item in enumerate(items):
        w = f"{where}.blocks[{n}]" if "blocks" in doc else where
        v = _int(_get(item, "vertex", w), f"{w}.vertex")
        blocks[v] = _matrix(_get(item, "block", w), f"{w}.block")
    return blocks


def state_from_blocks(blocks: dict[int, np.ndarray], ops: TransitionOperators, pruned_mass: float = 0.0) -> BlockState:
    if isinstance(ops.space, LatticeZ):
        space = LatticeZ(min(blocks), max(blocks))
    else:
        space = ops.space
    return BlockState(space, blocks, pruned_mass)


def load_json(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def load_config(path: str | Path) -> WalkConfig:
    raw = load_json(path)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    ops, default = parse_walk(_get(raw, "walk", str(path)))
    initial = default
    if "initial" in raw:
        initial = state_from_blocks(parse_blocks(raw["initial"], "initial"), ops)
    return WalkConfig(ops, initial, raw)


def walk_to_json(ops: TransitionOperators) -> dict:
    """Explicit (preset-free) form of a walk; parses back to equal operators."""
    if ops.is_stationary:
        B, C = ops.stationary
        return {"kind": "lattice_z", "chirality_dim": ops.chirality_dim, "B": mx.matrix_to_literal(B), "C": mx.matrix_to_literal(C)}
    edges = [
        {"source": j, "target": i, "operator": mx.matrix_to_literal(op)}
        for (i, j), op in sorted(ops.edges.items(), key=lambda kv: (kv[0][1], kv[0][0]))
    ]
    return {"kind": "graph", "chirality_dim": ops.chirality_dim, "vertices": ops.space.count, "edges": edges}


def state_to_json(state: BlockState, step: int) -> dict:
    return {
        "step": step,
        "pruned_mass": state.pruned_mass,
        "blocks": [{"vertex": v, "block": mx.matrix_to_literal(rho)} for v, rho in sorted(state.blocks.items())],
    }


def state_from_json(doc: Any, ops: TransitionOperators, where: str = "state") -> BlockState:
    """Read a state written by ``evolve --format json`` (the last snapshot if several)."""
    if isinstance(doc, dict) and "snapshots" in doc:
        snaps = doc["snapshots"]
        if not isinstance(snaps, list) or not snaps:
            raise ConfigError(f"{where}.snapshots: expected a non-empty list")
        doc = snaps[-1]
    blocks = parse_blocks(doc, where)
    return state_from_blocks(blocks, ops, float(doc.get("pruned_mass", 0.0)))


def distribution_csv(d: WalkDistribution, header: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    buf.write("vertex,probability\n")
    for v in sorted(d.probs):
        buf.write(f"{v},{d.probs[v]!r}\n")
    return buf.getvalue()


def read_distribution(path: str | Path) -> WalkDistribution:
    """
    Parse a ``vertex,probability`` CSV (``#`` lines skipped), a
    ``step,vertex,probability`` CSV (last step kept) or a JSON state file.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        if isinstance(doc, dict) and "snapshots" in doc:
            doc = doc["snapshots"][-1]
        blocks = parse_blocks(doc, str(path))
        return WalkDistribution({v: float(np.trace(b).real) for v, b in blocks.items()})
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ConfigError(f"{path}: no data rows")
    rows = list(csv.reader(lines))
    header = [h.strip() for h in rows[0]]
    if header not in (["vertex", "probability"], ["step", "vertex", "probability"]):
        raise ConfigError(f"{path}: line 1: unexpected header {','.join(header)!r}")
    probs: dict[int, float] = {}
    last_step = None
    for n, row in enumerate(rows[1:], start=2):
        try:
            if len(header) == 3:
                s, v, p = int(row[0]), int(row[1]), float(row[2])
                if s != last_step:
                    probs, last_step = {}, s
            else:
                v, p = int(row[0]), float(row[1])
        except (ValueError, IndexError):
            raise ConfigError(f"{path}: data row {n}: cannot parse {','.join(row)!r}") from None
        probs[v] = p
    try:
        return WalkDistribution(probs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _require_valid(ops: TransitionOperators) -> None:
    report = validate_transitions(ops)
    if not report.passed:
        raise OQRWError(f"transition operators fail normalization (max deviation {report.max_deviation:.3e}); run 'oqrw validate'")


def _require_initial(cfg: WalkConfig) -> BlockState:
    if cfg.initial is None:
        raise ConfigError("initial: required for walks that are not presets")
    return cfg.initial


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    report = validate_transitions(cfg.ops)
    status = EXIT_OK
    print("source,deviation")
    for j, dev in sorted(report.deviations.items()):
        print(f"{j},{dev!r}")
    print(f"normalization: {'pass' if report.passed else 'FAIL'} (max deviation {report.max_deviation!r}, tol {report.tol})")
    if not report.passed:
        status = EXIT_DOMAIN
    if args.unitary_condition:
        uc = realization.check_unitary_walk_condition(cfg.ops)
        print(
            f"unitary condition: {'pass' if uc.passed else 'FAIL'} "
            f"(max deviation {uc.max_deviation!r} at sources {uc.worst_pair}, tol {uc.tol})"
        )
        if not uc.passed:
            status = EXIT_DOMAIN
    return status


def cmd_evolve(args) -> int:
    cfg = load_config(args.config)
    _require_valid(cfg.ops)
    state = _require_initial(cfg)
    if args.initial_state:
        state = state_from_json(load_json(args.initial_state), cfg.ops, args.initial_state)
    k = args.snapshot_every
    if k is not None and k < 1:
        raise ConfigError("--snapshot-every must be positive")
    snapshots = [(0, state)]
    if k is None:
        snapshots = [(args.steps, evolve(state, cfg.ops, args.steps))]
    else:
        done = 0
        for target in list(range(k, args.steps + 1, k)) + [args.steps]:
            if target > done:
                state = evolve(state, cfg.ops, target - done)
                done = target
                snapshots.append((done, state))
    if args.format == "json":
        if k is None:
            doc = state_to_json(snapshots[0][1], snapshots[0][0])
        else:
            doc = {"snapshots": [state_to_json(s, n) for n, s in snapshots]}
        _emit(json.dumps(doc) + "\n", args.out)
        return EXIT_OK
    if k is None:
        _emit(distribution_csv(distribution(snapshots[0][1])), args.out)
        return EXIT_OK
    buf = io.StringIO()
    buf.write("step,vertex,probability\n")
    for n, s in snapshots:
        d = distribution(s)
        for v in sorted(d.probs):
            buf.write(f"{n},{v},{d.probs[v]!r}\n")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _trajectory_initial(state: BlockState) -> trajectory.TrajectoryState:
    if len(state.blocks) != 1:
        raise OQRWError("trajectories start from a single vertex")
    (v, rho), = state.blocks.items()
    rho = rho / np.trace(rho).real
    w, vecs = np.linalg.eigh(mx.hermitian_part(rho))
    if w[-2:-1].size == 0 or abs(w[-2]) <= 1e-12:
        # rank one: sample with pure local states
        return trajectory.TrajectoryState(v, vecs[:, -1])
    return trajectory.TrajectoryState(v, rho)


def cmd_trajectory(args) -> int:
    cfg = load_config(args.config)
    _require_valid(cfg.ops)
    ts = _trajectory_initial(_require_initial(cfg))
    dist, _ = trajectory.sample_trajectories(ts, cfg.ops, args.steps, args.samples, args.seed, workers=args.workers)
    header = [f"seed={args.seed}", f"samples={args.samples}", f"steps={args.steps}"]
    _emit(distribution_csv(dist, header), args.out)
    return EXIT_OK


def _pure_decomposition(state: BlockState) -> list[tuple[float, dict[int, np.ndarray]]]:
    out = []
    for v, rho in state.blocks.items():
        w, vecs = np.linalg.eigh(mx.hermitian_part(rho))
        for lam, vec in zip(w, vecs.T):
            if lam > 1e-15:
                out.append((float(lam), {v: vec}))
    return out


def cmd_realize(args) -> int:
    cfg = load_config(args.config)
    _require_valid(cfg.ops)
    state = _require_initial(cfg)
    ops, to_vertex, to_site = cfg.ops, (lambda v: v), (lambda v: v)
    if isinstance(ops.space, LatticeZ):
        if args.window:
            lo, hi = args.window
            realization.check_seam(state.support, lo, hi, args.steps)
        else:
            lo, hi = realization.ring_for(state.support, args.steps)
        ring = realization.cyclic_truncation(ops, lo, hi)
        ops, to_vertex, to_site = ring.ops, ring.vertex, ring.site
    graph_state = BlockState(ops.space, {to_vertex(s): b for s, b in state.blocks.items()})
    real = realization.PhysicalRealization(ops)
    if args.skip_decoherence:
        uc = real.unitary_condition()
        if not uc.passed:
            raise UnitaryConditionError(
                f"--skip-decoherence needs the orthogonality condition; deviation {uc.max_deviation:.3e} at sources {uc.worst_pair}"
            )
    rho = realization.canonical_state(graph_state)
    dists = [distribution(realization.k2_blocks(rho))]
    for _ in range(args.steps):
        rho = real.unitary_cycle(rho) if args.skip_decoherence else real.step(rho)
        dists.append(distribution(realization.k2_blocks(rho)))

    buf = io.StringIO()
    buf.write("step,vertex,probability\n")
    for n, d in enumerate(dists):
        for v in sorted(d.probs, key=to_site):
            buf.write(f"{n},{to_site(v)},{d.probs[v]!r}\n")
    _emit(buf.getvalue(), args.out)

    if args.compare:
        dev = 0.0
        if args.skip_decoherence:
            mixture = _pure_decomposition(graph_state)
            for n, d in enumerate(dists):
                ref: dict[int, float] = {}
                for lam, psi in mixture:
                    psi_n = realization.unitary_walk(psi, ops, n)
                    for v, phi in psi_n.items():
                        ref[v] = ref.get(v, 0.0) + lam * float(np.vdot(phi, phi).real)
                keys = set(ref) | set(d.probs)
                dev = max([dev] + [abs(ref.get(v, 0.0) - d.probs.get(v, 0.0)) for v in keys])
        else:
            ev = graph_state
            for n, d in enumerate(dists):
                ref = distribution(ev)
                keys = set(ref.probs) | set(d.probs)
                dev = max([dev] + [abs(ref.probs.get(v, 0.0) - d.probs.get(v, 0.0)) for v in keys])
                ev = evolve(ev, ops, 1)
        print(f"max_deviation,{dev!r}")
    return EXIT_OK


def cmd_stats(args) -> int:
    d = read_distribution(args.file)
    m = analysis.moments(d)
    print(f"mass,{m.total_mass!r}")
    print(f"mean,{m.mean!r}")
    print(f"variance,{m.variance!r}")
    status = EXIT_OK
    if args.gaussian:
        print(f"gaussian_discrepancy,{analysis.gaussian_discrepancy(d)!r}")
    if args.konno:
        a, lam = args.konno
        if not 0.0 < a < 1.0:
            raise OQRWError(f"Konno parameter a must lie in (0, 1), got {a}")
        scale = args.scale
        print("x,konno_density,empirical_density")
        for v in sorted(d.probs):
            x = v / scale
            if abs(x) >= a:
                continue
            # occupied sites are spaced by 2, i.e. cells of width 2/scale
            emp = d.probs[v] * scale / 2.0
            print(f"{x!r},{analysis.konno_density(a, lam, x)!r},{emp!r}")
    return status


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _nonneg(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {n}")
    return n


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oqrw", description="Open quantum random walk simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the normalization of the transition operators")
    p.add_argument("config")
    p.add_argument("--unitary-condition", action="store_true", help="also check the unitary-walk orthogonality condition")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evolve", help="evolve the block state exactly")
    p.add_argument("config")
    p.add_argument("--steps", type=_nonneg, required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--snapshot-every", type=int, metavar="K")
    p.add_argument("--initial-state", metavar="STATE_JSON", help="start from a state written by --format json")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("trajectory", help="sample quantum trajectories")
    p.add_argument("config")
    p.add_argument("--steps", type=_nonneg, required=True)
    p.add_argument("--samples", type=_positive, required=True)
    p.add_argument("--seed", type=_nonneg, required=True)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("realize", help="run the unitary-dilation realization")
    p.add_argument("config")
    p.add_argument("--steps", type=_nonneg, required=True)
    p.add_argument("--out")
    p.add_argument("--compare", action="store_true", help="report the max deviation from the exact law")
    p.add_argument("--skip-decoherence", action="store_true", help="omit decoherence (unitary walks only)")
    p.add_argument("--window", type=int, nargs=2, metavar=("LO", "HI"), help="ring of lattice sites for lattice walks")
    p.set_defaults(func=cmd_realize)

    p = sub.add_parser("stats", help="summarize a distribution file")
    p.add_argument("file")
    p.add_argument("--gaussian", action="store_true")
    p.add_argument("--konno", type=float, nargs=2, metavar=("A", "LAMBDA"))
    p.add_argument("--scale", type=float, default=1.0, help="divide vertices by this before comparing with the Konno density")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"oqrw: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except WindowOverflowError as exc:
        print(f"oqrw: {exc}; raise the cap with the OQRW_WINDOW_CAP environment variable", file=sys.stderr)
        return EXIT_DOMAIN
    except (OQRWError, ValueError) as exc:
        print(f"oqrw: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
