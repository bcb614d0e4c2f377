"""Command-line entry point: ``xnet <command> [<subcommand>] [options]``.

Exit codes: 0 success, 1 bad arguments or input, 2 a verification found
violations, 3 resource or convergence failure.  Every file written is
accompanied by ``<file>.manifest.json``.  Relative output paths are
resolved under ``$XNET_OUTPUT_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .accounting import cost_table_csv, cost_table_dict, read_layer_specs, write_layer_specs
from .architectures import alexnet, erfnet, vgg16_cifar
from .connectivity import count_paths, frontiers_csv, layer_spectra, sensitivity_depth, sensitivity_summary
from .errors import ConvergenceError, FormatError, InvalidParameterError, ResourceError, XNetError
from .graphs import (
    CayleyGraph,
    ExpanderBudget,
    LayeredNetwork,
    bipartite_double_cover,
    build_cayley_xor_graph,
    build_random_regular_bipartite,
    complete_bipartite,
    identity_bipartite,
    random_layered_network,
    read_xgraph,
    sample_generators,
    write_xgraph,
)
from .masks import dense_mask, group_mask, write_xmask, xlinear_mask
from .spectral import (
    EXHAUSTIVE_MIXING_LIMIT,
    check_expansion,
    check_mixing,
    mixing_sweep,
    report_to_dict,
    spectral_report,
)

__all__ = ["main", "build_parser", "load_network", "OUTPUT_DIR_ENV"]

OUTPUT_DIR_ENV = "XNET_OUTPUT_DIR"

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_RESOURCE = 0, 1, 2, 3

MODELS = {
    "alexnet": lambda: alexnet("dense"),
    "alexnet-x1": lambda: alexnet("x1"),
    "alexnet-x2": lambda: alexnet("x2"),
    "vgg16": lambda: vgg16_cifar("dense"),
    "vgg16-x1": lambda: vgg16_cifar("x1"),
    "vgg16-x2": lambda: vgg16_cifar("x2"),
    "erfnet": erfnet,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Reports usage errors with exit code 1 instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


# ======================================================================================
# Shared helpers
# ======================================================================================


class _Run:
    """Collects inputs, outputs and seeds for the run manifest."""

    def __init__(self, command: str, argv: list[str], args: argparse.Namespace):
        self.command = command
        self.argv = list(argv)
        self.args = args
        self.inputs: list[str] = []
        self.outputs: list[Path] = []
        self.start = time.perf_counter()

    def out_path(self, path: str) -> Path:
        p = Path(path)
        base = os.environ.get(OUTPUT_DIR_ENV)
        if base and not p.is_absolute():
            p = Path(base) / p
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(p)
        return p

    def seeds(self) -> dict:
        return {k: v for k, v in sorted(vars(self.args).items()) if "seed" in k}

    def write_manifests(self) -> None:
        manifest = {
            "command": self.command,
            "arguments": self.argv,
            "seeds": self.seeds(),
            "inputs": self.inputs,
            "outputs": [str(p) for p in self.outputs],
            "version": __version__,
            "wall_time_s": time.perf_counter() - self.start,
        }
        for p in self.outputs:
            with open(f"{p}.manifest.json", "w", encoding="utf-8") as fh:
                json.dump(manifest, fh, indent=2)
                fh.write("\n")


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _add_graph_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", metavar="FILE", help="XGRAPH file")
    src.add_argument("--cayley", action="store_true", help="sample a Cayley XOR graph")
    src.add_argument("--random", action="store_true", help="random regular bipartite graph")
    p.add_argument("-k", type=int, help="bits per Cayley vertex")
    p.add_argument("--epsilon", type=float, help="target 1 - gamma for the generator budget")
    p.add_argument("--c", type=float, default=1.0, help="budget constant c in ceil(c k^2 / eps^2)")
    p.add_argument("--generators", type=int, help="explicit generator count (overrides the budget)")
    p.add_argument("-n", type=int, help="vertices per side")
    p.add_argument("-d", "--degree", type=int, help="degree")
    p.add_argument("--dedup", action="store_true", help="avoid parallel edges")
    p.add_argument("--seed", type=int, help="random seed (required for --cayley/--random)")


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise _UsageError("missing required option(s): " + ", ".join("--" + m for m in missing))


def _load_graph(args, run: _Run):
    """Returns ``(graph, info)``; Cayley sources return the undirected graph."""
    if args.graph:
        run.inputs.append(args.graph)
        return read_xgraph(args.graph), {}
    if args.cayley:
        _require(args, "k", "seed")
        if args.generators is not None:
            count, clamped = args.generators, False
        else:
            _require(args, "epsilon")
            budget = ExpanderBudget.for_dimension(args.k, args.epsilon, args.c)
            count, clamped = budget.generator_count, budget.clamped
        gens = sample_generators(args.k, count, args.seed)
        return build_cayley_xor_graph(args.k, gens), {"generators": gens, "budget_clamped": clamped}
    _require(args, "n", "degree", "seed")
    return build_random_regular_bipartite(args.n, args.degree, args.seed, dedup=args.dedup), {}


def _graph_id(g) -> str | None:
    if isinstance(g, CayleyGraph):
        return bipartite_double_cover(g).graph_id
    return getattr(g, "graph_id", None)


def load_network(path: str | os.PathLike) -> LayeredNetwork:
    """Read a layered network description.

    Either a shorthand object ``{"n", "degree", "depth", "seed"}`` (or
    ``{"n", "identity": true, "depth"}``), or a list of layer entries,
    optionally wrapped as ``{"layers": [...]}``.  A layer entry is
    ``{"file": XGRAPH path}``, ``{"n", "degree", "seed"}``,
    ``{"n", "identity": true}`` or ``{"n", "complete": true}``.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if isinstance(data, dict) and "layers" not in data:
        depth = data.get("depth")
        if not isinstance(depth, int):
            raise FormatError(f"{path}: shorthand network needs an integer 'depth'")
        if data.get("identity"):
            return LayeredNetwork(tuple(identity_bipartite(int(data["n"])) for _ in range(depth)))
        try:
            return random_layered_network(int(data["n"]), int(data["degree"]), depth,
                                          int(data["seed"]), dedup=bool(data.get("dedup", False)))
        except KeyError as exc:
            raise FormatError(f"{path}: shorthand network lacks {exc}") from None
    entries = data["layers"] if isinstance(data, dict) else data
    if not isinstance(entries, list) or not entries:
        raise FormatError(f"{path}: expected a nonempty list of layers")
    layers = []
    for i, e in enumerate(entries):
        try:
            if "file" in e:
                layers.append(read_xgraph(path.parent / e["file"]))
            elif e.get("identity"):
                layers.append(identity_bipartite(int(e["n"])))
            elif e.get("complete"):
                layers.append(complete_bipartite(int(e["n"])))
            else:
                layers.append(build_random_regular_bipartite(
                    int(e["n"]), int(e["degree"]), int(e["seed"]), dedup=bool(e.get("dedup", False))))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"{path}: layer {i} is malformed ({exc})") from None
    return LayeredNetwork(tuple(layers))


# ======================================================================================
# Commands
# ======================================================================================


def _cmd_graph_gen(args, run: _Run) -> int:
    g, info = _load_graph(args, run)
    if isinstance(g, CayleyGraph):
        g = bipartite_double_cover(g)
    out = None
    if args.output:
        p = run.out_path(args.output)
        write_xgraph(g, p)
        out = str(p)
    payload = {
        "graph_id": g.graph_id,
        "construction": g.construction,
        "n_left": g.n_left,
        "n_right": g.n_right,
        "degree": g.degree,
        "has_parallel_edges": g.has_parallel_edges,
        "seed": args.seed,
        "generators": info.get("generators"),
        "budget_clamped": info.get("budget_clamped"),
        "output": out,
    }
    text = f"{g.construction} graph {g.n_left}x{g.n_right}, D={g.degree}, id {g.graph_id}"
    if info.get("budget_clamped"):
        text += " (generator budget clamped to 2^k - 1)"
    _emit(args, payload, text)
    return EXIT_OK


def _spectrum(args, g):
    kw = {}
    if args.method in (None, "power-iteration") and not isinstance(g, CayleyGraph):
        kw = {"tol": args.tol, "seed": args.power_seed}
        if args.max_iter is not None:
            kw["max_iter"] = args.max_iter
    return spectral_report(g, args.method, **kw)


def _cmd_graph_spectrum(args, run: _Run) -> int:
    g, _ = _load_graph(args, run)
    rep = _spectrum(args, g)
    d = report_to_dict(rep, graph_id=_graph_id(g))
    d.pop("checks")
    d.update(degree=rep.degree, n=rep.n, iterations=rep.iterations, residual=rep.residual)
    if args.output:
        p = run.out_path(args.output)
        p.write_text(json.dumps(d, indent=2) + "\n", encoding="utf-8")
    _emit(args, d, f"lambda2={rep.lambda2:.12g} gamma={rep.gamma:.12g} D={rep.degree} ({rep.method})")
    return EXIT_OK


def _random_subset(rng, n: int) -> np.ndarray:
    size = int(rng.integers(1, n + 1))
    return np.sort(rng.choice(n, size=size, replace=False))


def _cmd_verify_mixing(args, run: _Run) -> int:
    g, _ = _load_graph(args, run)
    rep = _spectrum(args, g)
    checks, sweep = [], None
    n_src = getattr(g, "n_left", None) or getattr(g, "vertex_count", None) or g.n
    n_tgt = getattr(g, "n_right", n_src)
    if args.pairs is None:
        if max(n_src, n_tgt) > EXHAUSTIVE_MIXING_LIMIT:
            raise ResourceError(
                f"exhaustive mixing needs n <= {EXHAUSTIVE_MIXING_LIMIT}; pass --pairs N to sample"
            )
        sw = mixing_sweep(g, rep)
        sweep = asdict(sw)
        violations = sw.violations_paper if args.bound == "paper" else sw.violations_standard
    else:
        _require(args, "sample_seed")
        rng = np.random.default_rng(args.sample_seed)
        pairs = [(_random_subset(rng, n_src), _random_subset(rng, n_tgt)) for _ in range(args.pairs)]
        checks = [check_mixing(g, s, t, rep) for s, t in pairs]
        key = "pass_paper" if args.bound == "paper" else "pass_standard"
        violations = sum(not getattr(c, key) for c in checks)
    d = report_to_dict(rep, checks, graph_id=_graph_id(g))
    d.update(bound=args.bound, sweep=sweep, violations=int(violations))
    if args.output:
        run.out_path(args.output).write_text(json.dumps(d, indent=2) + "\n", encoding="utf-8")
    _emit(args, d, f"mixing ({args.bound} bound): {violations} violation(s); gamma={rep.gamma:.6g}")
    return EXIT_VIOLATION if violations else EXIT_OK


def _cmd_verify_expansion(args, run: _Run) -> int:
    g, _ = _load_graph(args, run)
    rep = _spectrum(args, g)
    if args.mode == "sampled":
        _require(args, "sample_seed")
    checks = check_expansion(g, args.mode, args.samples, args.sample_seed or 0, rep, threads=args.threads)
    violations = sum(not c.satisfied for c in checks)
    d = report_to_dict(rep, checks, graph_id=_graph_id(g))
    d["violations"] = violations
    if args.output:
        run.out_path(args.output).write_text(json.dumps(d, indent=2) + "\n", encoding="utf-8")
    _emit(args, d, f"expansion: {len(checks)} subsets, {violations} below (1+gamma)|S|; gamma={rep.gamma:.6g}")
    return EXIT_VIOLATION if violations else EXIT_OK


def _network(args, run: _Run) -> LayeredNetwork:
    run.inputs.append(args.net)
    net = load_network(args.net)
    if args.tmax is not None:
        if args.tmax < 1:
            raise InvalidParameterError("--tmax must be positive")
        net = net.truncated(args.tmax)
    return net


def _cmd_verify_sensitivity(args, run: _Run) -> int:
    run.inputs.append(args.net)
    net = load_network(args.net)
    tmax = args.tmax if args.tmax is not None else 4 * math.ceil(math.log2(max(net.n_inputs, 2)))
    net = net.truncated(tmax)
    rep = sensitivity_depth(net, method=args.method, spectra=layer_spectra(net, seed=args.power_seed))
    summary = sensitivity_summary(rep)
    if args.csv:
        run.out_path(args.csv).write_text(frontiers_csv(rep), encoding="utf-8")
    if args.output:
        run.out_path(args.output).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    at = summary["fully_sensitive_at"]
    text = f"fully sensitive at depth {at}" if rep.achieved else f"full sensitivity {at} within {rep.depth_tested} layers"
    _emit(args, summary, text)
    return EXIT_OK if rep.achieved else EXIT_VIOLATION


def _parse_set(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise _UsageError(f"bad vertex list {text!r}") from None


def _cmd_verify_paths(args, run: _Run) -> int:
    net = _network(args, run)
    spectra = layer_spectra(net, seed=args.power_seed)
    if args.S is not None or args.T is not None:
        if args.S is None or args.T is None:
            raise _UsageError("--S and --T must be given together")
        jobs = [(_parse_set(args.S), _parse_set(args.T))]
    else:
        _require(args, "sample_seed")
        if not 1 <= args.set_size <= min(net.n_inputs, net.n_outputs):
            raise InvalidParameterError("--set-size must fit in both end layers")
        rng = np.random.default_rng(args.sample_seed)
        jobs = [
            (rng.choice(net.n_inputs, args.set_size, replace=False),
             rng.choice(net.n_outputs, args.set_size, replace=False))
            for _ in range(args.pairs)
        ]
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        reports = list(pool.map(lambda st: count_paths(net, st[0], st[1], spectra), jobs))
    cases = [
        {
            "s_size": r.s_size, "t_size": r.t_size, "exact_count": r.exact_count,
            "expected": r.expected, "bound": r.bound, "within_bound": r.within_bound,
            "absolute_deviation": r.absolute_deviation, "relative_deviation": r.relative_deviation,
        }
        for r in reports
    ]
    violations = sum(not r.within_bound for r in reports)
    d = {"depth": net.depth, "gamma_min": reports[0].gamma_min, "cases": cases, "violations": violations}
    if args.output:
        run.out_path(args.output).write_text(json.dumps(d, indent=2) + "\n", encoding="utf-8")
    worst = max(c["relative_deviation"] for c in cases)
    _emit(args, d, f"{len(cases)} path count(s), {violations} outside bound, max relative deviation {worst:.4g}")
    return EXIT_VIOLATION if violations else EXIT_OK


def _cmd_mask_gen(args, run: _Run) -> int:
    kernel = None if args.kernel is None else (args.kernel, args.kernel)
    if args.kind == "expander":
        _require(args, "fan_in")
        if args.graph:
            run.inputs.append(args.graph)
            source = read_xgraph(args.graph)
        else:
            _require(args, "seed")
            source = args.seed
        mask = xlinear_mask(args.n_out, args.n_in, args.fan_in, source, kernel=kernel)
    elif args.kind == "group":
        _require(args, "groups")
        mask = group_mask(args.n_out, args.n_in, args.groups, kernel)
    else:
        mask = dense_mask(args.n_out, args.n_in, kernel)
    out = None
    if args.output:
        p = run.out_path(args.output)
        write_xmask(mask, p)
        out = str(p)
    d = {
        "kind": mask.kind, "n_out": mask.n_out, "n_in": mask.n_in, "fan_in": mask.fan_in,
        "kernel": list(mask.kernel) if mask.kernel else None, "group_count": mask.group_count,
        "active_count": mask.active_count, "dense_count": mask.dense_count,
        "source_graph_id": mask.source_graph_id, "output": out,
    }
    _emit(args, d, f"{mask.kind} mask {mask.n_out}x{mask.n_in}, fan-in {mask.fan_in}: "
                   f"{mask.active_count} of {mask.dense_count} weights active")
    return EXIT_OK


def _cmd_train(args, run: _Run) -> int:
    from .nn.data import gaussian_mixture, load_idx_dataset, parity
    from .nn.schedule import AlphaSchedule
    from .nn.train import TrainConfig, build_mlp, save_checkpoint, train

    if args.data == "idx":
        _require(args, "images", "labels")
        run.inputs += [args.images, args.labels]
        data = load_idx_dataset(args.images, args.labels)
    elif args.data == "gaussian":
        data = gaussian_mixture(args.samples, args.classes, args.features, args.data_seed)
    else:
        data = parity(args.samples, args.features, args.data_seed)
    train_set, test_set = data.split(args.test_fraction, args.data_seed)
    hidden = [int(h) for h in args.hidden.split(",") if h.strip()]
    sizes = [data.n_features, *hidden, data.n_classes]
    masks = [args.mask] * len(hidden) + ["dense"]
    model = build_mlp(sizes, masks, args.seed, groups=args.groups, fan_in=args.fan_in)
    if args.schedule == "gradual":
        decay = args.decay_epochs or max(1, args.epochs // 2)
        if decay > args.epochs:
            raise InvalidParameterError("--decay-epochs exceeds --epochs")
        schedule = AlphaSchedule(decay, args.epochs - decay, args.curve)
    else:
        schedule = None
    frozen = tuple(int(i) for i in args.frozen_layers.split(",")) if args.frozen_layers else ()
    cfg = TrainConfig(
        seed=args.seed, epochs=args.epochs, learning_rate=args.lr, optimizer=args.optimizer,
        batch_size=args.batch_size, alpha_schedule=schedule, frozen_layers=frozen,
        frozen_epochs=args.frozen_epochs,
    )
    rep = train(model, train_set, cfg, eval_set=test_set)
    out = None
    if args.output:
        p = run.out_path(args.output)
        p.write_text(rep.to_csv(), encoding="utf-8")
        out = str(p)
    if args.checkpoint:
        ck = run.out_path(args.checkpoint)
        for extra in save_checkpoint(model, ck)[1:]:
            run.outputs.append(extra)
    d = {
        "epochs": [asdict(r) for r in rep.epochs],
        "final_grouped_accuracy": rep.final_grouped_accuracy,
        "output": out,
    }
    _emit(args, d, f"final grouped accuracy {rep.final_grouped_accuracy:.4f} after {args.epochs} epochs")
    return EXIT_OK


def _cmd_account(args, run: _Run) -> int:
    if args.spec:
        run.inputs.append(args.spec)
        specs = read_layer_specs(args.spec)
    else:
        specs = MODELS[args.model]()
    if args.write_spec:
        write_layer_specs(specs, run.out_path(args.write_spec))
    table = cost_table_dict(specs, args.include_bias)
    if args.output:
        p = run.out_path(args.output)
        body = cost_table_csv(specs, args.include_bias) if args.format == "csv" else json.dumps(table, indent=2) + "\n"
        p.write_text(body, encoding="utf-8")
    if args.format == "csv" and not args.json:
        print(cost_table_csv(specs, args.include_bias), end="")
    else:
        print(json.dumps(table, indent=2))
    return EXIT_OK


# ======================================================================================
# Parser and dispatch
# ======================================================================================


def _add_common(p: argparse.ArgumentParser, output_help: str = "output file") -> None:
    p.add_argument("-o", "--output", help=output_help)
    p.add_argument("--json", action="store_true", help="print the JSON report on stdout")
    p.add_argument("--threads", type=int, default=1, help="worker threads for verification sweeps")


def _add_spectral(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=["character-sum", "power-iteration", "dense-eigensolve"])
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--power-seed", type=int, default=0, help="start-vector seed for power iteration")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xnet", description="Expander connectivity toolkit")
    parser.add_argument("--version", action="version", version=f"xnet {__version__}")
    top = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    graph = top.add_parser("graph", help="generate graphs or measure spectra")
    gsub = graph.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = gsub.add_parser("gen", help="write an XGRAPH file")
    _add_graph_source(p)
    _add_common(p, "XGRAPH file to write")
    p.set_defaults(func=_cmd_graph_gen)
    p = gsub.add_parser("spectrum", help="second eigenvalue and spectral gap")
    _add_graph_source(p)
    _add_spectral(p)
    _add_common(p, "JSON report file")
    p.set_defaults(func=_cmd_graph_spectrum)

    verify = top.add_parser("verify", help="check expansion, mixing, sensitivity or path counts")
    vsub = verify.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = vsub.add_parser("expansion")
    _add_graph_source(p)
    _add_spectral(p)
    p.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--sample-seed", type=int)
    _add_common(p, "JSON report file")
    p.set_defaults(func=_cmd_verify_expansion)
    p = vsub.add_parser("mixing")
    _add_graph_source(p)
    _add_spectral(p)
    p.add_argument("--bound", choices=["paper", "standard"], default="paper",
                   help="which bound decides the exit code")
    p.add_argument("--pairs", type=int, help="sample this many (S, T) pairs instead of all")
    p.add_argument("--sample-seed", type=int)
    _add_common(p, "JSON report file")
    p.set_defaults(func=_cmd_verify_mixing)
    p = vsub.add_parser("sensitivity")
    p.add_argument("--net", required=True, help="layered network JSON")
    p.add_argument("--tmax", type=int, help="maximum depth (default 4 ceil(log2 n))")
    p.add_argument("--method", choices=["forward", "meet"], default="forward")
    p.add_argument("--power-seed", type=int, default=0)
    p.add_argument("--csv", help="per-source frontier CSV to write")
    _add_common(p, "JSON summary file")
    p.set_defaults(func=_cmd_verify_sensitivity)
    p = vsub.add_parser("paths")
    p.add_argument("--net", required=True, help="layered network JSON")
    p.add_argument("--tmax", type=int)
    p.add_argument("--S", help="comma-separated input vertices")
    p.add_argument("--T", help="comma-separated output vertices")
    p.add_argument("--set-size", type=int, default=32)
    p.add_argument("--pairs", type=int, default=50)
    p.add_argument("--sample-seed", type=int)
    p.add_argument("--power-seed", type=int, default=0)
    _add_common(p, "JSON report file")
    p.set_defaults(func=_cmd_verify_paths)

    mask = top.add_parser("mask", help="generate connectivity masks")
    msub = mask.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = msub.add_parser("gen")
    p.add_argument("--kind", choices=["expander", "group", "dense"], required=True)
    p.add_argument("--n-out", type=int, required=True)
    p.add_argument("--n-in", type=int, required=True)
    p.add_argument("--fan-in", type=int)
    p.add_argument("--groups", type=int)
    p.add_argument("--kernel", type=int, help="square kernel size for conv masks")
    p.add_argument("--graph", help="XGRAPH source for an expander mask")
    p.add_argument("--seed", type=int)
    _add_common(p, "XMASK file to write")
    p.set_defaults(func=_cmd_mask_gen)

    p = top.add_parser("train", help="train a masked MLP with gradual or direct grouping")
    p.add_argument("--data", choices=["gaussian", "parity", "idx"], default="gaussian")
    p.add_argument("--images")
    p.add_argument("--labels")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--features", type=int, default=16)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.25)
    p.add_argument("--hidden", default="64,64", help="comma-separated hidden widths")
    p.add_argument("--mask", choices=["group", "expander", "dense"], default="group")
    p.add_argument("--groups", type=int, default=4)
    p.add_argument("--fan-in", type=int)
    p.add_argument("--schedule", choices=["gradual", "direct"], default="gradual")
    p.add_argument("--decay-epochs", type=int)
    p.add_argument("--curve", choices=["linear", "cosine"], default="linear")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=5e-4)
    p.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--frozen-layers", help="comma-separated layer indices trained at the frozen rate")
    p.add_argument("--frozen-epochs", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--checkpoint", help="checkpoint file to write")
    _add_common(p, "per-epoch CSV report")
    p.set_defaults(func=_cmd_train)

    p = top.add_parser("account", help="parameter and MAC counts")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="layer-spec text file")
    src.add_argument("--model", choices=sorted(MODELS))
    p.add_argument("--include-bias", action="store_true")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--write-spec", help="also write the layer specs to this file")
    _add_common(p, "cost table file")
    p.set_defaults(func=_cmd_account)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    command = args.command + (f" {args.sub}" if getattr(args, "sub", None) else "")
    run = _Run(command, argv, args)
    try:
        code = args.func(args, run)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"xnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, ConvergenceError, MemoryError) as exc:
        print(f"xnet: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (XNetError, ValueError, OSError) as exc:
        print(f"xnet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    run.write_manifests()
    return code


if __name__ == "__main__":
    sys.exit(main())
