"""Command-line entry point: ``lgmdopt <command> [options]``.

Every artefact written carries a metadata block (tool version, seed and a
hash of the resolved run configuration) as ``#`` lines in CSV files or a
``meta`` object in JSON files.

Exit codes: 0 success, 2 usage, 3 config or data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, IllConditioned, LgmdError, NumericalBlowup, PopulationTooSmall
from .events import (CompositeDesign, Motion, Shape, StimulusSpec, drop_events, parse_event_file,
                     parse_label_file, pool_to_grid, serialize_events, serialize_labels, synthesize,
                     synthesize_composite)
from .network import (REFERENCE_CLAMP, REFERENCE_PARAMS, SimResult, Topology, Variant, build,
                      load_network_config, network_config, simulate)
from .neuron import DT, NeuronConstants
from .objective import DetectorConfig, ScoreConfig, evaluate, mann_whitney_u
from .optimize import AcquisitionConfig, AcqKind, DeConfig, Method, run_campaign
from .problem import LoomingObjective

log = logging.getLogger("lgmdopt")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4
COMPARE_COLUMNS = ("Fit", "Eva", "Acc", "Sen", "Pre", "Spe")
SIGNIFICANCE = 0.05
METHODS = {m.value.lower(): m for m in Method}


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# Metadata and output helpers


def config_hash(args: argparse.Namespace) -> str:
    skip = {"out", "jobs", "func", "verbose", "config"}
    resolved = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    blob = json.dumps(resolved, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def meta(args) -> dict:
    return {"tool": "lgmdopt", "version": __version__, "command": args.command,
            "seed": args.seed, "config_hash": config_hash(args)}


def meta_lines(args) -> list[str]:
    return [f"{k}: {v}" for k, v in meta(args).items()]


def out_dir(args) -> Path:
    path = Path(args.out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc}") from None
    return path


def write_bytes(path: Path, data: bytes):
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None
    log.info("wrote %s", path)


def write_csv(path: Path, args, header, rows):
    with open(path, "w", newline="") as fh:
        for line in meta_lines(args):
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    log.info("wrote %s", path)


def write_json(path: Path, args, payload: dict):
    with open(path, "w") as fh:
        json.dump({"meta": meta(args), **payload}, fh, indent=2)
        fh.write("\n")
    log.info("wrote %s", path)


def read_csv_rows(path) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    return rows[1:]


# --------------------------------------------------------------------------
# Shared option groups


def add_stimulus_options(p):
    p.add_argument("--stimulus", help="event CSV; the synthetic composite is used when omitted")
    p.add_argument("--labels", help="label CSV (default: the stimulus path with .labels.csv)")
    p.add_argument("--stimulus-seed", type=int, default=0, help="seed of the synthetic composite")
    p.add_argument("--drop", type=float, default=0.0, help="probability of dropping each event")


def add_network_options(p):
    p.add_argument("--network", help="network config JSON; reference parameters when omitted")
    p.add_argument("--variant", choices=[v.value for v in Variant], type=str.upper)
    p.add_argument("--clamp", type=float, help="STDP weight clamp c in [0, 1]")
    p.add_argument("--grid", type=int, default=32, help="side of the P layer")
    p.add_argument("--pool", type=int, default=4, help="pooling factor for IP and IS")


def add_objective_options(p):
    p.add_argument("--window", type=float, default=10.0, help="spike-rate window (ms)")
    p.add_argument("--sl", type=float, default=13.0, help="loom threshold on the window spike count")
    p.add_argument("--lead", type=float, default=0.10, help="fraction of a loom that must remain at detection")
    p.add_argument("--k", type=float, default=1.0, help="reward constant")
    p.add_argument("--l", type=float, default=1.0, help="punishment peak")
    p.add_argument("--score-c", type=float, default=0.5, help="punishment floor")


def detector(args) -> DetectorConfig:
    return DetectorConfig(args.window, args.sl, args.lead)


def score_config(args, consts: NeuronConstants) -> ScoreConfig:
    return ScoreConfig(args.k, args.l, args.score_c, V_spk=consts.V_T, V_rest=consts.E_L)


def load_stimulus(args):
    if args.stimulus is None:
        stream, labels = synthesize_composite(args.stimulus_seed)
    else:
        spath = Path(args.stimulus)
        lpath = Path(args.labels) if args.labels else _sidecar(spath)
        try:
            stream = parse_event_file(spath.read_bytes())
            labels = parse_label_file(lpath.read_bytes())
        except OSError as exc:
            raise ConfigError(f"cannot read stimulus: {exc}") from None
    if args.drop:
        stream = drop_events(stream, args.drop, args.seed)
    return stream, labels


def _sidecar(events_path: Path) -> Path:
    name = events_path.name
    stem = name[: -len(".events.csv")] if name.endswith(".events.csv") else events_path.stem
    return events_path.with_name(f"{stem}.labels.csv")


def load_network(args):
    """(params, topology, variant, constants, clamp) from the flags."""
    if args.network:
        src = args.network
        if isinstance(src, str) and not src.lstrip().startswith("{") and not os.path.exists(src):
            raise ConfigError(f"network config {src} not found")
        params, topo, variant, consts, clamp = load_network_config(src)
        if args.variant:
            variant = Variant(args.variant)
    else:
        variant = Variant(args.variant or "LGMD")
        params = REFERENCE_PARAMS[variant]
        topo = Topology(width=args.grid, height=args.grid, pool=args.pool)
        consts, clamp = NeuronConstants(), REFERENCE_CLAMP
    if args.clamp is not None:
        clamp = args.clamp
    if not 0.0 <= clamp <= 1.0:
        raise ConfigError(f"clamp c={clamp} outside [0, 1]")
    return params, topo, variant, consts, clamp


def make_executor(args):
    return ProcessPoolExecutor(args.jobs) if args.jobs and args.jobs > 1 else None


# --------------------------------------------------------------------------
# Commands


def cmd_gen(args):
    out = out_dir(args)
    comment = "\n".join(meta_lines(args))
    if args.composite:
        stream, labels = synthesize_composite(args.seed, CompositeDesign(width=args.width, height=args.height))
        name = "composite"
    else:
        if args.shape is None or args.motion is None:
            raise UsageError("give --composite or both --shape and --motion")
        if args.rate is None:
            raise UsageError(f"--motion {args.motion} needs --rate")
        spec = StimulusSpec(Shape(args.shape), Motion(args.motion), args.rate,
                            int(round(args.duration * 1000)), dark_on_light=not args.light_on_dark,
                            width=args.width, height=args.height, size=args.size)
        stream, labels = synthesize(spec, args.seed)
        name = f"{args.shape}_{args.motion}"
    write_bytes(out / f"{name}.events.csv", serialize_events(stream, comment))
    write_bytes(out / f"{name}.labels.csv", serialize_labels(labels, comment))
    print(f"{name}: {len(stream)} events over {stream.duration / 1e6:.3f} s")


def _write_sim(out: Path, args, result: SimResult):
    write_csv(out / "spikes.csv", args, ["t_ms"], [[f"{t:.1f}"] for t in result.lgmd_spike_times])
    t = np.arange(result.n_steps) * result.dt
    write_csv(out / "voltage.csv", args, ["t_ms", "v_mV"],
              [[f"{a:.1f}", repr(float(v))] for a, v in zip(t, result.lgmd_voltage)])


def cmd_simulate(args):
    out = out_dir(args)
    stream, labels = load_stimulus(args)
    params, topo, variant, consts, clamp = load_network(args)
    net = build(params, topo, variant, consts, clamp)
    if (stream.width, stream.height) != (topo.width, topo.height):
        stream = pool_to_grid(stream, topo.width, topo.height)
    result = simulate(net, stream)
    _write_sim(out, args, result)
    rep = evaluate(result, labels, detector(args), score_config(args, consts))
    write_json(out / "report.json", args, {
        "network": network_config(params, topo, variant, consts, clamp),
        "report": rep.to_dict(),
        "layer_spike_counts": result.layer_spike_counts,
    })
    print(f"LGMD spikes: {len(result.lgmd_spike_times)}  Acc={rep.Acc:.2f} F_acc={rep.F_acc:.6g}")


def cmd_evaluate(args):
    out = out_dir(args)
    try:
        labels = parse_label_file(Path(args.labels).read_bytes())
        spikes = np.array([float(r[0]) for r in read_csv_rows(args.spikes)])
        volt = np.array([float(r[1]) for r in read_csv_rows(args.voltage)])
    except (OSError, IndexError, ValueError) as exc:
        if isinstance(exc, LgmdError):
            raise
        raise ConfigError(f"cannot read simulation output: {exc}") from None
    result = SimResult(spikes, volt, dt=args.dt)
    rep = evaluate(result, labels, detector(args), score_config(args, NeuronConstants()))
    write_json(out / "report.json", args, {"report": rep.to_dict()})
    print(rep.to_json())


def _neg_sphere(x):
    return -float(np.sum(np.square(x)))


def _problem(args):
    """(objective, bounds, names, variant info) for --problem."""
    if args.problem == "sphere":
        D = args.dim
        bounds = np.column_stack([np.full(D, -5.0), np.full(D, 5.0)])
        return _neg_sphere, bounds, [f"x{i}" for i in range(D)], None
    stream, labels = load_stimulus(args)
    params, topo, variant, consts, clamp = load_network(args)
    obj = LoomingObjective(stream, labels, variant, topo, consts, clamp, detector(args),
                           score_config(args, consts))
    return obj, obj.bounds.as_array(), list(obj.names), obj


def _campaign(args, method: Method, seed: int, objective, bounds, executor):
    de_cfg = None
    if method is Method.DE:
        NP = args.np or math.ceil(10 * len(bounds) / 3)
        de_cfg = DeConfig(NP, args.F, args.CR)
    acq = None
    if method is Method.BO_UCB and args.kappa_schedule:
        acq = AcquisitionConfig(AcqKind.UCB_SCHEDULED, d=len(bounds))
    if args.budget is None:
        raise UsageError("--budget is required")
    try:
        return run_campaign(method, objective, bounds, seed=seed, budget=args.budget, NP=args.np,
                            executor=executor, de_config=de_cfg, LP=args.lp, acquisition=acq)
    except (ValueError, PopulationTooSmall) as exc:
        raise ConfigError(str(exc)) from None


def _method(name: str) -> Method:
    try:
        return METHODS[name.lower()]
    except KeyError:
        raise UsageError(f"unknown method {name}; choose from {', '.join(METHODS)}") from None


def cmd_optimize(args):
    out = out_dir(args)
    method = _method(args.method)
    objective, bounds, names, obj = _problem(args)
    with _executor_scope(args) as ex:
        res = _campaign(args, method, args.seed, objective, bounds, ex)
    res.write_log(out / "campaign.csv", names, header_lines=meta_lines(args))
    report = None
    if obj is not None and res.best_params is not None:
        rep = obj.report(res.best_params)
        report = rep.to_dict() if rep else None
        best = obj.params(res.best_params)
        write_json(out / "best_params.json", args,
                   network_config(best, obj.topo, obj.variant, obj.consts, obj.clamp_c))
    res.write_summary(out / "summary.json", names, report, meta=meta(args))
    print(f"{method.value}: {res.n_evals} evaluations ({res.stop_reason}), best {res.best_fitness:.6g}")


class _executor_scope:
    def __init__(self, args):
        self.ex = make_executor(args)

    def __enter__(self):
        return self.ex

    def __exit__(self, *exc):
        if self.ex is not None:
            self.ex.shutdown()


def cmd_compare(args):
    out = out_dir(args)
    methods = [_method(m) for m in args.methods]
    if len(methods) < 2:
        raise UsageError("compare needs at least two methods")
    if args.runs < 2:
        raise UsageError("compare needs --runs >= 2")
    objective, bounds, names, obj = _problem(args)
    seeds = [args.seed + k for k in range(args.runs)]
    table = {}
    run_rows = []
    with _executor_scope(args) as ex:
        for col, method in enumerate(methods):
            label = f"{method.value}#{col}" if methods.count(method) > 1 else method.value
            rows = []
            for seed in seeds:
                res = _campaign(args, method, seed, objective, bounds, ex)
                acc = sen = pre = spe = math.nan
                if obj is not None and res.best_params is not None:
                    rep = obj.report(res.best_params)
                    if rep is not None:
                        acc, sen, pre, spe = rep.Acc, rep.Sen, rep.Pre, rep.Spe
                rows.append((res.best_fitness, res.n_evals, acc, sen, pre, spe))
                run_rows.append([label, seed, *[repr(float(v)) for v in rows[-1]]])
            table[label] = np.array(rows, dtype=float)
    labels = list(table)
    write_csv(out / "compare_runs.csv", args, ["method", "seed", *COMPARE_COLUMNS], run_rows)
    write_csv(out / "compare_table.csv", args, ["method", *COMPARE_COLUMNS],
              [[m, *[repr(float(v)) for v in np.mean(table[m], axis=0)]] for m in labels])
    utest = []
    for a in labels:
        row = [a]
        for b in labels:
            if a == b:
                row.append("-")
                continue
            _, p = mann_whitney_u(table[a][:, 0], table[b][:, 0])
            row.append(f"{'+' if p <= SIGNIFICANCE else '.'} {p:.4g}")
        utest.append(row)
    write_csv(out / "compare_utest.csv", args, ["method", *labels], utest)
    for m in labels:
        print(m, " ".join(f"{c}={v:.4g}" for c, v in zip(COMPARE_COLUMNS, np.mean(table[m], axis=0))))


def cmd_clamp_sweep(args):
    out = out_dir(args)
    stream, labels = load_stimulus(args)
    params, topo, variant, consts, _ = load_network(args)
    if (stream.width, stream.height) != (topo.width, topo.height):
        stream = pool_to_grid(stream, topo.width, topo.height)
    if not variant.plastic:
        raise ConfigError(f"clamp-sweep needs variant P or AP, got {variant.value}")
    values = []
    for c in args.c:
        if not 0.0 <= c <= 1.0:
            raise ConfigError(f"clamp c={c} outside [0, 1]")
        if c in values:
            warnings.warn(f"duplicate clamp value {c} ignored", stacklevel=1)
            log.warning("duplicate clamp value %g ignored", c)
            continue
        values.append(c)
    det, sc = detector(args), score_config(args, consts)
    rows = []
    for c in values:
        result = simulate(build(params, topo, variant, consts, c), stream)
        rep = evaluate(result, labels, det, sc)
        rows.append([repr(c), repr(rep.Acc), repr(rep.Sen), repr(rep.Pre), repr(rep.Spe)])
        print(f"c={c:g} Acc={rep.Acc:.2f}")
    write_csv(out / "clamp_sweep.csv", args, ["c", "acc", "sen", "pre", "spe"], rows)


# --------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (always recorded)")
    common.add_argument("--out", "-o", default=".", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="parallel objective evaluations")
    common.add_argument("--config", help="run config JSON whose keys set option defaults")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(prog="lgmdopt", parents=[common],
                                     description="Looming-detector simulation and tuning.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="synthesise a stimulus")
    p.add_argument("--composite", action="store_true", help="eight looms interleaved with eight distractors")
    p.add_argument("--shape", choices=[s.value for s in Shape], type=str.lower)
    p.add_argument("--motion", choices=[m.value for m in Motion], type=str.lower)
    p.add_argument("--rate", type=float, help="expansion rate or speed (px/s)")
    p.add_argument("--duration", type=float, default=1000.0, help="segment length (ms)")
    p.add_argument("--size", type=float, default=4.0, help="initial diameter (px)")
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--light-on-dark", action="store_true")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("simulate", parents=[common], help="run the network on a stimulus")
    add_stimulus_options(p)
    add_network_options(p)
    add_objective_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", parents=[common], help="score saved simulation output")
    p.add_argument("--spikes", required=True)
    p.add_argument("--voltage", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--dt", type=float, default=DT)
    add_objective_options(p)
    p.set_defaults(func=cmd_evaluate)

    def campaign_options(p):
        p.add_argument("--problem", choices=["looming", "sphere"], default="looming")
        p.add_argument("--dim", type=int, default=5, help="dimension of the sphere problem")
        p.add_argument("--budget", type=int, default=1000)
        p.add_argument("--np", type=int, help="population size (default ceil(10 D / 3))")
        p.add_argument("--lp", type=int, default=50, help="SADE learning period")
        p.add_argument("--F", type=float, default=0.6607)
        p.add_argument("--CR", type=float, default=0.9426)
        p.add_argument("--kappa-schedule", action="store_true", help="scheduled kappa for bo_ucb")
        add_stimulus_options(p)
        add_network_options(p)
        add_objective_options(p)

    p = sub.add_parser("optimize", parents=[common], help="run one optimisation campaign")
    p.add_argument("--method", default="sade", help=", ".join(METHODS))
    campaign_options(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("compare", parents=[common], help="compare methods over seeded runs")
    p.add_argument("--methods", nargs="+", default=["de", "sade", "bo_ei", "rng"])
    p.add_argument("--runs", type=int, default=5)
    campaign_options(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("clamp-sweep", parents=[common], help="accuracy against the STDP clamp")
    p.add_argument("--c", type=float, nargs="+", default=[0.0, 0.05, 0.25, 0.5, 1.0])
    add_stimulus_options(p)
    add_network_options(p)
    add_objective_options(p)
    p.set_defaults(func=cmd_clamp_sweep, variant="P")
    return parser


def _apply_config(parser, args, argv):
    """Fill options not given on the command line from the --config JSON."""
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read run config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("run config must be a JSON object")
    # re-parse with the config values as defaults so explicit flags still win
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = set(cfg) - known - {"command"}
    if unknown:
        raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
    if isinstance(cfg.get("network"), dict):
        cfg["network"] = json.dumps(cfg["network"])
    sub.set_defaults(**{k: v for k, v in cfg.items() if k != "command"})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _apply_config(parser, args, argv)
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"lgmdopt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalBlowup, IllConditioned, FloatingPointError) as exc:
        print(f"lgmdopt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (LgmdError, OSError, ValueError) as exc:
        print(f"lgmdopt: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
