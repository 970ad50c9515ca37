"""Command-line surface tying the pipeline together.

Subcommands: ``plan`` (hyperparameter grid), ``synth`` (dataset generation),
``split`` (train/val/test plans), ``transform`` (spectrogram stacks),
``train`` (one fold), ``eval`` (metrics report), ``detect`` (inference to
axle times), ``bench`` (raw vs spectrogram cost). Exit codes: 0 success,
1 usage error, 2 data/validation error.

Every artifact-writing subcommand echoes its fully resolved configuration
to ``run.json`` in the output directory, making reruns reproducible and
byte-identical for a fixed seed. A flat ``key = value`` config file can
seed any subcommand's options (flags win); ``VADER_SEED`` provides the seed
when no flag or file sets one.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cwt import spectrogram_stack, write_stack
from .data import Dataset, label_indices, load_dataset
from .engine import ParamStore, load_checkpoint, save_checkpoint
from .errors import DataError, VaderError
from .metrics import (
    LABEL_ERROR_THRESHOLD_CM,
    SPATIAL_THRESHOLD_CM,
    MetricsAccumulator,
    PeakConfig,
    match_axles,
    pick_peaks,
)
from .model import VaderConfig, build_vader, infer, model_manifest
from .planner import (
    DEFAULT_KERNEL_SIZES,
    DEFAULT_POOL_SIZES,
    DEFAULT_POOL_STEPS,
    HyperParams,
    InputKind,
    plan_grid,
)
from .simulate import BridgeConfig, DatasetConfig, generate_dataset
from .splits import Scenario, SplitPlan, dgps_split, stratified_split
from .training import TrainSchedule, train


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage maps to code 1."""

    def error(self, message):
        raise UsageError(message)


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config_defaults(parser, args, file_values: dict[str, str], argv) -> None:
    """File values fill options not given explicitly on the command line."""
    explicit = set()
    for action in parser._actions:
        for opt in action.option_strings:
            if any(tok == opt or tok.startswith(opt + "=") for tok in argv):
                explicit.add(action.dest)
    known = {a.dest: a for a in parser._actions}
    for key, raw in file_values.items():
        if key == "config" or key not in known or key in explicit:
            continue
        action = known[key]
        if action.type is not None:
            value = action.type(raw)
        elif isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes", "on")
        else:
            value = raw
        setattr(args, key, value)


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("VADER_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"VADER_SEED must be an integer, got {env!r}") from None
    return 0


def _write_run_json(out_dir: Path, command: str, args) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    payload = {"command": command, "version": __version__, "config": resolved}
    (out_dir / "run.json").write_text(
        json.dumps(payload, indent=1, sort_keys=True, default=str) + "\n", encoding="utf-8"
    )


def _parse_fraction(text: str) -> float:
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v)


def _parse_distribution(text: str) -> dict[int, float]:
    dist = {}
    for part in text.split(","):
        count, weight = part.split(":")
        dist[int(count)] = float(weight)
    return dist


def _parse_range(text: str) -> tuple[float, float]:
    lo, hi = text.split(":")
    return float(lo), float(hi)


def _hyper_from_args(args) -> HyperParams:
    return HyperParams(
        input_kind=InputKind(args.input_kind),
        kernel_size=args.kernel_size,
        pool_size=args.pool_size,
        pool_steps=args.pool_steps,
        base_width=args.base_width,
    )


# ---------------------------------------------------------------- plan


def _cmd_plan(args) -> int:
    out_dir = Path(args.out)
    _write_run_json(out_dir, "plan", args)
    entries = plan_grid(
        kernel_sizes=args.kernel_sizes,
        pool_sizes=args.pool_sizes,
        pool_steps=args.pool_steps,
        sample_rate=args.fs,
        f_low_certain=args.fl_certain,
        f_low_useful=args.fl_useful,
    )
    csv_path = out_dir / "plan.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kernel_size", "pool_size", "pool_steps", "input_kind", "mrf", "class"])
        for e in entries:
            writer.writerow(
                [
                    e.hyper.kernel_size,
                    e.hyper.pool_size,
                    e.hyper.pool_steps,
                    e.hyper.input_kind.value,
                    e.mrf,
                    e.classification.value,
                ]
            )
    counts: dict[str, int] = {}
    for e in entries:
        counts[e.classification.value] = counts.get(e.classification.value, 0) + 1
    summary = {
        "entries": len(entries),
        "classes": counts,
        "object_size_certain": int(np.ceil(args.fs / args.fl_certain)),
        "object_size_useful": int(np.ceil(args.fs / args.fl_useful)),
    }
    (out_dir / "plan.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    print(f"wrote {csv_path} ({len(entries)} entries)")
    return 0


# ---------------------------------------------------------------- synth


def _cmd_synth(args) -> int:
    seed = _resolve_seed(args)
    args.seed = seed
    out_dir = Path(args.out)
    _write_run_json(out_dir, "synth", args)
    cfg = DatasetConfig(
        speed_range=args.speed_range,
        spacing_range=args.spacing_range,
        frequency_range=args.frequency_range,
        noise_std=args.noise_std,
        bridge=BridgeConfig(
            sensor_positions=tuple(float(p) for p in args.sensor_positions.split(",")),
            sample_rate=args.fs,
            click_gain=args.click_gain,
        ),
    )
    dataset = generate_dataset(
        args.n, args.distribution, out_dir / "passages", seed=seed, config=cfg
    )
    hist = dataset.axle_count_histogram()
    print(f"wrote {len(dataset)} passages under {out_dir / 'passages'}")
    print("axle-count histogram: " + ", ".join(f"{k}: {v}" for k, v in hist.items()))
    return 0


# ---------------------------------------------------------------- split


def _cmd_split(args) -> int:
    seed = _resolve_seed(args)
    args.seed = seed
    dataset = load_dataset(args.dataset)
    if args.scenario == Scenario.STRATIFIED.value:
        plan = stratified_split(dataset, test_fraction=_parse_fraction(args.fraction), seed=seed)
    else:
        plan = dgps_split(dataset, seed=seed, modal_axles=args.modal_axles)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(plan.to_json() + "\n", encoding="utf-8")
    sizes = [len(f) for f in plan.folds]
    print(
        f"{plan.scenario.value}: {len(plan.test_ids)} test, folds {sizes} "
        f"({sum(sizes)} train/val) -> {out}"
    )
    return 0


# ---------------------------------------------------------------- transform


def _cmd_transform(args) -> int:
    out_dir = Path(args.out)
    _write_run_json(out_dir, "transform", args)
    dataset = load_dataset(args.dataset)
    passages = [dataset.by_id(args.passage)] if args.passage else list(dataset)
    n_written = 0
    for passage in passages:
        for ch in passage.channels:
            stack = spectrogram_stack(ch.samples)
            path = out_dir / f"{passage.passage_id}_{ch.sensor_id}.stack"
            write_stack(
                path,
                stack,
                meta={
                    "passage_id": passage.passage_id,
                    "sensor_id": ch.sensor_id,
                    "sample_rate": ch.sample_rate,
                },
            )
            n_written += 1
    print(f"wrote {n_written} stacks under {out_dir}")
    return 0


# ---------------------------------------------------------------- train


def _cmd_train(args) -> int:
    seed = _resolve_seed(args)
    args.seed = seed
    out_dir = Path(args.out)
    _write_run_json(out_dir, "train", args)
    dataset = load_dataset(args.dataset)
    plan = SplitPlan.from_json(Path(args.split).read_text(encoding="utf-8"))
    cfg = VaderConfig(hyper=_hyper_from_args(args), sample_rate=args.fs)
    schedule = TrainSchedule(
        max_epochs=args.epochs,
        batch_size=args.batch_size,
        initial_lr=args.lr,
        plateau_patience=args.plateau_patience,
        lr_factor=args.lr_factor,
        stop_patience=args.stop_patience,
    )
    log = print if args.verbose else None
    network, store, history = train(
        cfg, dataset, plan, args.fold, schedule, seed=seed, log=log
    )
    save_checkpoint(out_dir / "model", network, store, seed=seed)
    (out_dir / "history.csv").write_text(history.to_csv(), encoding="utf-8")
    (out_dir / "model_manifest.json").write_text(
        json.dumps(model_manifest(network, cfg), indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    best = history.best_epoch
    print(
        f"trained {len(history.train_loss)} epochs; best epoch {best} "
        f"(val F1 {history.val_f1[best]:.2f}) -> {out_dir / 'model'}"
    )
    return 0


def _load_model(stem: str):
    manifest_path = Path(str(stem) + "_manifest.json")
    if not manifest_path.exists():
        manifest_path = Path(stem).parent / "model_manifest.json"
    desc = json.loads(manifest_path.read_text(encoding="utf-8"))
    cfg = VaderConfig(
        hyper=HyperParams(
            input_kind=InputKind(desc["input_kind"]),
            kernel_size=desc["kernel_size"],
            pool_size=desc["pool_size"],
            pool_steps=desc["pool_steps"],
            base_width=desc["base_width"],
        ),
        sample_rate=desc["sample_rate"],
        max_width=desc.get("max_width", 256),
    )
    network = build_vader(cfg)
    store = ParamStore(network.params())
    load_checkpoint(stem, network, store)
    return network, cfg


def _sensor_input(cfg: VaderConfig, channel):
    if cfg.hyper.input_kind is InputKind.SPECTROGRAM:
        return spectrogram_stack(channel.samples)
    return channel


# ---------------------------------------------------------------- eval


def _evaluate_passage(network, cfg, passage, peak_cfg):
    rows = []
    for ch in passage.channels:
        probs = infer(network, _sensor_input(cfg, ch))
        peaks = pick_peaks(probs, peak_cfg)
        labels = label_indices(passage, ch.sensor_id)
        vels = np.asarray([a.velocity for a in passage.axles[ch.sensor_id]])
        at_200 = match_axles(peaks, labels, vels, SPATIAL_THRESHOLD_CM)
        at_37 = match_axles(peaks, labels, vels, LABEL_ERROR_THRESHOLD_CM)
        rows.append((ch.sensor_id, at_200, at_37))
    return rows


def _cmd_eval(args) -> int:
    out_dir = Path(args.out)
    _write_run_json(out_dir, "eval", args)
    dataset = load_dataset(args.dataset)
    network, cfg = _load_model(args.checkpoint)
    if args.split:
        plan = SplitPlan.from_json(Path(args.split).read_text(encoding="utf-8"))
        ids = plan.test_ids if args.ids == "test" else plan.fold_val_ids(int(args.ids))
    else:
        ids = [p.passage_id for p in dataset]
    passages = [dataset.by_id(pid) for pid in sorted(ids)]
    peak_cfg = PeakConfig(args.min_confidence, args.min_distance)

    acc = MetricsAccumulator()
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(
                pool.map(lambda p: _evaluate_passage(network, cfg, p, peak_cfg), passages)
            )
    else:
        results = [_evaluate_passage(network, cfg, p, peak_cfg) for p in passages]
    for rows in results:
        for sensor_id, at_200, at_37 in rows:
            acc.add(sensor_id, at_200, at_37)
    report = acc.report()
    (out_dir / "metrics.json").write_text(
        json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    with (out_dir / "per_sensor.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sensor", "tp", "fp", "fn", "f1_200", "f1_37", "mean_spatial_error_cm", "msa"])
        for sensor_id, row in report.per_sensor.items():
            writer.writerow(
                [
                    sensor_id,
                    row["tp"],
                    row["fp"],
                    row["fn"],
                    repr(row["f1_200"]),
                    repr(row["f1_37"]),
                    repr(row["mean_spatial_error_cm"]),
                    repr(row["msa"]),
                ]
            )
    print(
        f"evaluated {len(passages)} passages: F1@200cm {report.f1_200:.2f} "
        f"F1@37cm {report.f1_37:.2f} mean spatial error {report.mean_spatial_error_cm:.2f} cm "
        f"MSA {report.msa:.2f}"
    )
    return 0


# ---------------------------------------------------------------- detect


def _parse_positions(text: str | None) -> dict[str, float]:
    if not text:
        return {}
    out = {}
    for part in text.split(","):
        sensor_id, pos = part.split("=")
        out[sensor_id.strip()] = float(pos)
    return out


def _estimate_velocities(per_sensor: dict, positions: dict[str, float]) -> dict[int, float]:
    """Per-axle speed from detection time differences between the two most
    distant positioned sensors; needs equal detection counts on both."""
    placed = [s for s in per_sensor if s in positions]
    if len(placed) < 2:
        return {}
    placed.sort(key=lambda s: positions[s])
    first, last = placed[0], placed[-1]
    t_first, t_last = per_sensor[first], per_sensor[last]
    if len(t_first) != len(t_last):
        return {}
    gap = positions[last] - positions[first]
    out = {}
    for i, (ta, tb) in enumerate(zip(t_first, t_last)):
        dt = float(tb - ta)
        if dt > 0 and gap > 0:
            out[i] = gap / dt
    return out


def _cmd_detect(args) -> int:
    dataset = load_dataset(args.dataset)
    network, cfg = _load_model(args.checkpoint)
    peak_cfg = PeakConfig(args.min_confidence, args.min_distance)
    positions = _parse_positions(args.sensor_positions)
    passages = [dataset.by_id(args.passage)] if args.passage else list(dataset)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["passage_id", "sensor_id", "axle", "time_s", "velocity_mps"])
        for passage in passages:
            per_sensor = {}
            for ch in passage.channels:
                probs = infer(network, _sensor_input(cfg, ch))
                peaks = pick_peaks(probs, peak_cfg)
                per_sensor[ch.sensor_id] = peaks / ch.sample_rate
            velocities = _estimate_velocities(per_sensor, positions)
            for sensor_id in sorted(per_sensor):
                for i, t in enumerate(per_sensor[sensor_id]):
                    v = repr(velocities[i]) if i in velocities else ""
                    writer.writerow([passage.passage_id, sensor_id, i, repr(float(t)), v])
    print(f"wrote detections -> {out}")
    return 0


# ---------------------------------------------------------------- bench


def _cmd_bench(args) -> int:
    seed = _resolve_seed(args)
    args.seed = seed
    out_dir = Path(args.out)
    _write_run_json(out_dir, "bench", args)
    rng = np.random.Generator(np.random.PCG64(seed))
    signal = rng.normal(size=args.n_samples).astype(np.float32)

    raw_cfg = VaderConfig(HyperParams(InputKind.RAW, args.kernel_size, args.pool_size, args.pool_steps, args.base_width))
    spec_cfg = VaderConfig(HyperParams(InputKind.SPECTROGRAM, args.kernel_size, args.pool_size, args.pool_steps, args.base_width))
    raw_net = build_vader(raw_cfg)
    raw_net.init_params(seed)
    spec_net = build_vader(spec_cfg)
    spec_net.init_params(seed)

    infer(raw_net, signal)  # warmup
    t0 = time.perf_counter()
    for _ in range(args.repeats):
        infer(raw_net, signal)
    raw_time = (time.perf_counter() - t0) / args.repeats

    stack = spectrogram_stack(signal)
    infer(spec_net, stack)  # warmup
    t0 = time.perf_counter()
    for _ in range(args.repeats):
        stack = spectrogram_stack(signal)
        infer(spec_net, stack)
    spec_time = (time.perf_counter() - t0) / args.repeats

    raw_bytes = signal.nbytes
    stack_bytes = stack.nbytes
    result = {
        "n_samples": args.n_samples,
        "raw_inference_s": raw_time,
        "cwt_plus_spectrogram_inference_s": spec_time,
        "speedup": spec_time / raw_time,
        "raw_input_bytes": raw_bytes,
        "spectrogram_input_bytes": stack_bytes,
        "memory_ratio": stack_bytes / raw_bytes,
    }
    (out_dir / "bench.json").write_text(json.dumps(result, indent=1, sort_keys=True) + "\n")
    print(
        f"raw {raw_time*1e3:.1f} ms vs transform+spectrogram {spec_time*1e3:.1f} ms "
        f"({result['speedup']:.1f}x); input bytes ratio {result['memory_ratio']:.0f}x"
    )
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> _Parser:
    parser = _Parser(prog="vader", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"vader {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, default=None, help="RNG seed (or VADER_SEED)")

    p = sub.add_parser("plan", help="classify the hyperparameter grid")
    add_common(p)
    p.add_argument("--fs", type=float, default=600.0, help="sample rate in Hz")
    p.add_argument("--fl-certain", type=float, default=5.0, help="lowest frequency to resolve")
    p.add_argument("--fl-useful", type=float, default=1.0, help="lowest informative frequency")
    p.add_argument("--kernel-sizes", type=_parse_int_list, default=DEFAULT_KERNEL_SIZES)
    p.add_argument("--pool-sizes", type=_parse_int_list, default=DEFAULT_POOL_SIZES)
    p.add_argument("--pool-steps", type=_parse_int_list, default=DEFAULT_POOL_STEPS)
    p.add_argument("--out", default="plan_out")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    add_common(p)
    p.add_argument("--n", type=int, default=250)
    p.add_argument(
        "--distribution", type=_parse_distribution, default="8:0.5,12:0.3,16:0.2", help="axles:weight,…"
    )
    p.add_argument("--speed-range", type=_parse_range, default=(20.0, 60.0))
    p.add_argument("--spacing-range", type=_parse_range, default=(2.5, 8.0))
    p.add_argument("--frequency-range", type=_parse_range, default=(5.0, 6.9))
    p.add_argument("--noise-std", type=float, default=0.1)
    p.add_argument("--click-gain", type=float, default=BridgeConfig.click_gain)
    p.add_argument("--sensor-positions", default="8.2")
    p.add_argument("--fs", type=float, default=600.0)
    p.add_argument("--out", default="synth_out")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("split", help="build a train/val/test split plan")
    add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--scenario", choices=[s.value for s in Scenario], default=Scenario.STRATIFIED.value)
    p.add_argument("--fraction", default="1/6", help="test fraction (stratified)")
    p.add_argument("--modal-axles", type=int, default=None, help="tie override (dgps)")
    p.add_argument("--out", default="split.json")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("transform", help="write spectrogram stacks")
    add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--passage", default=None, help="restrict to one passage id")
    p.add_argument("--out", default="stacks")
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("train", help="train one cross-validation fold")
    add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--fold", type=int, default=0)
    p.add_argument("--input-kind", choices=[k.value for k in InputKind], default=InputKind.RAW.value)
    p.add_argument("--kernel-size", type=int, default=9)
    p.add_argument("--pool-size", type=int, default=2)
    p.add_argument("--pool-steps", type=int, default=4)
    p.add_argument("--base-width", type=int, default=16)
    p.add_argument("--fs", type=float, default=600.0)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--plateau-patience", type=int, default=3)
    p.add_argument("--lr-factor", type=float, default=0.3)
    p.add_argument("--stop-patience", type=int, default=6)
    p.add_argument("--deterministic", action="store_true", help="single-threaded reference mode (the default execution model)")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--out", default="train_out")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True, help="checkpoint stem (without .bin/.json)")
    p.add_argument("--split", default=None)
    p.add_argument("--ids", default="test", help="'test' or a fold index (with --split)")
    p.add_argument("--min-confidence", type=float, default=0.25)
    p.add_argument("--min-distance", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="eval_out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("detect", help="inference + peak picking to axle times")
    add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--passage", default=None)
    p.add_argument("--min-confidence", type=float, default=0.25)
    p.add_argument("--min-distance", type=int, default=20)
    p.add_argument(
        "--sensor-positions",
        default=None,
        help="sensor geometry for velocity estimation, e.g. 's0=4.1,s1=12.3'",
    )
    p.add_argument("--out", default="detections.csv")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("bench", help="raw vs spectrogram cost on one signal")
    add_common(p)
    p.add_argument("--n-samples", type=int, default=7200)
    p.add_argument("--kernel-size", type=int, default=9)
    p.add_argument("--pool-size", type=int, default=2)
    p.add_argument("--pool-steps", type=int, default=4)
    p.add_argument("--base-width", type=int, default=16)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", default="bench_out")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            subparser = None
            for action in parser._actions:
                if isinstance(action, argparse._SubParsersAction):
                    subparser = action.choices[args.command]
            _apply_config_defaults(subparser, args, _read_config_file(args.config), argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except VaderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
