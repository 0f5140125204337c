"""Command-line entry points for the modeling/training/experiment/analysis phases.

Exit codes: 0 success, 1 failure (including a failed gradient check),
2 usage errors (from argparse).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, service
from .config import RunConfig, load_config, save_config
from .dataset import (
    encode_primitives,
    export_primitives,
    load_primitives,
    macaw_cub_primitives,
)
from .encoding import decode_frames
from .errors import CheckpointError, ConfigError, DatasetError
from .grads import gradient_check
from .observer import (
    confusion_matrix,
    init_observer,
    observer_train,
    observer_training_pairs,
    load_observer,
    save_observer,
)
from .session import (
    read_input_trace,
    read_session_log,
    run_session,
    write_session_log,
)
from .training import load_model, save_model, train, warm_state_for

log = logging.getLogger(__name__)


def _load_run_config(args) -> RunConfig:
    path = args.config or os.environ.get("VCBOT_CONFIG")
    if path:
        return load_config(path)
    return RunConfig()


def _load_training_set(args, config: RunConfig):
    if args.primitives:
        pset = load_primitives(args.primitives)
    else:
        pset = macaw_cub_primitives()
    return pset, encode_primitives(pset, config.network)


def cmd_config(args) -> int:
    config = _load_run_config(args)
    save_config(config, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_dataset(args) -> int:
    pset = macaw_cub_primitives()
    written = export_primitives(pset, args.out)
    print(f"wrote {len(written)} primitives to {args.out}")
    return 0


def cmd_train(args) -> int:
    config = _load_run_config(args)
    pset, training_set = _load_training_set(args, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    result = train(training_set, config, epochs=args.epochs)
    if result.diverged_at is not None:
        print(f"training diverged at epoch {result.diverged_at}; "
              f"kept last finite checkpoint", file=sys.stderr)
    model_path = out_dir / "model.ckpt"
    save_model(model_path, result.params, result.window, config,
               training_set.labels, result.adam)
    report_path = out_dir / "training-report.csv"
    result.report.to_csv(report_path)
    print(f"wrote {model_path} and {report_path}")

    if not args.skip_observer:
        rng = np.random.default_rng(config.seed + 1)
        rollouts = analysis.rollout_positions_by_label(
            result.params, result.window, config, training_set.labels,
            config.observer.rollout_steps,
        )
        inputs, targets = observer_training_pairs(
            rollouts, config.observer, training_set.labels
        )
        net = init_observer(config.observer, training_set.labels,
                            config.network.dof, rng)
        observer_train(inputs, targets, net, config.observer.epochs)
        observer_path = out_dir / "observer.ckpt"
        save_observer(observer_path, net, config)
        print(f"wrote {observer_path}")
    return 0 if result.diverged_at is None else 1


def cmd_generate(args) -> int:
    model = load_model(args.model)
    if args.primitive not in model.labels:
        print(f"unknown primitive '{args.primitive}'; "
              f"trained labels: {model.labels}", file=sys.stderr)
        return 1
    s = model.labels.index(args.primitive)
    window = model.window.select(s)
    from .training import regenerate

    rollout = regenerate(model.params, window, model.config.network, args.steps)
    positions = decode_frames(rollout.outputs)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("x,y\n")
        for row in positions:
            fh.write(f"{row[0]:.10g},{row[1]:.10g}\n")
    print(f"wrote {args.steps} steps of {args.primitive} to {args.out}")
    return 0


def cmd_serve(args) -> int:
    config = _load_run_config(args)
    try:
        service.serve(
            config=config,
            model_path=args.model,
            observer_path=args.observer,
            host=args.host,
            port=args.port,
            log_dir=args.log_dir,
            multi_session=args.multi,
            ui_dir=args.ui_dir,
            ui_port=args.ui_port,
        )
    except (CheckpointError, FileNotFoundError) as exc:
        print(f"refusing to start: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_replay(args) -> int:
    config = _load_run_config(args)
    model = load_model(args.model)
    inputs = read_input_trace(args.inputs) if args.inputs else None
    result = run_session(
        model.params, config, inputs=inputs, ticks=args.ticks,
        real_time=False, warm_state=warm_state_for(model, config),
    )
    write_session_log(result.records, args.out)
    print(f"wrote {len(result.records)} ticks to {args.out}")
    return 0


def cmd_analyze(args) -> int:
    config = _load_run_config(args)
    if args.what == "confusion":
        model = load_model(args.model)
        net = load_observer(args.observer)
        rng = np.random.default_rng(config.seed + 2)
        test = analysis.rollout_positions_by_label(
            model.params, model.window, config, model.labels,
            config.observer.rollout_steps,
            noise=config.observer.test_noise, rng=rng,
        )
        matrix = confusion_matrix(net, test, config.observer)
        analysis.write_confusion_csv(matrix, net.categories, args.out)
        print(f"wrote confusion matrix to {args.out} "
              f"(min diagonal {matrix.diagonal().min():.3f})")
        return 0
    if args.what == "congruence":
        net = load_observer(args.observer)
        records = read_session_log(args.session_log)
        rows = analysis.congruence_series(
            records, net, config.observer.congruence_y, config.observer.event_gap
        )
        analysis.write_congruence_csv(rows, args.out)
        events = {r.event for r in rows}
        print(f"wrote {len(rows)} rows over {len(events)} events to {args.out}")
        return 0
    if args.what == "pca":
        model = load_model(args.model)
        analysis.write_pca_csv(
            model.params, model.window, config, model.labels, args.steps, args.out
        )
        print(f"wrote 2-component projection to {args.out}")
        return 0
    raise AssertionError(args.what)


def cmd_gradcheck(args) -> int:
    from .config import LayerSpec, NetworkConfig

    config = NetworkConfig(
        layers=[LayerSpec(3, 1, 2.0), LayerSpec(2, 1, 5.0)],
        dof=2, softmax_bins=4, w=[0.1, 0.15], seed=args.seed,
    )
    ok, rows = gradient_check(config, steps=4, seed=args.seed)
    for row in rows:
        status = "ok  " if row.ok else "FAIL"
        print(f"{status} {row.name:24s} max|err| {row.max_abs_err:.3e} "
              f"max rel {row.max_rel_err:.3e}")
    print("gradient check:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vcbot",
        description="Train, run, and analyze the shared-control experiment.",
    )
    parser.add_argument("--config", help="path to a JSON run config "
                        "(default: $VCBOT_CONFIG or built-in defaults)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("config", help="write the materialized config")
    p.add_argument("--out", default="config.json")
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("dataset", help="export the built-in primitive set")
    p.add_argument("--out", default="data/primitives")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", help="train the network (and the observer)")
    p.add_argument("--primitives", help="directory of primitive CSVs "
                   "(default: built-in demo set)")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--out", default="runs/latest")
    p.add_argument("--skip-observer", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="closed-loop generation of one primitive")
    p.add_argument("--model", required=True)
    p.add_argument("--primitive", required=True)
    p.add_argument("--steps", type=int, default=72)
    p.add_argument("--out", default="generated.csv")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("serve", help="run the live session service")
    p.add_argument("--model", required=True)
    p.add_argument("--observer", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--log-dir", default="logs")
    p.add_argument("--multi", action="store_true",
                   help="allow multiple concurrent sessions")
    p.add_argument("--ui-dir", default=None,
                   help="also serve this directory of static UI files")
    p.add_argument("--ui-port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="headless session from an input trace")
    p.add_argument("--model", required=True)
    p.add_argument("--inputs", default=None, help="input trace CSV (t,x,y,active)")
    p.add_argument("--ticks", type=int, default=None)
    p.add_argument("--out", default="replay.csv")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("analyze", help="emit analysis CSVs")
    p.add_argument("what", choices=["confusion", "congruence", "pca"])
    p.add_argument("--model", default=None)
    p.add_argument("--observer", default=None)
    p.add_argument("--session-log", default=None)
    p.add_argument("--steps", type=int, default=72)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gradcheck", help="verify analytic gradients on a tiny net")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, DatasetError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
