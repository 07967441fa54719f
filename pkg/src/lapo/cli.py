"""Command line entry point: ``lapo {gen-data,train,eval,histogram,sweep}``."""

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import dataset as D
from .checkpoint import Checkpoint
from .config import TrainConfig
from .envs import make_env
from .errors import LapoError
from .evaluation import action_histogram, evaluate, initial_state
from .trainer import train, write_metrics

log = logging.getLogger("lapo")


def _parse_mix(text):
    """``"left:1,right:1"`` -> [("left", 0.5), ("right", 0.5)]; bare names weigh 1."""
    items = []
    for part in text.split(","):
        mode, _, w = part.strip().partition(":")
        items.append((mode, float(w) if w else 1.0))
    total = sum(w for _, w in items)
    if total <= 0:
        raise argparse.ArgumentTypeError("mix weights must sum to a positive number")
    return [(m, w / total) for m, w in items]


def _floats(text):
    return [float(v) for v in text.split(",")]


def _ints(text):
    return [int(v) for v in text.split(",")]


def build_parser():
    p = argparse.ArgumentParser(prog="lapo", description="Offline RL with latent advantage-weighted policies.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="roll out scripted experts into a dataset file")
    g.add_argument("--env", required=True, help="env id, e.g. obstacle-nav or multitask-point:forward")
    g.add_argument("--mix", type=_parse_mix, help="mode weights, e.g. left:1,right:1 (default: expert mode)")
    g.add_argument("--episodes", type=int, default=200)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--relabel", help="recompute rewards with this task's reward function")
    g.add_argument("--out", required=True, type=Path)

    t = sub.add_parser("train", help="train one config, writing a checkpoint and a metrics CSV")
    t.add_argument("--config", type=Path, help="key = value config file")
    t.add_argument("--dataset", type=Path, help="dataset file (overrides the config's dataset key)")
    t.add_argument("--seed", type=int)
    t.add_argument("--steps", type=int)
    t.add_argument("--out", required=True, type=Path, help="output directory")

    e = sub.add_parser("eval", help="evaluate a checkpoint and print a JSON report")
    e.add_argument("--checkpoint", required=True, type=Path)
    e.add_argument("--env", help="env id (default: the checkpoint's)")
    e.add_argument("--episodes", type=int, default=10)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", type=Path, help="also write the JSON report here")

    h = sub.add_parser("histogram", help="action histogram at a state for a dataset or checkpoint")
    src = h.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", type=Path)
    src.add_argument("--checkpoint", type=Path)
    h.add_argument("--reference", type=Path, help="dataset drawn underneath in the PNG")
    h.add_argument("--state", type=_floats, help='query state "x,y" (default: env initial state)')
    h.add_argument("--bins", type=int, default=50)
    h.add_argument("--n", type=int, default=10_000)
    h.add_argument("--dim", type=int, default=0)
    h.add_argument("--view", choices=("cvae", "overall"), default="cvae")
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--out", required=True, type=Path, help="CSV path; a PNG is written alongside")

    s = sub.add_parser("sweep", help="train and evaluate one config over several seeds")
    s.add_argument("--config", type=Path)
    s.add_argument("--dataset", type=Path)
    s.add_argument("--seeds", type=_ints, default=[0, 1, 2])
    s.add_argument("--steps", type=int)
    s.add_argument("--episodes", type=int, default=10)
    s.add_argument("--out", required=True, type=Path, help="output directory")
    return p


def _config(args):
    cfg = TrainConfig.load(args.config) if args.config else TrainConfig()
    if args.dataset is not None:
        cfg = cfg.with_(dataset=str(args.dataset))
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_(seed=args.seed)
    if args.steps is not None:
        cfg = cfg.with_(steps=args.steps)
    if not cfg.dataset:
        raise LapoError("no dataset given (use --dataset or set 'dataset' in the config)")
    return cfg


def cmd_gen_data(args):
    env = make_env(args.env)
    mix = args.mix or [(env.expert_mode, 1.0)]
    ds = D.generate(env, mix, args.episodes, np.random.default_rng(args.seed))
    if args.relabel:
        ds = D.relabel(ds, args.relabel)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    D.save(ds, args.out)
    print(f"wrote {len(ds)} transitions ({ds.env_id}) to {args.out}")
    return 0


def _train_one(cfg, out):
    from .plotting import plot_metrics

    data = D.load(cfg.dataset).offline()
    res = train(cfg, data)
    out.mkdir(parents=True, exist_ok=True)
    res.checkpoint.save(out / "checkpoint.ckpt")
    (out / "config.cfg").write_text(cfg.to_text())
    write_metrics(res.metrics, out / "metrics.csv")
    if res.metrics:
        plot_metrics(res.metrics, out / "metrics.png", title=f"{cfg.method} seed {cfg.seed}")
    return res


def cmd_train(args):
    cfg = _config(args)
    _train_one(cfg, args.out)
    print(f"wrote {args.out / 'checkpoint.ckpt'} and {args.out / 'metrics.csv'}")
    return 0


def cmd_eval(args):
    ckpt = Checkpoint.load(args.checkpoint)
    env = make_env(args.env or ckpt.env_id)
    report = evaluate(ckpt, env, args.episodes, np.random.default_rng(args.seed))
    text = report.to_json()
    if args.out:
        args.out.write_text(text + "\n")
    print(text)
    return 0


def cmd_histogram(args):
    from .plotting import plot_histogram

    src = D.load(args.dataset) if args.dataset else Checkpoint.load(args.checkpoint)
    state = args.state if args.state is not None else initial_state(src.env_id)
    hist = action_histogram(src, state, args.n, args.bins, np.random.default_rng(args.seed), args.view,
                            args.dim)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    hist.to_csv(args.out)
    ref = None
    if args.reference:
        ref = action_histogram(D.load(args.reference), state, bins=args.bins, dim=args.dim)
    plot_histogram(hist, args.out.with_suffix(".png"), ref,
                   title=f"{src.env_id} at {np.round(np.asarray(state, float), 3).tolist()}")
    print(f"wrote {args.out} ({hist.total} samples)")
    return 0


def aggregate(values, confidence=0.95):
    """Mean and Student-t interval half-width (None for a single value)."""
    x = np.asarray(values, dtype=np.float64)
    mean = float(x.mean())
    if len(x) < 2:
        return mean, None
    half = float(sps.t.ppf(0.5 + confidence / 2, len(x) - 1) * x.std(ddof=1) / math.sqrt(len(x)))
    return mean, half


def cmd_sweep(args):
    from .plotting import plot_sweep

    base = _config(args)
    env_id = D.load(base.dataset).env_id
    args.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in args.seeds:
        cfg = base.with_(seed=seed)
        res = _train_one(cfg, args.out / f"seed{seed}")
        rep = evaluate(res.checkpoint, make_env(env_id), args.episodes, np.random.default_rng(seed))
        (args.out / f"seed{seed}" / "eval.json").write_text(rep.to_json() + "\n")
        rows.append(rep)
    with open(args.out / "sweep.csv", "w") as f:
        f.write("seed,mean_return,success_rate,normalized_score\n")
        for r in rows:
            ns = "" if r.normalized_score is None else repr(r.normalized_score)
            f.write(f"{r.seed},{r.mean_return!r},{r.success_rate!r},{ns}\n")
    mean, half = aggregate([r.mean_return for r in rows])
    smean, shalf = aggregate([r.success_rate for r in rows])
    summary = dict(method=base.method, env=env_id, seeds=list(args.seeds), mean_return=mean,
                   half_width=half, success_rate=smean, success_half_width=shalf)
    (args.out / "summary.json").write_text(json.dumps(summary, sort_keys=True) + "\n")
    plot_sweep({r.seed: r.mean_return for r in rows}, mean, half, args.out / "sweep.png",
               title=f"{base.method} on {env_id}")
    print(json.dumps(summary, sort_keys=True))
    return 0


COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train, "eval": cmd_eval, "histogram": cmd_histogram,
            "sweep": cmd_sweep}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (LapoError, ValueError) as e:
        print(f"lapo {args.command}: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"lapo {args.command}: error: {e.filename or ''}: {e.strerror}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
