"""Command-line entry point: ``npdel {train,construct,simulate,oracle-check,bench}``.

Each subcommand reads an optional JSON config (``--config``); explicit flags
override file values and ``NPD_SEED`` overrides both for the seed. Outputs go
under ``--out`` together with the resolved config.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

log = logging.getLogger("npdel")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; usage problems are validation failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


DEFAULTS = {
    "train": {"N": 16, "delta": 0.1, "samples": 200_000, "batch_size": 128, "steps": 0,
              "lr": 1e-3, "lr_final": 1e-3, "seed": 0, "d": 16, "h": 64,
              "conv_widths": [3, 3], "eval_samples": 10_000, "init": None},
    "construct": {"entropy": None, "k": None},
    "simulate": {"checkpoint": None, "code": None, "delta": 0.1, "L": [1], "frames": 2000,
                 "seed": 0, "chunk": 500, "backend": "auto"},
    "oracle-check": {"n": 3, "delta": 0.1, "words": 100, "seed": 0},
    "bench": {"checkpoint": None, "sizes": [32, 64, 128, 256, 512], "frames": 50,
              "repeats": 3, "backends": ["numba", "numpy"], "seed": 0},
}


def _ints(text):
    return [int(t) for t in str(text).split(",") if t]


def build_parser():
    p = _Parser(prog="npdel", description="Neural polar decoders for the deletion channel.",
                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--config", type=Path, default=None, help="JSON config file")
        sp.add_argument("--out", type=Path, default=Path("runs"), help="output directory (default: runs)")
        sp.add_argument("--workers", type=int, default=1, help="worker threads (default: 1)")
        return sp

    def opt(sp, cmd, flag, key, type_=None, help_=""):
        # default=None so "flag given" is detectable; the real default shows in the help text
        sp.add_argument(flag, dest=key, type=type_, default=None,
                        help=f"{help_} (default: {DEFAULTS[cmd][key]})".strip())

    t = add("train", "train an NPD and write checkpoint + report")
    for flag, key, ty in [("--N", "N", int), ("--delta", "delta", float),
                          ("--samples", "samples", int), ("--batch-size", "batch_size", int),
                          ("--steps", "steps", int), ("--lr", "lr", float),
                          ("--lr-final", "lr_final", float), ("--seed", "seed", int),
                          ("--d", "d", int), ("--h", "h", int),
                          ("--conv-widths", "conv_widths", _ints),
                          ("--eval-samples", "eval_samples", int)]:
        opt(t, "train", flag, key, ty)
    opt(t, "train", "--init", "init", str, "checkpoint to warm-start from")

    c = add("construct", "pick the information set from an entropy report")
    opt(c, "construct", "--entropy", "entropy", str, "train report JSON or entropy list")
    opt(c, "construct", "--k", "k", int, "number of information bits")

    s = add("simulate", "Monte-Carlo FER of a trained NPD")
    opt(s, "simulate", "--checkpoint", "checkpoint", str)
    opt(s, "simulate", "--code", "code", str, "PolarCodeSpec JSON")
    opt(s, "simulate", "--delta", "delta", float)
    opt(s, "simulate", "--L", "L", _ints, "list sizes, comma separated")
    opt(s, "simulate", "--frames", "frames", int)
    opt(s, "simulate", "--seed", "seed", int)
    opt(s, "simulate", "--chunk", "chunk", int)
    opt(s, "simulate", "--backend", "backend", str, "auto|numba|numpy")

    o = add("oracle-check", "compare SC with exhaustive posteriors at small N")
    opt(o, "oracle-check", "--n", "n", int, "log2 block length, at most 3")
    opt(o, "oracle-check", "--delta", "delta", float, "BSC crossover / deletion rate")
    opt(o, "oracle-check", "--words", "words", int, "random received words")
    opt(o, "oracle-check", "--seed", "seed", int)

    b = add("bench", "per-block decode speed for each backend")
    opt(b, "bench", "--checkpoint", "checkpoint", str, "untrained weights if omitted")
    opt(b, "bench", "--sizes", "sizes", _ints)
    opt(b, "bench", "--frames", "frames", int)
    opt(b, "bench", "--repeats", "repeats", int)
    opt(b, "bench", "--backends", "backends", lambda s: s.split(","))
    opt(b, "bench", "--seed", "seed", int)
    return p


def resolve_config(args):
    cfg = dict(DEFAULTS[args.command])
    if args.config is not None:
        if not args.config.is_file():
            raise ValidationError(f"config file not found: {args.config}")
        try:
            loaded = json.loads(args.config.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {args.config} is not valid JSON: {exc}") from None
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ValidationError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        cfg.update(loaded)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if "seed" in cfg and os.environ.get("NPD_SEED"):
        try:
            cfg["seed"] = int(os.environ["NPD_SEED"])
        except ValueError:
            raise ValidationError(f"NPD_SEED must be an integer, got {os.environ['NPD_SEED']!r}")
    return cfg


def _need_file(path, what):
    if path is None:
        raise ValidationError(f"--{what} is required")
    if not Path(path).is_file():
        raise ValidationError(f"{what} not found: {path}")
    return Path(path)


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_train(cfg, args):
    from . import nn
    from .trainer import TrainConfig, run_training

    init = cfg.pop("init")
    try:
        tc = TrainConfig(**cfg)
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from None
    params = None
    if init is not None:
        params = nn.checkpoint_load(_need_file(init, "init"))
    params, report = run_training(
        tc, params=params,
        progress=lambda s, S, l: log.info("step %d/%d loss %.4f", s, S, l))
    nn.checkpoint_save(params, args.out / "model.npd")
    report.save(args.out / "report.json")
    print(f"rate {report.rate:.4f}  mean entropy {np.mean(report.entropy):.4f}  "
          f"-> {args.out / 'model.npd'}")


def cmd_construct(cfg, args):
    from .trainer import construct_code

    src = _need_file(cfg["entropy"], "entropy")
    data = json.loads(src.read_text())
    H = data["entropy"] if isinstance(data, dict) else data
    if cfg["k"] is None:
        raise ValidationError("--k is required")
    try:
        spec = construct_code(H, cfg["k"])
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    spec.save(args.out / "code.json")
    print(f"N={spec.N} k={spec.k} info={spec.info_set.tolist()}")


def cmd_simulate(cfg, args):
    from . import nn
    from .harness import run_fer, write_report
    from .polar import PolarCodeSpec

    params = nn.checkpoint_load(_need_file(cfg["checkpoint"], "checkpoint"))
    spec = PolarCodeSpec.load(_need_file(cfg["code"], "code"))
    if "N" in params.meta and params.meta["N"] != spec.N:
        log.info("checkpoint trained at N=%s, decoding at N=%d", params.meta["N"], spec.N)
    if cfg["backend"] not in ("auto", "numba", "numpy"):
        raise ValidationError(f"unknown backend {cfg['backend']!r}")
    results = []
    for L in cfg["L"]:
        if L < 1:
            raise ValidationError("list size must be >= 1")
        r = run_fer(spec, params, cfg["delta"], L, cfg["frames"], cfg["seed"],
                    workers=args.workers, chunk=cfg["chunk"], backend=cfg["backend"])
        results.append(r)
        print(f"L={L} FER {r.fer:.4f} ({r.errors}/{r.frames}) "
              f"95% CI [{r.ci_low:.4f}, {r.ci_high:.4f}]")
    write_report(results, args.out / "fer.csv")
    write_report(results, args.out / "fer.json")


def cmd_oracle_check(cfg, args):
    from . import oracle
    from .npd import bsc_kernel
    from .polar import PolarCodeSpec, polar_transform, sc_decode

    n = cfg["n"]
    if not 1 <= n <= 3:
        raise ValidationError("--n must be in 1..3 (exhaustive oracle)")
    if not 0 < cfg["delta"] < 0.5:
        raise ValidationError("--delta must lie in (0, 0.5)")
    N, p = 2 ** n, cfg["delta"]
    rng = np.random.default_rng(cfg["seed"])
    kernel = bsc_kernel(p)
    worst = 0.0
    for _ in range(cfg["words"]):
        u = rng.integers(0, 2, N)
        y = polar_transform(u) ^ (rng.random(N) < p)
        e = kernel.embed(y)
        for i in range(N):
            # decode index i with the true prefix frozen, the rest left free
            spec = PolarCodeSpec.from_frozen_set(N, range(i), u[:i])
            _, llrs = sc_decode(spec, kernel, e, backend="numpy")
            p1 = 1.0 / (1.0 + np.exp(-np.ravel(llrs)[i]))
            post = oracle.memoryless_posterior(y, p, u[:i], i)
            worst = max(worst, abs(p1 - post.p1))
    _write_json(args.out / "oracle_check.json", {"N": N, "p": p, "max_deviation": worst})
    print(f"max posterior deviation {worst:.3e} (N={N}, BSC {p})")
    if worst > 1e-9:
        raise ValidationError(f"deviation {worst:.3e} exceeds 1e-9")


def cmd_bench(cfg, args):
    from . import nn
    from ._accel import HAVE_NUMBA
    from .harness import run_speed, write_speed_table
    from .npd import NpdConfig, init_params

    if cfg["checkpoint"] is not None:
        params = nn.checkpoint_load(_need_file(cfg["checkpoint"], "checkpoint"))
    else:
        params = init_params(NpdConfig(), np.random.default_rng(cfg["seed"]))
    rows = []
    for backend in cfg["backends"]:
        if backend not in ("numba", "numpy"):
            raise ValidationError(f"unknown backend {backend!r}")
        if backend == "numba" and not HAVE_NUMBA:
            log.warning("numba not installed, skipping")
            continue
        rows += run_speed(params, cfg["sizes"], cfg["frames"], backend=backend,
                          repeats=cfg["repeats"], seed=cfg["seed"])
    write_speed_table(rows, args.out / "speed.csv")
    for r in rows:
        print(f"{r['backend']:>6} N={r['N']:<4} {r['blocks_per_sec']:10.1f} blocks/s")


COMMANDS = {"train": cmd_train, "construct": cmd_construct, "simulate": cmd_simulate,
            "oracle-check": cmd_oracle_check, "bench": cmd_bench}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.workers < 1:
            raise ValidationError("--workers must be >= 1")
        args.out.mkdir(parents=True, exist_ok=True)
        _write_json(args.out / f"{args.command}.config.json", cfg)
        COMMANDS[args.command](cfg, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
