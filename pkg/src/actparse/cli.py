"""Command-line interface: synth, train, parse, eval, baseline, verify."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .baselines import no_context_parse, sliding_window_labels
from .core import ConfigError, FormatError, NoValidParseError, Parse, ParserConfig, validate_parse
from .datagen import generate
from .dp import TableScorer, brute_force_search, parse, parse_backward, parse_forward
from .evaluation import confusion_matrix, frame_labels_to_breakpoints, parse_to_frame_labels, per_frame_accuracy
from .pipeline import TrainingCorpus, train_pipeline

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_NO_PARSE = 3
EXIT_CONFIG = 4

log = logging.getLogger("actparse")


def _emit(obj) -> None:
    print(json.dumps(obj, indent=1))


def cmd_synth(args) -> int:
    spec = io.load_genspec(args.spec) if args.spec else io.genspec_from_json({"preset": "coupled"})
    if args.seed is not None:
        from dataclasses import replace
        spec = replace(spec, seed=args.seed)
    names = io.write_dataset(args.out, generate(spec), spec.label_space())
    _emit({"sequences": len(names), "out": str(args.out)})
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = io.load_config(args.config) if args.config else io.resolve_config({})
    pcfg = io.parser_config(cfg)
    tcfg = io.train_config(cfg)
    data, label_space, _ = io.read_dataset(args.data)
    first, second = train_pipeline(TrainingCorpus(tuple(data), label_space), pcfg, tcfg)
    io.save_pipeline(args.model_out, first, second, cfg)
    _emit({"sequences": len(data), "classes": label_space.size, "model": str(args.model_out)})
    return EXIT_OK


def _feature_jobs(features: Path, out: Path) -> list[tuple[Path, Path]]:
    if features.is_dir():
        out.mkdir(parents=True, exist_ok=True)
        return [(p, out / f"{p.stem}.json") for p in sorted(features.glob("*.csv"))]
    return [(features, out)]


def _run_many(fn, jobs: list, n_workers: int) -> list:
    if n_workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(n_workers) as pool:
        return list(pool.map(fn, jobs))


def cmd_parse(args) -> int:
    first, second, cfg = io.load_pipeline(args.model)
    pcfg = io.parser_config(cfg, penalty=args.penalty)
    label_space = first.label_space

    def one(job):
        src, dst = job
        seq = io.load_features(src)
        result = parse(seq, first, second, pcfg)
        report = validate_parse(result, seq.n_frames, pcfg)
        if not report.ok:
            raise RuntimeError(f"{src}: invalid parse: {'; '.join(report.problems)}")
        io.save_parse(dst, result, label_space)
        return {"features": str(src), "out": str(dst), "segments": result.n_segments,
                "total_score": result.total_score}

    _emit(_run_many(one, _feature_jobs(Path(args.features), Path(args.out)), args.jobs))
    return EXIT_OK


def cmd_baseline(args) -> int:
    first, _, cfg = io.load_pipeline(args.model)
    pcfg = io.parser_config(cfg, penalty=args.penalty)
    label_space = first.label_space

    def one(job):
        src, dst = job
        seq = io.load_features(src)
        if args.method == "nocontext":
            result = no_context_parse(seq, first, pcfg)
        else:
            window = args.window or pcfg.scales[0]
            labels = sliding_window_labels(seq, first, window, args.stride)
            bps, labs = frame_labels_to_breakpoints(labels)
            result = Parse(tuple(bps), tuple(labs))
        io.save_parse(dst, result, label_space)
        return {"features": str(src), "out": str(dst), "segments": result.n_segments}

    _emit(_run_many(one, _feature_jobs(Path(args.features), Path(args.out)), args.jobs))
    return EXIT_OK


def cmd_eval(args) -> int:
    truth, label_space = io.load_annotations_with_labels(args.truth)
    pred = io.load_annotations(args.pred, label_space)
    p, t = parse_to_frame_labels(pred), parse_to_frame_labels(truth)
    if len(p) != len(t):
        raise FormatError(f"prediction covers {len(p)} frames, truth {len(t)}", str(args.pred))
    ignore = label_space.background_index if args.exclude_background else None
    _emit({
        "per_frame_accuracy": per_frame_accuracy(p, t, ignore_label=ignore),
        "frames": int(len(t)),
        "exclude_background": bool(args.exclude_background),
        "labels": list(label_space.class_names),
        "confusion": confusion_matrix(p, t, label_space.size).tolist(),
    })
    return EXIT_OK


def verify_oracle(cases: int, seed: int, l_min: int = 2, l_max: int = 6, m: int = 3,
                  n_range: tuple[int, int] = (8, 30)) -> dict:
    """Compare the DP parser with exhaustive search on random lookup-table scorers."""
    rng = np.random.default_rng(seed)
    config = ParserConfig(l_min=l_min, l_max=l_max, scales=(1,))
    failures = []
    for case in range(cases):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        scorer = TableScorer.random(rng, n, l_max, m)
        dp = parse_backward(parse_forward(scorer, n, l_min, l_max))
        bf, n_optima = brute_force_search(scorer, n, l_min, l_max)
        problems = []
        if abs(dp.total_score - bf.total_score) > 1e-9:
            problems.append(f"score {dp.total_score} != {bf.total_score}")
        if not validate_parse(dp, n, config).ok:
            problems.append("invalid parse")
        if n_optima == 1 and dp.breakpoints != bf.breakpoints:
            problems.append("breakpoints differ at a unique optimum")
        if problems:
            failures.append({"case": case, "n_frames": n, "problems": problems})
    return {"cases": cases, "failures": failures}


def cmd_verify(args) -> int:
    result = verify_oracle(args.cases, args.seed)
    _emit(result)
    return EXIT_OK if not result["failures"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="actparse", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic dataset")
    s.add_argument("--spec", type=Path, help="generator spec JSON (default: the coupled preset)")
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="train both classifier layers")
    s.add_argument("--data", type=Path, required=True)
    s.add_argument("--config", type=Path)
    s.add_argument("--model-out", type=Path, required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("parse", help="parse a feature file (or a directory of them)")
    s.add_argument("--features", type=Path, required=True)
    s.add_argument("--model", type=Path, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--penalty", type=float)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("eval", help="per-frame accuracy of a predicted parse")
    s.add_argument("--pred", type=Path, required=True)
    s.add_argument("--truth", type=Path, required=True)
    s.add_argument("--exclude-background", action="store_true")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("baseline", help="sliding-window or context-free parsing")
    s.add_argument("--method", choices=("sliding", "nocontext"), required=True)
    s.add_argument("--features", type=Path, required=True)
    s.add_argument("--model", type=Path, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--window", type=int, help="sliding window length (default: first scale)")
    s.add_argument("--stride", type=int, help="default: window // 2")
    s.add_argument("--penalty", type=float)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_baseline)

    s = sub.add_parser("verify", help="check the DP parser against exhaustive search")
    s.add_argument("--cases", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FormatError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except NoValidParseError as e:
        print(str(e), file=sys.stderr)
        return EXIT_NO_PARSE
    except ValueError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
