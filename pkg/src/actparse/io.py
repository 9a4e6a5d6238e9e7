"""File formats.

* features: CSV, one row per frame, ``dim`` numeric columns, no header
* annotations / parses: JSON ``{"labels": [...], "background": name,
  "segments": [{"start", "end", "label"}, ...]}``; parses add per-segment
  ``score`` and a ``total_score``
* models: JSON ``{"weights", "labels", "background", "input_dim", "scales", "config"}``;
  a trained pipeline bundles two of them under ``first_layer`` and ``second_layer``
* config: JSON with ``l_min``, ``l_max``, ``scales``, ``lambda``, ``folds``,
  ``penalty``, ``seed``, ``epochs``
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core import ConfigError, FormatError, FrameSequence, LabelSpace, Parse, ParserConfig
from .linear import LinearModel, TrainConfig

CONFIG_DEFAULTS = {
    "l_min": 40,
    "l_max": 400,
    "scales": [75, 150, 225, 300],
    "lambda": 1e-3,
    "folds": 5,
    "penalty": 0.0,
    "seed": 0,
    "epochs": 50,
}


def _read_json(path, what: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e.msg}", f"{path}:{e.lineno}") from None
    except OSError as e:
        raise FormatError(f"cannot read {what}: {e.strerror}", str(path)) from None


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")


def save_features(path, seq: FrameSequence) -> None:
    np.savetxt(path, seq.frames, delimiter=",", fmt="%.17g", encoding="utf-8")


def load_features(path) -> FrameSequence:
    rows = []
    width = None
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise FormatError(f"cannot read features: {e.strerror}", str(path)) from None
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError(f"expected {width} columns, got {len(row)}", f"{path}:{lineno}")
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                bad = next(i for i, c in enumerate(row) if not _is_float(c))
                raise FormatError(f"non-numeric cell {row[bad]!r} in column {bad + 1}", f"{path}:{lineno}") from None
            if not all(math.isfinite(v) for v in values):
                raise FormatError("non-finite value", f"{path}:{lineno}")
            rows.append(values)
    if not rows:
        raise FormatError("no frames", str(path))
    return FrameSequence(np.array(rows))


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def label_space_to_json(ls: LabelSpace) -> dict:
    return {"labels": list(ls.class_names), "background": ls.background}


def label_space_from_json(obj, where: str) -> LabelSpace:
    try:
        names = obj["labels"]
        background = obj.get("background", names[0])
        return LabelSpace(tuple(names), list(names).index(background))
    except (KeyError, TypeError, IndexError):
        raise FormatError("expected 'labels' list and 'background' name", where) from None
    except ValueError as e:
        raise FormatError(str(e), where) from None


def parse_to_json(parse: Parse, label_space: LabelSpace, with_scores: bool = True) -> dict:
    segments = []
    for seg, label, score in zip(parse.segments(), parse.labels, parse.scores):
        entry = {"start": seg.start, "end": seg.end, "label": label_space.class_names[label]}
        if with_scores:
            entry["score"] = score
        segments.append(entry)
    out = label_space_to_json(label_space)
    out["segments"] = segments
    if with_scores:
        out["total_score"] = parse.total_score
    return out


def parse_from_json(obj, label_space: LabelSpace | None, where: str) -> tuple[Parse, LabelSpace]:
    if label_space is None:
        label_space = label_space_from_json(obj, where)
    segments = obj.get("segments") if isinstance(obj, dict) else None
    if not isinstance(segments, list) or not segments:
        raise FormatError("expected a non-empty 'segments' list", where)
    bps, labels, scores = [], [], []
    for k, seg in enumerate(segments):
        field = f"{where}: segments[{k}]"
        try:
            start, end, name = seg["start"], seg["end"], seg["label"]
        except (KeyError, TypeError):
            raise FormatError("segment needs 'start', 'end' and 'label'", field) from None
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (start, end)):
            raise FormatError("'start' and 'end' must be integers", field)
        if k == 0:
            if start != 0:
                raise FormatError(f"first segment must start at 0, got {start}", field)
            bps.append(start)
        elif start != bps[-1]:
            kind = "gap" if start > bps[-1] else "overlap"
            raise FormatError(f"{kind} between segments: previous ends at {bps[-1]}, this starts at {start}", field)
        if end <= start:
            raise FormatError(f"non-monotone breakpoints: end {end} <= start {start}", field)
        bps.append(end)
        try:
            labels.append(label_space.index(name))
        except KeyError:
            raise FormatError(f"unknown label {name!r}", field) from None
        scores.append(float(seg.get("score", 0.0)))
    total = float(obj.get("total_score", sum(scores)))
    return Parse(tuple(bps), tuple(labels), total, tuple(scores)), label_space


def load_annotations(path, label_space: LabelSpace | None = None) -> Parse:
    return load_annotations_with_labels(path, label_space)[0]


def load_annotations_with_labels(path, label_space: LabelSpace | None = None) -> tuple[Parse, LabelSpace]:
    return parse_from_json(_read_json(path, "annotations"), label_space, str(path))


def save_annotations(path, parse: Parse, label_space: LabelSpace) -> None:
    _write_json(path, parse_to_json(parse, label_space, with_scores=False))


def save_parse(path, parse: Parse, label_space: LabelSpace) -> None:
    _write_json(path, parse_to_json(parse, label_space))


def model_to_json(model: LinearModel, scales=(), config: dict | None = None) -> dict:
    return {
        "weights": model.weights.tolist(),
        "labels": list(model.label_space.class_names),
        "background": model.label_space.background,
        "input_dim": model.input_dim,
        "scales": list(scales),
        "config": dict(config or {}),
    }


def model_from_json(obj, where: str) -> LinearModel:
    ls = label_space_from_json(obj, where)
    try:
        weights = np.array(obj["weights"], dtype=np.float64)
        input_dim = int(obj["input_dim"])
    except (KeyError, TypeError, ValueError):
        raise FormatError("model needs numeric 'weights' and 'input_dim'", where) from None
    if weights.ndim != 2 or weights.shape[1] != input_dim:
        raise FormatError(f"weights shape {weights.shape} does not match input_dim {input_dim}", where)
    try:
        return LinearModel(weights, ls)
    except ValueError as e:
        raise FormatError(str(e), where) from None


def save_model(path, model: LinearModel, scales=(), config: dict | None = None) -> None:
    _write_json(path, model_to_json(model, scales, config))


def load_model(path) -> LinearModel:
    return model_from_json(_read_json(path, "model"), str(path))


def save_pipeline(path, first: LinearModel, second: LinearModel, config: dict) -> None:
    _write_json(path, {
        "first_layer": model_to_json(first, config["scales"], config),
        "second_layer": model_to_json(second, config["scales"], config),
        "config": config,
    })


def load_pipeline(path) -> tuple[LinearModel, LinearModel, dict]:
    obj = _read_json(path, "model")
    where = str(path)
    if not isinstance(obj, dict) or "first_layer" not in obj or "second_layer" not in obj:
        raise FormatError("expected 'first_layer' and 'second_layer'", where)
    first = model_from_json(obj["first_layer"], f"{where}: first_layer")
    second = model_from_json(obj["second_layer"], f"{where}: second_layer")
    return first, second, resolve_config(obj.get("config", {}))


def resolve_config(obj) -> dict:
    """Fill defaults and reject unknown keys."""
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - set(CONFIG_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = {**CONFIG_DEFAULTS, **obj}
    out["scales"] = list(out["scales"])
    return out


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"{path}: {e}") from None
    return resolve_config(obj)


def parser_config(cfg: dict, penalty: float | None = None) -> ParserConfig:
    try:
        return ParserConfig(
            l_min=int(cfg["l_min"]),
            l_max=int(cfg["l_max"]),
            scales=tuple(cfg["scales"]),
            segment_penalty=float(cfg["penalty"] if penalty is None else penalty),
            lam=float(cfg["lambda"]),
            folds=int(cfg["folds"]),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None


def train_config(cfg: dict) -> TrainConfig:
    try:
        return TrainConfig(lam=float(cfg["lambda"]), epochs=int(cfg["epochs"]), seed=int(cfg["seed"]))
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None


def write_dataset(directory, dataset, label_space: LabelSpace) -> list[str]:
    """Write ``seq_NNNN.csv`` / ``seq_NNNN.json`` pairs plus ``labels.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    _write_json(d / "labels.json", label_space_to_json(label_space))
    names = []
    for i, (seq, truth) in enumerate(dataset):
        name = f"seq_{i:04d}"
        save_features(d / f"{name}.csv", seq)
        save_annotations(d / f"{name}.json", truth, label_space)
        names.append(name)
    return names


def read_dataset(directory) -> tuple[list[tuple[FrameSequence, Parse]], LabelSpace, list[str]]:
    d = Path(directory)
    label_space = label_space_from_json(_read_json(d / "labels.json", "label space"), str(d / "labels.json"))
    names = sorted(p.stem for p in d.glob("*.csv"))
    if not names:
        raise FormatError("no feature files", str(d))
    out = []
    for name in names:
        seq = load_features(d / f"{name}.csv")
        truth = load_annotations(d / f"{name}.json", label_space)
        if truth.n_frames != seq.n_frames:
            raise FormatError(
                f"annotation covers {truth.n_frames} frames, features have {seq.n_frames}",
                str(d / f"{name}.json"),
            )
        out.append((seq, truth))
    return out, label_space, names


def genspec_from_json(obj, where: str = "spec"):
    """Build a ``GenSpec``; ``{"preset": "coupled", ...}`` starts from the context-coupled preset."""
    from dataclasses import fields, replace

    from .datagen import ContextRule, GenSpec, coupled_spec

    if not isinstance(obj, dict):
        raise FormatError("generator spec must be a JSON object", where)
    obj = dict(obj)
    preset = obj.pop("preset", None)
    if preset not in (None, "coupled"):
        raise FormatError(f"unknown preset {preset!r}", where)
    known = {f.name for f in fields(GenSpec)}
    unknown = set(obj) - known
    if unknown:
        raise FormatError(f"unknown generator keys: {sorted(unknown)}", where)
    try:
        if "context_rules" in obj:
            obj["context_rules"] = tuple(
                ContextRule(
                    pair=tuple(r["pair"]),
                    before=tuple(r["before"]),
                    after=tuple(r["after"]) if r.get("after") is not None else None,
                )
                for r in obj["context_rules"]
            )
        for key in ("length_range", "segments_range", "class_names"):
            if obj.get(key) is not None:
                obj[key] = tuple(obj[key])
        if obj.get("prototypes") is not None:
            obj["prototypes"] = np.array(obj["prototypes"], dtype=np.float64)
        base = coupled_spec() if preset == "coupled" else GenSpec()
        return replace(base, **obj)
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(str(e), where) from None


def load_genspec(path):
    return genspec_from_json(_read_json(path, "generator spec"), str(path))
