"""el-guard: one executable over the whole safety pipeline.

Subcommands: gen, segment, monitor, select, decide, sora assess. Binary bulk
data travels as ELSM/PGM/PPM; reports are JSON with the full effective
configuration embedded, plus CSV tables and PNG figures for human review.

Exit codes: 0 success, 1 domain rejection (an --expect that did not hold),
2 usage or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import decision, lzs, scenegen, segcore, sora
from .errors import ElGuardError
from .monitor import MonitorConfig, verify_tile
from .tensors import Rect, decode_stack, encode_stack, write_mask

_PKG = "el-guard"


def _write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _cfg(args: argparse.Namespace, config: dict, name: str, fallback):
    """Flag value if given, else config-file value, else fallback."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return fallback


def _parse_tile(text: str) -> Rect:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("tile must be row,col,h,w")
    r, c, h, w = (int(p) for p in parts)
    return Rect(r, c, h, w)


def _parse_drift(text: str) -> lzs.DriftModel:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("drift must be altitude,descent_rate,wind_speed,margin")
    h, vd, vw, margin = (float(p) for p in parts)
    return lzs.DriftModel(h, vd, vw, margin)


def _draw_tile_borders(rgb: np.ndarray, tiles: list[Rect], color=(255, 255, 255)) -> np.ndarray:
    out = rgb.copy()
    for t in tiles:
        r1, c1 = t.row + t.h - 1, t.col + t.w - 1
        out[t.row, t.col:c1 + 1] = color
        out[r1, t.col:c1 + 1] = color
        out[t.row:r1 + 1, t.col] = color
        out[t.row:r1 + 1, c1] = color
    return out


def _monitor_config(args: argparse.Namespace, config: dict) -> MonitorConfig:
    composite = _cfg(args, config, "composite", None)
    kwargs = {
        "tau": float(_cfg(args, config, "tau", 0.125)),
        "ci_multiplier": float(_cfg(args, config, "ci_mult", 3.0)),
        "theta": float(_cfg(args, config, "theta", 0.0)),
        "samples": int(_cfg(args, config, "samples", 10)),
    }
    if composite is not None:
        if isinstance(composite, str):
            composite = [int(v) for v in composite.split(",")]
        kwargs["composite"] = tuple(composite)
    return MonitorConfig(**kwargs)


def _gsd_from(args: argparse.Namespace, config: dict) -> float:
    manifest = getattr(args, "manifest", None)
    if getattr(args, "gsd", None) is not None:
        return args.gsd
    if manifest:
        return float(json.loads(Path(manifest).read_text())["spec"]["gsd"])
    return float(config.get("gsd", 0.5))


# --- subcommands -------------------------------------------------------------

def _cmd_gen(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    out = Path(args.out)
    seed = int(_cfg(args, config, "seed", 0))
    spec = scenegen.SceneSpec(
        height=int(_cfg(args, config, "height", 256)),
        width=int(_cfg(args, config, "width", 256)),
        gsd=float(_cfg(args, config, "gsd", 0.5)),
        road_bands=int(_cfg(args, config, "road_bands", 1)),
        road_fraction=float(_cfg(args, config, "road_fraction", 0.08)),
        buildings=int(_cfg(args, config, "buildings", 3)),
        trees=int(_cfg(args, config, "trees", 6)),
        static_cars=int(_cfg(args, config, "static_cars", 2)),
        moving_cars=int(_cfg(args, config, "moving_cars", 2)),
        humans=int(_cfg(args, config, "humans", 2)),
    )
    noise = scenegen.NoiseSpec(
        mode=str(_cfg(args, config, "mode", scenegen.IN_DISTRIBUTION)),
        logit_gain=float(_cfg(args, config, "gain", 10.0)),
        logit_noise_sd=float(_cfg(args, config, "noise_sd", 0.5)),
        ood_road_floor=float(_cfg(args, config, "ood_floor", 0.05)),
        samples=int(_cfg(args, config, "samples", 10)),
        ood_flip_fraction=float(_cfg(args, config, "flip_fraction", 0.5)),
    )
    scene = scenegen.generate_scene(spec, seed)
    stack = scenegen.sample_scores(scene, noise, seed)

    _write(out / "labels.pgm", write_mask(scene.labels, "labels", scene.num_classes))
    _write(out / "stack.elsm", encode_stack(stack))
    _write_json(
        out / "scene.json",
        {"seed": seed, "spec": spec.as_dict(), "noise": noise.as_dict()},
    )
    if not args.no_figures:
        from . import figures

        figures.save_labels_figure(scene.labels, out / "scene.png", title=f"scene seed={seed}")
    print(f"wrote {out}/labels.pgm, stack.elsm, scene.json")
    return 0


def _cmd_segment(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    out = Path(args.out)
    stack = decode_stack(Path(args.stack).read_bytes())
    cfg = _monitor_config(args, config)
    sample = int(_cfg(args, config, "sample", 0))
    seg = segcore.argmax_segment(stack, sample, cfg.composite)

    _write(out / "labels.pgm", write_mask(seg.labels, "labels", seg.num_classes))
    _write(out / "labels.ppm", segcore.colorize(seg))
    counts = np.bincount(seg.labels.reshape(-1), minlength=seg.num_classes)
    _write_json(
        out / "segment.json",
        {
            "effective_config": {"stack": args.stack, "sample": sample, "composite": list(cfg.composite)},
            "class_pixel_counts": {name: int(c) for name, c in zip(_class_names(), counts)},
            "busy_road_pixels": int(seg.busy_road.sum()),
        },
    )
    if not args.no_figures:
        from . import figures

        figures.save_labels_figure(seg.labels, out / "segment.png", title=f"argmax of sample {sample}")
    print(f"wrote {out}/labels.pgm, labels.ppm, segment.json")
    return 0


def _class_names() -> tuple[str, ...]:
    from .taxonomy import CLASS_NAMES

    return CLASS_NAMES


def _cmd_monitor(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    out = Path(args.out)
    stack = decode_stack(Path(args.stack).read_bytes())
    cfg = _monitor_config(args, config)
    tile = args.tile if args.tile is not None else Rect(0, 0, stack.height, stack.width)

    t0 = time.perf_counter()
    verdict = verify_tile(stack, tile, cfg)
    elapsed = time.perf_counter() - t0

    warning_bytes = (verdict.warning_mask.astype(np.uint8)) * 255
    _write(out / "warning.pgm", write_mask(warning_bytes, "warning"))
    payload = verdict.as_dict()
    payload["timing"] = {
        "verify_s": elapsed,
        "pixels_per_s": tile.area / elapsed if elapsed > 0 else None,
    }
    payload["effective_config"] = {"stack": args.stack, **cfg.as_dict()}
    _write_json(out / "verdict.json", payload)
    if not args.no_figures:
        from . import figures

        seg = segcore.argmax_segment(stack, 0, cfg.composite)
        figures.save_warning_figure(
            seg.labels, tile, verdict.warning_mask, out / "monitor.png", verdict.decision
        )
    print(f"{verdict.decision}: {verdict.unsafe_pixel_count} unsafe pixel(s) in {elapsed:.3f}s")
    return 0


def _select_common(args: argparse.Namespace, config: dict):
    stack = decode_stack(Path(args.stack).read_bytes())
    cfg = _monitor_config(args, config)
    gsd = _gsd_from(args, config)
    seg = segcore.argmax_segment(stack, int(_cfg(args, config, "sample", 0)), cfg.composite)
    dist = lzs.distance_transform(seg.busy_road, gsd)
    if args.buffer_m is not None:
        buffer_m = args.buffer_m
    elif args.drift is not None:
        buffer_m = lzs.buffer_radius(args.drift)
    else:
        buffer_m = float(config.get("buffer_m", 0.0))
    tile_size = int(_cfg(args, config, "tile_size", 16))
    return stack, cfg, gsd, seg, dist, buffer_m, tile_size


def _candidate_rows(candidates) -> list[list]:
    return [
        [c.rank, c.tile.row, c.tile.col, c.tile.h, c.tile.w,
         ("inf" if np.isinf(c.clearance_m) else f"{c.clearance_m:.6f}"),
         f"{c.buffer_required_m:.6f}", c.excluded_class_hits]
        for c in candidates
    ]


_CANDIDATE_HEADER = ["rank", "row", "col", "h", "w", "clearance_m", "buffer_required_m", "excluded_class_hits"]


def _cmd_select(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    out = Path(args.out)
    _, cfg, gsd, seg, dist, buffer_m, tile_size = _select_common(args, config)
    candidates = lzs.select_candidates(seg, dist, tile_size, buffer_m)

    _write_json(
        out / "candidates.json",
        {
            "effective_config": {
                "stack": args.stack,
                "tile_size": tile_size,
                "buffer_m": buffer_m,
                "gsd": gsd,
                **cfg.as_dict(),
            },
            "candidates": [c.as_dict() for c in candidates],
        },
    )
    _write_csv(out / "candidates.csv", _CANDIDATE_HEADER, _candidate_rows(candidates))
    lut = np.asarray(segcore.DEFAULT_PALETTE, dtype=np.uint8)
    overlay = _draw_tile_borders(lut[seg.labels], [c.tile for c in candidates])
    from .tensors import write_ppm

    _write(out / "overlay.ppm", write_ppm(overlay))
    if not args.no_figures:
        from . import figures

        figures.save_candidates_figure(seg.labels, candidates, out / "candidates.png")
    print(f"{len(candidates)} candidate tile(s); buffer {buffer_m:.1f} m")
    return 0


def _cmd_decide(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    out = Path(args.out)
    stack = decode_stack(Path(args.stack).read_bytes())
    cfg = _monitor_config(args, config)
    pipeline_cfg = decision.PipelineConfig(
        monitor=cfg,
        tile_size=int(_cfg(args, config, "tile_size", 16)),
        gsd=_gsd_from(args, config),
        buffer_m=args.buffer_m,
        drift=args.drift,
        budget=int(_cfg(args, config, "budget", 3)),
        sample_index=int(_cfg(args, config, "sample", 0)),
    )
    result = decision.run_pipeline(stack, pipeline_cfg)

    payload = result.as_dict()
    payload["effective_config"] = {"stack": args.stack, **pipeline_cfg.as_dict()}
    _write_json(out / "outcome.json", payload)
    _write_csv(
        out / "trace.csv",
        ["step", "event", "action", "trials_used", "tile_row", "tile_col", "decision", "unsafe_pixels"],
        [
            [
                i,
                s.event,
                s.action,
                s.trials_used,
                s.candidate.tile.row if s.candidate else "",
                s.candidate.tile.col if s.candidate else "",
                s.verdict.decision if s.verdict else "",
                s.verdict.unsafe_pixel_count if s.verdict else "",
            ]
            for i, s in enumerate(result.trace)
        ],
    )
    _write_csv(out / "candidates.csv", _CANDIDATE_HEADER, _candidate_rows(result.candidates))
    if not args.no_figures:
        from . import figures

        seg = segcore.argmax_segment(stack, pipeline_cfg.sample_index, cfg.composite)
        figures.save_decision_figure(seg.labels, result, out / "decide.png")
    print(
        f"{result.outcome.status}"
        + (f" ({result.outcome.reason})" if result.outcome.reason else "")
        + f" after {result.outcome.trials_used} trial(s)"
    )
    if args.expect and args.expect.upper() != result.outcome.status:
        print(f"expected {args.expect.upper()}, got {result.outcome.status}", file=sys.stderr)
        return 1
    return 0


def _cmd_sora_assess(args: argparse.Namespace) -> int:
    out = Path(args.out)
    spec = sora.OperationSpec.from_dict(json.loads(Path(args.spec).read_text(encoding="utf-8")))
    tables = (
        sora.RiskTables.from_dict(json.loads(Path(args.tables).read_text(encoding="utf-8")))
        if args.tables
        else sora.default_tables()
    )
    ledger: list[sora.MitigationEntry] = []
    checklist = None
    if args.ledger:
        ledger_doc = json.loads(Path(args.ledger).read_text(encoding="utf-8"))
        ledger = [sora.MitigationEntry.from_dict(e) for e in ledger_doc.get("mitigations", [])]
        if "el_checklist" in ledger_doc:
            checklist = sora.ElChecklist.from_dict(ledger_doc["el_checklist"])

    assessment = sora.assess(spec, tables, ledger, checklist)
    payload = assessment.as_dict()
    payload["effective_config"] = {
        "spec": args.spec,
        "tables": args.tables or "<defaults>",
        "ledger": args.ledger or "<empty>",
        "tables_content": tables.as_dict(),
    }
    _write_json(out / "assessment.json", payload)
    running = assessment.intrinsic_grc
    rows = []
    for i, step in enumerate(assessment.mitigation_trace):
        running += step["delta"]
        rows.append([i, step["kind"], step["robustness"], step["delta"], step["source"],
                     min(8, max(1, running))])
    _write_csv(out / "trace.csv", ["step", "kind", "robustness", "delta", "source", "grc_after"], rows)
    if not args.no_figures:
        from . import figures

        figures.save_assessment_figure(assessment, out / "assessment.png")
    print(
        f"intrinsic GRC {assessment.intrinsic_grc} -> final {assessment.final_grc}, "
        f"ARC-{assessment.arc.value}, SAIL {assessment.sail}"
    )
    return 0


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="64-bit PRNG seed")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--config", default=None, help="JSON config file with flag defaults")
    common.add_argument("--no-figures", action="store_true", help="skip PNG figure rendering")

    parser = argparse.ArgumentParser(prog=_PKG, description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic scene and score stack")
    for name, typ in [
        ("height", int), ("width", int), ("gsd", float), ("road-bands", int),
        ("road-fraction", float), ("buildings", int), ("trees", int),
        ("static-cars", int), ("moving-cars", int), ("humans", int),
        ("gain", float), ("noise-sd", float), ("ood-floor", float),
        ("samples", int), ("flip-fraction", float),
    ]:
        p.add_argument(f"--{name}", type=typ, default=None)
    p.add_argument("--mode", choices=[scenegen.IN_DISTRIBUTION, scenegen.OOD], default=None)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("segment", parents=[common], help="argmax segmentation of one sample")
    p.add_argument("--stack", required=True)
    p.add_argument("--sample", type=int, default=None)
    p.add_argument("--composite", default=None, help="comma-separated class indices")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("monitor", parents=[common], help="verify a tile with the uncertainty rule")
    p.add_argument("--stack", required=True)
    p.add_argument("--tile", type=_parse_tile, default=None, help="row,col,h,w (default: whole image)")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--ci-mult", type=float, default=None)
    p.add_argument("--composite", default=None)
    p.set_defaults(func=_cmd_monitor)

    def add_select_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--stack", required=True)
        p.add_argument("--manifest", default=None, help="scene.json to read gsd from")
        p.add_argument("--gsd", type=float, default=None)
        p.add_argument("--tile-size", type=int, default=None)
        p.add_argument("--buffer-m", type=float, default=None)
        p.add_argument("--drift", type=_parse_drift, default=None,
                       help="altitude,descent_rate,wind_speed,margin")
        p.add_argument("--sample", type=int, default=None)
        p.add_argument("--tau", type=float, default=None)
        p.add_argument("--theta", type=float, default=None)
        p.add_argument("--ci-mult", type=float, default=None)
        p.add_argument("--composite", default=None)

    p = sub.add_parser("select", parents=[common], help="rank eligible landing tiles")
    add_select_flags(p)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("decide", parents=[common], help="full propose/verify/land pipeline")
    add_select_flags(p)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--expect", choices=["landed", "terminated"], default=None)
    p.set_defaults(func=_cmd_decide)

    p = sub.add_parser("sora", parents=[common], help="risk tailoring")
    sora_sub = p.add_subparsers(dest="sora_command", required=True)
    pa = sora_sub.add_parser("assess", parents=[common], help="GRC/SAIL assessment")
    pa.add_argument("--spec", required=True, help="operation spec JSON")
    pa.add_argument("--tables", default=None, help="risk tables JSON (default: shipped tables)")
    pa.add_argument("--ledger", default=None, help="mitigation ledger JSON")
    pa.set_defaults(func=_cmd_sora_assess)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ElGuardError as exc:
        print(f"{_PKG}: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"{_PKG}: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
