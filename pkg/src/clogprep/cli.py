"""Command-line driver: synth, preprocess, split, eval.

Exit codes: 0 success, 1 per-sample failures or a missing prediction,
2 bad arguments / unparseable config or manifest. A failing sample never
aborts a batch; it is recorded in the report and reflected in the exit
code, because long microscopy batches must survive bad files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import PipelineConfig, load_config
from .errors import ClogprepError, MissingPrediction
from .image_stream import build_image_stream
from .metrics import confusion, metrics_dict, write_metrics
from .pointcloud import build_pointcloud_stream, write_ply
from .synthgen import SynthConfig, generate_dataset
from .volume_io import (
    SampleManifest,
    SampleRecord,
    assign_splits,
    load_manifest,
    read_volume,
    save_manifest,
    write_volume,
)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _process_sample(
    record: SampleRecord, base_dir: Path, out_dir: Path, cfg: PipelineConfig
) -> tuple[dict, float]:
    started = time.perf_counter()
    sample_path = Path(record.path)
    if not sample_path.is_absolute():
        sample_path = base_dir / sample_path
    entry: dict = {"id": record.id, "status": "ok", "outputs": {}, "hashes": {}}
    try:
        volume = read_volume(sample_path)
        image = build_image_stream(
            volume,
            sentinel=cfg.sentinel_rgb,
            orange_bounds=cfg.orange_thresholds,
            target=cfg.resize,
        )
        suppressed, cloud = build_pointcloud_stream(volume, cfg)

        img_path = out_dir / f"{record.id}.img.cvol"
        pc_path = out_dir / f"{record.id}.pc.cvol"
        ply_path = out_dir / f"{record.id}.ply"
        write_volume(image, img_path)
        write_volume(suppressed, pc_path)
        write_ply(cloud, ply_path)
        for key, path in (("img", img_path), ("pc", pc_path), ("ply", ply_path)):
            entry["outputs"][key] = path.name
            entry["hashes"][key] = _sha256(path)
    except Exception as exc:  # record, don't abort the batch
        entry = {"id": record.id, "status": "error", "error": f"{type(exc).__name__}: {exc}"}
    return entry, time.perf_counter() - started


def cmd_preprocess(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
        manifest = load_manifest(args.manifest)
    except (ClogprepError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    workers = args.workers if args.workers else cfg.workers

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_dir = Path(args.manifest).resolve().parent

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(
            pool.map(lambda r: _process_sample(r, base_dir, out_dir, cfg), manifest.samples)
        )

    entries = sorted((e for e, _ in results), key=lambda e: e["id"])
    timings = {e["id"]: round(t, 6) for e, t in results}
    n_failed = sum(1 for e in entries if e["status"] != "ok")
    report = {
        "samples": entries,
        "n_ok": len(entries) - n_failed,
        "n_failed": n_failed,
        "timings": dict(sorted(timings.items())),  # excluded from any hashing
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")

    for e in entries:
        if e["status"] != "ok":
            print(f"{e['id']}: {e['error']}", file=sys.stderr)
    print(f"preprocessed {report['n_ok']}/{len(entries)} samples -> {out_dir}")
    return 1 if n_failed else 0


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = SynthConfig(
        dims=tuple(args.dims),
        tube_radius=args.radius,
        gap_length=args.gap,
        noise_std=args.noise_std,
        curvature=args.curvature,
        seed=args.seed,
    )
    manifest = generate_dataset(args.n, cfg, args.out)
    print(f"wrote {len(manifest.samples)} samples -> {Path(args.out) / 'manifest.json'}")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    try:
        manifest = load_manifest(args.manifest)
        manifest = assign_splits(manifest, args.seed)
        save_manifest(manifest, args.manifest)
    except (ClogprepError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    counts = {s: len(manifest.by_split(s)) for s in ("train", "val", "test")}
    print(f"split {len(manifest.samples)} samples: {counts}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        manifest = load_manifest(args.manifest)
        predictions = json.loads(Path(args.predictions).read_text())
    except (ClogprepError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    test = manifest.by_split("test")
    if not test:
        print("error: manifest has no test split (run `clogprep split` first)", file=sys.stderr)
        return 2
    try:
        labels, scores = [], []
        for record in test:
            if record.id not in predictions:
                raise MissingPrediction(f"no prediction for test sample {record.id!r}")
            labels.append(record.label)
            scores.append(float(predictions[record.id]))
    except MissingPrediction as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    counts = confusion(labels, scores, args.threshold)
    write_metrics(counts, args.out)
    m = metrics_dict(counts)
    print(
        f"test n={counts.total} acc={m['acc']:.4f} mcc={m['mcc']:.4f} "
        f"(tp={m['tp']} tn={m['tn']} fp={m['fp']} fn={m['fn']})"
    )
    return 0


def _parse_dims(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"dims must look like 160x120x40, got {text!r}")
    return tuple(int(p) for p in parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clogprep",
        description="Preprocess volumetric vessel videos into image and point-cloud tensors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="run the full pipeline over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="JSON pipeline config (defaults if omitted)")
    p.add_argument("--workers", type=int, default=0, help="override config worker count")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--n", type=int, required=True, help="samples per class")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", type=_parse_dims, default=(160, 120, 40))
    p.add_argument("--radius", type=float, default=4.0)
    p.add_argument("--gap", type=int, default=6)
    p.add_argument("--noise-std", type=float, default=10.0)
    p.add_argument("--curvature", type=float, default=8.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="assign stratified 75:15:10 splits in place")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("eval", help="score predictions over the test split")
    p.add_argument("--predictions", required=True, help="JSON mapping sample id -> score")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default="metrics.json")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "synth" and args.n < 1:
        parser.error("--n must be >= 1")
    try:
        return args.func(args)
    except (ClogprepError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
