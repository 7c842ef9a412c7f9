"""fusiontrain command line.

    fusiontrain --manifest data/manifest.json --data prep/ --out run/ \
        --epochs 10 --seed 0 --streams both

`--unidirectional` disables the reversed encoder pass; `--streams image|pc`
drops a modality. Both exist for the ablation comparisons.
"""

from __future__ import annotations

import argparse
import sys

from .data import MissingTensor
from .train import NonFiniteLoss, TrainConfig, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusiontrain",
        description="Train the dual-stream stalled-vessel classifier on preprocessed tensors.",
    )
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--data", required=True, help="directory of .img.cvol / .pc.cvol files")
    parser.add_argument("--out", required=True, help="output directory for checkpoint and JSONs")
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--streams", choices=("both", "image", "pc"), default="both")
    parser.add_argument("--unidirectional", action="store_true")
    parser.add_argument(
        "--encoder", default="tiny3d", choices=("tiny3d", "r2plus1d_18", "r3d_18", "mc3_18")
    )
    parser.add_argument("--lr", type=float, default=1e-4)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        streams=args.streams,
        bidirectional=not args.unidirectional,
        encoder=args.encoder,
    )
    try:
        train(args.manifest, args.data, cfg, args.out)
    except (MissingTensor, NonFiniteLoss, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
