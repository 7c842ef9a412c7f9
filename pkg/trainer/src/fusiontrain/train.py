"""Training loop: Adam at batch size 1, BCE-with-logits, best-val-MCC checkpointing.

Evaluation conventions match the preprocessing toolkit's `eval` command
(score >= 0.5 predicts stalled; MCC returns 0 on a degenerate denominator),
and the emitted predictions JSON is directly consumable by `clogprep eval`.
"""

from __future__ import annotations

import copy
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch import nn

from .data import PreprocessedDataset
from .model import StallClassifier


class NonFiniteLoss(RuntimeError):
    """Training loss became NaN/inf; aborted with diagnostics."""


@dataclass
class TrainConfig:
    epochs: int = 10
    learning_rate: float = 1e-4
    seed: int = 0
    streams: str = "both"  # both | image | pc
    bidirectional: bool = True
    encoder: str = "tiny3d"
    batch_size: int = 1  # fixed; the loop is written per-sample
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size != 1:
            raise ValueError("batch_size is fixed at 1")


def binary_metrics(labels: list[float], scores: list[float], threshold: float = 0.5) -> dict:
    tp = tn = fp = fn = 0
    for label, score in zip(labels, scores):
        positive = score >= threshold
        if positive and label == 1.0:
            tp += 1
        elif positive:
            fp += 1
        elif label == 1.0:
            fn += 1
        else:
            tn += 1
    total = tp + tn + fp + fn
    acc = (tp + tn) / total if total else 0.0
    denom_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(denom_sq) if denom_sq else 0.0
    return {"acc": acc, "mcc": mcc, "tp": tp, "tn": tn, "fp": fp, "fn": fn}


def _evaluate(model: nn.Module, dataset: PreprocessedDataset, ids: list[str], threshold: float):
    model.eval()
    labels, scores = [], []
    with torch.no_grad():
        for sample_id in ids:
            image, pc = dataset.tensors(sample_id)
            logit = model(image, pc)
            labels.append(dataset.label(sample_id))
            scores.append(torch.sigmoid(logit).item())
    return binary_metrics(labels, scores, threshold), dict(zip(ids, scores))


def train(
    manifest_path: str | Path,
    data_dir: str | Path,
    cfg: TrainConfig,
    out_dir: str | Path,
    quiet: bool = False,
) -> dict:
    """Train, keep the best-val-MCC checkpoint, evaluate it on the test split.

    Writes checkpoint.pt, predictions.json (test-split id -> score, the
    format `clogprep eval` consumes) and metrics.json under ``out_dir``.
    Returns a history dict with per-epoch losses and val metrics.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(cfg.seed)
    dataset = PreprocessedDataset(manifest_path, data_dir, cfg.streams)
    model = StallClassifier(cfg.streams, cfg.bidirectional, cfg.encoder)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    loss_fn = nn.BCEWithLogitsLoss()
    shuffler = random.Random(cfg.seed)

    train_ids = dataset.split_ids("train")
    val_ids = dataset.split_ids("val")
    test_ids = dataset.split_ids("test")

    history: dict = {"epoch_loss": [], "val": [], "config": cfg.__dict__.copy()}
    best_mcc = -2.0
    best_state = None
    best_epoch = -1

    for epoch in range(cfg.epochs):
        model.train()
        order = list(train_ids)
        shuffler.shuffle(order)
        total_loss = 0.0
        for step, sample_id in enumerate(order):
            image, pc = dataset.tensors(sample_id)
            label = torch.tensor([dataset.label(sample_id)])
            logit = model(image, pc)
            loss = loss_fn(logit, label)
            if not torch.isfinite(loss):
                raise NonFiniteLoss(
                    f"non-finite loss at epoch {epoch} step {step} (sample {sample_id}); "
                    f"lr={cfg.learning_rate}, streams={cfg.streams}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total_loss += loss.item()

        val_metrics, _ = _evaluate(model, dataset, val_ids, cfg.threshold)
        history["epoch_loss"].append(total_loss / max(len(order), 1))
        history["val"].append(val_metrics)
        if val_metrics["mcc"] > best_mcc:
            best_mcc = val_metrics["mcc"]
            best_state = copy.deepcopy(model.state_dict())
            best_epoch = epoch
        if not quiet:
            print(
                f"epoch {epoch}: loss {history['epoch_loss'][-1]:.4f} "
                f"val acc {val_metrics['acc']:.3f} mcc {val_metrics['mcc']:.3f}"
            )

    model.load_state_dict(best_state)
    test_metrics, predictions = _evaluate(model, dataset, test_ids, cfg.threshold)
    history["best_epoch"] = best_epoch
    history["best_val_mcc"] = best_mcc
    history["test"] = test_metrics

    torch.save({"state_dict": best_state, "config": cfg.__dict__.copy()}, out / "checkpoint.pt")
    (out / "predictions.json").write_text(json.dumps(predictions, indent=2) + "\n")
    (out / "metrics.json").write_text(json.dumps(test_metrics, indent=2) + "\n")
    if not quiet:
        print(
            f"best epoch {best_epoch} (val mcc {best_mcc:.3f}); "
            f"test acc {test_metrics['acc']:.3f} mcc {test_metrics['mcc']:.3f}"
        )
    return history
