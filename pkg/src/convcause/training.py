"""Training loop: combined loss, one optimizer step per conversation, and
early stopping on the dev weighted F-score."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor, backward
from .data import Dataset, gold_targets
from .decoder import CauseGraphScores
from .metrics import evaluate, pairs_by_conversation
from .model import EmotionCauseModel, FeatureBundle
from .optim import AdamWState, adamw_step, clip_global_norm
from .postprocess import DecodeConfig, decode_conversation

__all__ = ["TrainConfig", "EpochLog", "TrainLog", "compute_loss", "fit"]


@dataclass
class TrainConfig:
    lr: float | None = None  # None: 1e-3 in toy mode, 1e-6 in precomputed mode
    epochs: int = 100
    patience: int = 10
    seed: int = 0
    arc_weight: float = 1.0
    label_weight: float = 1.0
    span_weight: float = 1.0
    clip_max_norm: float = 1.0
    weight_decay: float = 0.01
    dev_metric_mode: str = "strict"

    def __post_init__(self):
        if self.patience > self.epochs:
            raise ValueError(f"patience {self.patience} exceeds epochs {self.epochs}")
        if self.lr is not None and self.lr <= 0:
            raise ValueError("lr must be positive")

    def resolve_lr(self, encoder_mode: str) -> float:
        if self.lr is not None:
            return self.lr
        return 1e-3 if encoder_mode == "toy" else 1e-6


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    dev_precision: float
    dev_recall: float
    dev_f1: float


@dataclass
class TrainLog:
    epochs: list[EpochLog] = field(default_factory=list)
    best_epoch: int = 0
    best_f1: float = 0.0
    steps: int = 0

    def to_json_dict(self) -> dict:
        return {
            "best_epoch": self.best_epoch,
            "best_f1": self.best_f1,
            "steps": self.steps,
            "epochs": [vars(e) for e in self.epochs],
        }


def compute_loss(
    scores: CauseGraphScores,
    targets: tuple[np.ndarray, np.ndarray, np.ndarray],
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> Tensor:
    """Weighted sum of arc BCE over all cells, label cross-entropy over gold
    arcs, and span BCE over gold arcs at real token positions. Components
    with an empty mask contribute zero."""
    a, lab, s = targets
    m = scores.m
    if a.shape != (m, m):
        raise ValueError(f"arc target shape {a.shape} does not match scores ({m}, {m})")
    total = ad.scale(ad.bce_with_logits(scores.arc, a, np.ones_like(a, dtype=float)), weights[0])
    if np.any(a):
        total = ad.add(total, ad.scale(ad.masked_softmax_ce(scores.label, lab), weights[1]))
        lmax = min(scores.span.shape[2], s.shape[2])
        span_mask = np.zeros(scores.span.shape)
        for i, j in zip(*np.nonzero(a)):
            span_mask[i, j, : min(scores.lengths[i], lmax)] = 1.0
        if span_mask.any():
            span_targets = np.zeros(scores.span.shape)
            span_targets[:, :, :lmax] = s[:, :, :lmax]
            total = ad.add(
                total, ad.scale(ad.bce_with_logits(scores.span, span_targets, span_mask), weights[2])
            )
    loss = float(total.data)
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite training loss")
    return total


def _dev_f1(
    model: EmotionCauseModel,
    dev: Dataset,
    features: FeatureBundle | None,
    mode: str,
    decode_cfg: DecodeConfig,
) -> tuple[float, float, float]:
    preds = {}
    for conv in dev.conversations:
        scores = model.forward(conv, features=features, training=False)
        pairs, _ = decode_conversation(conv, scores, model.emotions, decode_cfg, span_mode=True)
        preds[conv.id] = pairs
    prf = evaluate(preds, pairs_by_conversation(dev), mode=mode)
    return prf.weighted_precision, prf.weighted_recall, prf.weighted_f1


def fit(
    model: EmotionCauseModel,
    train: Dataset,
    dev: Dataset,
    cfg: TrainConfig,
    features: FeatureBundle | None = None,
) -> TrainLog:
    """Optimize `model` in place; keeps the parameters of the best dev
    epoch and stops after `patience` epochs without improvement.

    Each epoch shuffles the training conversations with the run's seeded
    generator and takes one optimizer step per conversation.
    """
    if not train.conversations or not dev.conversations:
        raise ValueError("train and dev datasets must be non-empty")
    lr = cfg.resolve_lr(model.config.encoder.mode)
    state = AdamWState(lr=lr, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng(cfg.seed)
    weights = (cfg.arc_weight, cfg.label_weight, cfg.span_weight)
    targets = {
        conv.id: gold_targets(conv, model.emotions) for conv in train.conversations
    }
    decode_cfg = DecodeConfig()
    log = TrainLog()
    best_snapshot = model.snapshot()
    best_f1 = -1.0
    epochs_since_best = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(train.conversations))
        losses = []
        for idx in order:
            conv = train.conversations[idx]
            model.zero_grad()
            with Tape() as tape:
                scores = model.forward(conv, features=features, training=True)
                try:
                    loss = compute_loss(scores, targets[conv.id], weights)
                except FloatingPointError as exc:
                    raise FloatingPointError(f"epoch {epoch}: {exc}") from exc
                backward(loss, tape)
            grads = clip_global_norm(model.gradients(), cfg.clip_max_norm)
            adamw_step(model.params, grads, state)
            losses.append(float(loss.data))
        p, r, f1 = _dev_f1(model, dev, features, cfg.dev_metric_mode, decode_cfg)
        log.epochs.append(
            EpochLog(epoch=epoch, train_loss=float(np.mean(losses)), dev_precision=p, dev_recall=r, dev_f1=f1)
        )
        if f1 > best_f1:
            best_f1 = f1
            best_snapshot = model.snapshot()
            log.best_epoch = epoch
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= cfg.patience:
                break
    model.restore(best_snapshot)
    log.best_f1 = max(best_f1, 0.0)
    log.steps = state.t
    return log
