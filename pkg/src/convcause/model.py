"""End-to-end model: encoder -> fusion -> graph decoder, with checkpoint
save/load over the package's binary feature-record format."""

from __future__ import annotations

import dataclasses
import json
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import Conversation
from .decoder import (
    CauseGraphScores,
    arc_scores,
    init_decoder_params,
    label_scores,
    project_roles,
    span_scores,
)
from .encoder import (
    EncoderConfig,
    encode_text_toy,
    feature_id,
    fuse_modalities,
    init_fusion_params,
    init_lstm_params,
    init_toy_text_params,
    load_text_features,
    speaker_relative_ids,
    summarize_sequence,
)
from .uft import read_uft1, write_uft1

__all__ = ["ModelConfig", "FeatureBundle", "EmotionCauseModel"]


@dataclass
class ModelConfig:
    encoder: EncoderConfig = dataclasses.field(default_factory=EncoderConfig)
    d_g: int = 600
    dropout: float = 0.1


@dataclass
class FeatureBundle:
    """Precomputed feature records per modality, keyed by
    "<conversation_ID>_<utterance_ID>"."""

    text: Mapping[str, np.ndarray] | None = None
    visual: Mapping[str, np.ndarray] | None = None
    audio: Mapping[str, np.ndarray] | None = None

    def for_conversation(self, conv: Conversation, which: str) -> list[np.ndarray]:
        records = getattr(self, which)
        out = []
        for u in conv.utterances:
            rid = feature_id(conv.id, u.index)
            if rid not in records:
                raise KeyError(f"missing {which} feature record {rid!r}")
            out.append(np.asarray(records[rid], dtype=np.float64))
        return out


class EmotionCauseModel:
    """Holds all trainable parameters and runs the forward pass for one
    conversation at a time."""

    def __init__(
        self,
        config: ModelConfig,
        emotions: tuple[str, ...],
        vocabulary: dict[str, int] | None = None,
        seed: int = 0,
    ):
        if not emotions:
            raise ValueError("emotion inventory must be non-empty")
        enc = config.encoder
        if enc.mode == "toy" and not vocabulary:
            raise ValueError("toy encoder mode requires a vocabulary")
        self.config = config
        self.emotions = tuple(emotions)
        self.vocabulary = dict(vocabulary) if vocabulary else None
        self.seed = seed
        rng = np.random.default_rng(seed)
        params: dict[str, Tensor] = {}
        if enc.mode == "toy":
            params.update(init_toy_text_params(enc, len(self.vocabulary), rng))
        if enc.use_visual:
            params.update(init_lstm_params(enc.d_visual, enc.d_visual, rng, "visual_lstm"))
        if enc.use_audio:
            params.update(init_lstm_params(enc.d_audio, enc.d_audio, rng, "audio_lstm"))
        params.update(init_fusion_params(enc, rng))
        params.update(
            init_decoder_params(enc.d_encoder, enc.d_text, config.d_g, len(self.emotions), rng)
        )
        self.params = params
        # dropout noise stream, independent of init; reseeded for replays
        self._dropout_rng = np.random.default_rng(seed + 1)

    # -- parameter plumbing -------------------------------------------------

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def gradients(self) -> dict[str, np.ndarray]:
        return {name: p.grad for name, p in self.params.items() if p.grad is not None}

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.params.items()}

    def restore(self, snapshot: dict[str, np.ndarray]) -> None:
        for name, arr in snapshot.items():
            self.params[name].data = arr.copy()

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.params.values())

    # -- forward ------------------------------------------------------------

    def forward(
        self,
        conv: Conversation,
        features: FeatureBundle | None = None,
        training: bool = False,
    ) -> CauseGraphScores:
        enc = self.config.encoder
        rng = self._dropout_rng
        if enc.mode == "toy":
            u_text, w_list = encode_text_toy(conv, self.vocabulary, self.params, enc, rng, training)
        else:
            if features is None or features.text is None:
                raise ValueError("precomputed mode requires a text feature bundle")
            u_text, w_list = load_text_features(features.text, conv, enc.d_text)

        x_visual = a_audio = None
        if enc.use_visual:
            rows = [
                summarize_sequence(Tensor(rec), self.params, "visual_lstm")
                for rec in features.for_conversation(conv, "visual")
            ]
            x_visual = rows[0] if len(rows) == 1 else ad.concat(rows, axis=0)
        if enc.use_audio:
            rows = [
                summarize_sequence(Tensor(rec), self.params, "audio_lstm")
                for rec in features.for_conversation(conv, "audio")
            ]
            a_audio = rows[0] if len(rows) == 1 else ad.concat(rows, axis=0)

        speaker_ids = speaker_relative_ids(conv.speakers, enc.max_speakers)
        fused = fuse_modalities(u_text, x_visual, a_audio, speaker_ids, self.params)
        roles = project_roles(fused, self.params, self.config.dropout, rng, training)
        arc = arc_scores(roles, self.params["biaffine.arc_w"])
        label = label_scores(roles, self.params["biaffine.label_w"])
        span = span_scores(w_list, roles.effect, self.params, self.config.dropout, rng, training)
        lengths = tuple(w.shape[0] - 1 for w in w_list)
        return CauseGraphScores(arc=arc, label=label, span=span, lengths=lengths)

    # -- checkpointing ------------------------------------------------------

    def save_checkpoint(self, base: str | Path) -> tuple[Path, Path]:
        """Write `<base>.uft1` (flattened parameters) and `<base>.json`
        (config, inventory, vocabulary, parameter shapes)."""
        base = Path(base)
        weights_path = base.with_suffix(".uft1")
        sidecar_path = base.with_suffix(".json")
        records = {name: p.data.reshape(-1, 1) for name, p in self.params.items()}
        write_uft1(weights_path, records, dim=1)
        sidecar = {
            "format": "convcause-checkpoint",
            "version": 1,
            "seed": self.seed,
            "emotions": list(self.emotions),
            "vocabulary": self.vocabulary,
            "config": {
                "d_g": self.config.d_g,
                "dropout": self.config.dropout,
                "encoder": dataclasses.asdict(self.config.encoder),
            },
            "shapes": {name: list(p.data.shape) for name, p in self.params.items()},
        }
        sidecar_path.write_text(json.dumps(sidecar, indent=1))
        return weights_path, sidecar_path

    @classmethod
    def load_checkpoint(cls, base: str | Path) -> "EmotionCauseModel":
        base = Path(base)
        sidecar = json.loads(base.with_suffix(".json").read_text())
        if sidecar.get("format") != "convcause-checkpoint":
            raise ValueError(f"{base}: not a model checkpoint sidecar")
        cfg = ModelConfig(
            encoder=EncoderConfig(**sidecar["config"]["encoder"]),
            d_g=sidecar["config"]["d_g"],
            dropout=sidecar["config"]["dropout"],
        )
        model = cls(
            cfg,
            emotions=tuple(sidecar["emotions"]),
            vocabulary=sidecar["vocabulary"],
            seed=sidecar.get("seed", 0),
        )
        records, dim = read_uft1(base.with_suffix(".uft1"))
        if dim != 1:
            raise ValueError(f"{base}: checkpoint weight file must have dim=1, got {dim}")
        shapes = sidecar["shapes"]
        if set(records) != set(model.params):
            missing = set(model.params) - set(records)
            extra = set(records) - set(model.params)
            raise ValueError(
                f"{base}: checkpoint parameters do not match model "
                f"(missing {sorted(missing)}, unexpected {sorted(extra)})"
            )
        for name, rec in records.items():
            shape = tuple(shapes[name])
            expected = model.params[name].data.shape
            if shape != expected:
                raise ValueError(
                    f"{base}: parameter {name!r} has shape {shape}, model expects {expected}"
                )
            model.params[name].data = rec.astype(np.float64).reshape(shape)
        return model
