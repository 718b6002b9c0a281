"""Utterance encoders: a small trainable text encoder, precomputed-feature
loading, speaker relative encoding, recurrent modality summarizers and
multimodal fusion.

Every utterance is encoded independently; u_i is the contextualized row of
a CLS-analog token prepended to the word sequence, and the full per-word
matrix (CLS row first) feeds the span attention head downstream.
"""

from __future__ import annotations

import warnings
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import CLS_ID, UNK_ID, Conversation

__all__ = [
    "EncoderConfig",
    "init_toy_text_params",
    "encode_text_toy",
    "load_text_features",
    "speaker_relative_ids",
    "init_lstm_params",
    "summarize_sequence",
    "init_fusion_params",
    "fuse_modalities",
    "feature_id",
]


@dataclass
class EncoderConfig:
    mode: str = "toy"  # "toy" or "precomputed"
    d_text: int = 128  # 1024 when loading features from a large text model
    n_layers: int = 2
    n_heads: int = 4
    dropout: float = 0.1
    max_len: int = 128  # tokens per utterance before truncation
    max_speakers: int = 16
    d_speaker: int = 32
    d_visual: int = 128
    d_audio: int = 128
    use_visual: bool = False
    use_audio: bool = False

    def __post_init__(self):
        if self.mode not in ("toy", "precomputed"):
            raise ValueError(f"mode must be 'toy' or 'precomputed', got {self.mode!r}")
        if self.d_text % self.n_heads != 0:
            raise ValueError(f"d_text={self.d_text} not divisible by n_heads={self.n_heads}")
        if self.max_speakers < 1:
            raise ValueError("max_speakers must be >= 1")

    @property
    def d_encoder(self) -> int:
        """Width of the fused utterance representation."""
        return (
            self.d_text
            + (self.d_visual if self.use_visual else 0)
            + (self.d_audio if self.use_audio else 0)
        )


def feature_id(conversation_id: str, utterance_index: int) -> str:
    return f"{conversation_id}_{utterance_index}"


# ---------------------------------------------------------------------------
# toy text encoder
# ---------------------------------------------------------------------------


def _glorot(rng: np.random.Generator, n_in: int, n_out: int) -> np.ndarray:
    scale = np.sqrt(2.0 / (n_in + n_out))
    return rng.normal(0.0, scale, size=(n_in, n_out))


def init_toy_text_params(cfg: EncoderConfig, vocab_size: int, rng: np.random.Generator) -> dict[str, Tensor]:
    d = cfg.d_text
    params = {
        "text.tok_emb": Tensor(rng.normal(0.0, 0.1, size=(vocab_size, d)), requires_grad=True),
        "text.pos_emb": Tensor(rng.normal(0.0, 0.1, size=(cfg.max_len + 1, d)), requires_grad=True),
    }
    for layer in range(cfg.n_layers):
        p = f"text.layer{layer}"
        params[f"{p}.ln1.g"] = Tensor(np.ones(d), requires_grad=True)
        params[f"{p}.ln1.b"] = Tensor(np.zeros(d), requires_grad=True)
        params[f"{p}.ln2.g"] = Tensor(np.ones(d), requires_grad=True)
        params[f"{p}.ln2.b"] = Tensor(np.zeros(d), requires_grad=True)
        # no key bias: it shifts every attention logit in a row equally,
        # which the softmax cancels, so it could never receive gradient
        for name in ("wq", "wv", "wo"):
            params[f"{p}.{name}"] = Tensor(_glorot(rng, d, d), requires_grad=True)
            params[f"{p}.{name}.b"] = Tensor(np.zeros(d), requires_grad=True)
        params[f"{p}.wk"] = Tensor(_glorot(rng, d, d), requires_grad=True)
        params[f"{p}.ffn.w1"] = Tensor(_glorot(rng, d, 2 * d), requires_grad=True)
        params[f"{p}.ffn.b1"] = Tensor(np.zeros(2 * d), requires_grad=True)
        params[f"{p}.ffn.w2"] = Tensor(_glorot(rng, 2 * d, d), requires_grad=True)
        params[f"{p}.ffn.b2"] = Tensor(np.zeros(d), requires_grad=True)
    return params


def _linear(x: Tensor, w: Tensor, b: Tensor | None) -> Tensor:
    out = ad.matmul(x, w)
    return out if b is None else ad.add(out, b)


def _self_attention(
    x: Tensor, params: dict[str, Tensor], prefix: str, n_heads: int,
    rate: float, rng: np.random.Generator, training: bool,
) -> Tensor:
    n, d = x.shape
    dh = d // n_heads
    q = _linear(x, params[f"{prefix}.wq"], params[f"{prefix}.wq.b"])
    k = _linear(x, params[f"{prefix}.wk"], None)
    v = _linear(x, params[f"{prefix}.wv"], params[f"{prefix}.wv.b"])
    heads = []
    for h in range(n_heads):
        qh = ad.narrow(q, 1, h * dh, dh)
        kh = ad.narrow(k, 1, h * dh, dh)
        vh = ad.narrow(v, 1, h * dh, dh)
        logits = ad.scale(ad.matmul(qh, ad.transpose(kh)), 1.0 / np.sqrt(dh))
        attn = ad.softmax(logits, axis=-1)
        attn = ad.dropout(attn, rate, rng, training)
        heads.append(ad.matmul(attn, vh))
    ctx = heads[0] if n_heads == 1 else ad.concat(heads, axis=1)
    return _linear(ctx, params[f"{prefix}.wo"], params[f"{prefix}.wo.b"])


def _encode_one_utterance(
    ids: list[int], params: dict[str, Tensor], cfg: EncoderConfig,
    rng: np.random.Generator, training: bool,
) -> Tensor:
    x = ad.add(
        ad.embedding(params["text.tok_emb"], ids),
        ad.embedding(params["text.pos_emb"], list(range(len(ids)))),
    )
    for layer in range(cfg.n_layers):
        p = f"text.layer{layer}"
        h = ad.layer_norm(x, params[f"{p}.ln1.g"], params[f"{p}.ln1.b"])
        attn = _self_attention(h, params, p, cfg.n_heads, cfg.dropout, rng, training)
        x = ad.add(x, ad.dropout(attn, cfg.dropout, rng, training))
        h = ad.layer_norm(x, params[f"{p}.ln2.g"], params[f"{p}.ln2.b"])
        ffn = _linear(ad.gelu(_linear(h, params[f"{p}.ffn.w1"], params[f"{p}.ffn.b1"])),
                      params[f"{p}.ffn.w2"], params[f"{p}.ffn.b2"])
        x = ad.add(x, ad.dropout(ffn, cfg.dropout, rng, training))
    return x


def encode_text_toy(
    conv: Conversation,
    vocab: Mapping[str, int],
    params: dict[str, Tensor],
    cfg: EncoderConfig,
    rng: np.random.Generator,
    training: bool = False,
) -> tuple[Tensor, list[Tensor]]:
    """Per-utterance contextualization; returns the (m, d_text) matrix of
    CLS rows and the per-utterance full matrices (CLS row first)."""
    w_list: list[Tensor] = []
    cls_rows: list[Tensor] = []
    for u in conv.utterances:
        tokens = u.tokens
        if len(tokens) > cfg.max_len:
            warnings.warn(
                f"utterance {u.index} of conversation {conv.id} has {len(tokens)} tokens; "
                f"truncating to {cfg.max_len}",
                stacklevel=2,
            )
            tokens = tokens[: cfg.max_len]
        ids = [CLS_ID] + [vocab.get(t, UNK_ID) for t in tokens]
        w_i = _encode_one_utterance(ids, params, cfg, rng, training)
        w_list.append(w_i)
        cls_rows.append(ad.narrow(w_i, 0, 0, 1))
    u_mat = cls_rows[0] if len(cls_rows) == 1 else ad.concat(cls_rows, axis=0)
    return u_mat, w_list


# ---------------------------------------------------------------------------
# precomputed text features
# ---------------------------------------------------------------------------


def load_text_features(
    records: Mapping[str, np.ndarray], conv: Conversation, d_text: int
) -> tuple[Tensor, list[Tensor]]:
    """Build (U, W_list) from word-level feature records; row 0 of each
    record is the CLS row. The returned tensors carry no gradient."""
    w_list: list[Tensor] = []
    cls_rows: list[np.ndarray] = []
    for u in conv.utterances:
        rid = feature_id(conv.id, u.index)
        if rid not in records:
            raise KeyError(f"missing text feature record {rid!r}")
        rec = np.asarray(records[rid], dtype=np.float64)
        if rec.ndim != 2 or rec.shape[1] != d_text:
            raise ValueError(
                f"feature record {rid!r} has shape {rec.shape}, expected (rows, {d_text})"
            )
        w_list.append(Tensor(rec))
        cls_rows.append(rec[0])
    return Tensor(np.stack(cls_rows)), w_list


# ---------------------------------------------------------------------------
# speaker relative encoding
# ---------------------------------------------------------------------------


def speaker_relative_ids(speakers: list[str], max_speakers: int = 16) -> list[int]:
    """First-occurrence indices, e.g. (A, B, C, A, B) -> (0, 1, 2, 0, 1);
    invariant under any bijective renaming of the speakers. Ids clamp to
    max_speakers - 1."""
    order: dict[str, int] = {}
    out = []
    for s in speakers:
        if s not in order:
            order[s] = len(order)
        out.append(min(order[s], max_speakers - 1))
    return out


# ---------------------------------------------------------------------------
# recurrent sequence summarizer (frozen-modality path)
# ---------------------------------------------------------------------------


def init_lstm_params(d_in: int, d_out: int, rng: np.random.Generator, prefix: str) -> dict[str, Tensor]:
    # gate order: input, forget, cell, output
    return {
        f"{prefix}.wx": Tensor(_glorot(rng, d_in, 4 * d_out), requires_grad=True),
        f"{prefix}.wh": Tensor(_glorot(rng, d_out, 4 * d_out), requires_grad=True),
        f"{prefix}.b": Tensor(np.zeros(4 * d_out), requires_grad=True),
    }


def summarize_sequence(seq: Tensor, params: dict[str, Tensor], prefix: str) -> Tensor:
    """Single-layer LSTM over the rows of `seq`; returns the final hidden
    state as a (1, d_out) tensor."""
    wx, wh, b = params[f"{prefix}.wx"], params[f"{prefix}.wh"], params[f"{prefix}.b"]
    if seq.shape[1] != wx.shape[0]:
        raise ValueError(f"sequence width {seq.shape[1]} != summarizer input width {wx.shape[0]}")
    d_out = wh.shape[0]
    h = Tensor(np.zeros((1, d_out)))
    c = Tensor(np.zeros((1, d_out)))
    rows = seq.shape[0]
    for k in range(rows):
        x_k = ad.narrow(seq, 0, k, 1)
        gates = ad.add(ad.add(ad.matmul(x_k, wx), ad.matmul(h, wh)), b)
        i = ad.sigmoid(ad.narrow(gates, 1, 0, d_out))
        f = ad.sigmoid(ad.narrow(gates, 1, d_out, d_out))
        g = ad.tanh(ad.narrow(gates, 1, 2 * d_out, d_out))
        o = ad.sigmoid(ad.narrow(gates, 1, 3 * d_out, d_out))
        c = ad.add(ad.mul(f, c), ad.mul(i, g))
        h = ad.mul(o, ad.tanh(c))
    return h


# ---------------------------------------------------------------------------
# fusion
# ---------------------------------------------------------------------------


def init_fusion_params(cfg: EncoderConfig, rng: np.random.Generator) -> dict[str, Tensor]:
    return {
        "speaker.emb": Tensor(
            rng.normal(0.0, 0.1, size=(cfg.max_speakers, cfg.d_speaker)), requires_grad=True
        ),
        # bias-free so an all-zero speaker table leaves fusion a pure concat
        "speaker.proj": Tensor(_glorot(rng, cfg.d_speaker, cfg.d_encoder), requires_grad=True),
    }


def fuse_modalities(
    u_text: Tensor,
    x_visual: Tensor | None,
    a_audio: Tensor | None,
    speaker_ids: list[int],
    params: dict[str, Tensor],
) -> Tensor:
    """Concatenate the available per-utterance modality matrices and add the
    projected speaker embedding."""
    parts = [u_text]
    if x_visual is not None:
        if x_visual.shape[0] != u_text.shape[0]:
            raise ValueError("visual rows do not match utterance count")
        parts.append(x_visual)
    if a_audio is not None:
        if a_audio.shape[0] != u_text.shape[0]:
            raise ValueError("audio rows do not match utterance count")
        parts.append(a_audio)
    fused = parts[0] if len(parts) == 1 else ad.concat(parts, axis=1)
    spk = ad.matmul(ad.embedding(params["speaker.emb"], speaker_ids), params["speaker.proj"])
    return ad.add(fused, spk)
