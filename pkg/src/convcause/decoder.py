"""Graph-based decoder: role projections, biaffine arc and emotion-label
scoring, and the span attention head.

Orientation convention, used everywhere in this package: row index = cause
utterance, column index = effect utterance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

__all__ = [
    "RoleProjections",
    "CauseGraphScores",
    "init_projection_params",
    "init_decoder_params",
    "apply_projection",
    "project_roles",
    "arc_scores",
    "label_scores",
    "span_scores",
]

ROLES = ("cause", "effect", "cause_label", "effect_label")


@dataclass
class RoleProjections:
    """Four (m, d_g) projections of the fused utterance matrix."""

    cause: Tensor
    effect: Tensor
    cause_label: Tensor
    effect_label: Tensor


@dataclass
class CauseGraphScores:
    """Decoder outputs for one conversation.

    arc: (m, m) logits; label: (m, m, n_emotions) logits; span:
    (m, m, max_len) logits with axis 0 the cause utterance. Cells of `span`
    at or past a cause utterance's real length (see `lengths`) are
    zero-filled and must be ignored by losses and decoding.
    """

    arc: Tensor
    label: Tensor
    span: Tensor
    lengths: tuple[int, ...]

    @property
    def m(self) -> int:
        return self.arc.shape[0]


def _glorot(rng: np.random.Generator, n_in: int, n_out: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / (n_in + n_out)), size=(n_in, n_out))


def init_projection_params(
    d_in: int, d_out: int, rng: np.random.Generator, prefix: str
) -> dict[str, Tensor]:
    """A projection is a linear map plus one GELU hidden layer of width
    d_out feeding back into it; zeroing the hidden path and setting the
    linear map to the identity makes the projection exactly the identity."""
    return {
        f"{prefix}.lin": Tensor(_glorot(rng, d_in, d_out), requires_grad=True),
        f"{prefix}.w1": Tensor(_glorot(rng, d_in, d_out), requires_grad=True),
        f"{prefix}.b1": Tensor(np.zeros(d_out), requires_grad=True),
        f"{prefix}.w2": Tensor(_glorot(rng, d_out, d_out), requires_grad=True),
        f"{prefix}.b2": Tensor(np.zeros(d_out), requires_grad=True),
    }


def init_decoder_params(
    d_enc: int, d_word: int, d_g: int, n_emotions: int, rng: np.random.Generator
) -> dict[str, Tensor]:
    """`d_enc` is the fused utterance width; `d_word` the per-word embedding
    width consumed by the span query projection."""
    params: dict[str, Tensor] = {}
    for role in ROLES:
        params.update(init_projection_params(d_enc, d_g, rng, f"proj.{role}"))
    params.update(init_projection_params(d_word, d_g, rng, "proj.span_query"))
    params["biaffine.arc_w"] = Tensor(_glorot(rng, d_g, d_g), requires_grad=True)
    params["biaffine.label_w"] = Tensor(
        rng.normal(0.0, np.sqrt(2.0 / (2 * d_g)), size=(d_g, n_emotions, d_g)), requires_grad=True
    )
    return params


def apply_projection(
    x: Tensor,
    params: dict[str, Tensor],
    prefix: str,
    dropout: float,
    rng: np.random.Generator,
    training: bool,
) -> Tensor:
    hidden = ad.gelu(ad.add(ad.matmul(x, params[f"{prefix}.w1"]), params[f"{prefix}.b1"]))
    hidden = ad.dropout(hidden, dropout, rng, training)
    return ad.add(
        ad.add(ad.matmul(x, params[f"{prefix}.lin"]), ad.matmul(hidden, params[f"{prefix}.w2"])),
        params[f"{prefix}.b2"],
    )


def project_roles(
    u_fused: Tensor,
    params: dict[str, Tensor],
    dropout: float,
    rng: np.random.Generator,
    training: bool = False,
) -> RoleProjections:
    c, e, cl, el = (
        apply_projection(u_fused, params, f"proj.{role}", dropout, rng, training) for role in ROLES
    )
    return RoleProjections(cause=c, effect=e, cause_label=cl, effect_label=el)


def arc_scores(proj: RoleProjections, arc_w: Tensor) -> Tensor:
    """(m, m) logits; cell (i, j) scores the relation cause i -> effect j."""
    return ad.bilinear_arc(proj.cause, arc_w, proj.effect)


def label_scores(proj: RoleProjections, label_w: Tensor) -> Tensor:
    """(m, m, n_emotions) logits over the emotion of each cause->effect arc."""
    return ad.bilinear_label(proj.cause_label, label_w, proj.effect_label)


def span_scores(
    w_list: list[Tensor],
    effect: Tensor,
    params: dict[str, Tensor],
    dropout: float,
    rng: np.random.Generator,
    training: bool = False,
) -> Tensor:
    """Span logits (m, m, max_len): cell (i, j, k) scores word k of cause
    utterance i belonging to the span that triggers the emotion in j.

    Word rows (CLS excluded) are projected to the arc width and scored
    against the effect representations with a scaled dot product.
    """
    d_g = effect.shape[1]
    inv_sqrt = 1.0 / np.sqrt(d_g)
    per_cause: list[Tensor] = []
    for w_i in w_list:
        words = ad.narrow(w_i, 0, 1, w_i.shape[0] - 1)  # drop the CLS row
        q = apply_projection(words, params, "proj.span_query", dropout, rng, training)
        logits = ad.scale(ad.matmul(q, ad.transpose(effect)), inv_sqrt)  # (len_i, m)
        per_cause.append(ad.transpose(logits))  # (m, len_i)
    max_len = max(t.shape[1] for t in per_cause)
    return ad.assemble_span_tensor(per_cause, max_len)
