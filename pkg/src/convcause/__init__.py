"""convcause: emotion-cause graphs over multi-party conversations.

A conversation is scored as a directed labeled graph: biaffine products
score cause->effect arcs and their emotion labels, an attention head
scores the trigger span inside the cause utterance, and a thresholding
post-process turns the tensors into discrete pair predictions. Training
runs on the package's own reverse-mode autodiff over numpy arrays.
"""

__version__ = "0.1.0"

from .autodiff import Tape, Tensor, backward
from .data import (
    Conversation,
    Dataset,
    DatasetParseError,
    DatasetValidationError,
    EmotionCausePair,
    Utterance,
    build_vocabulary,
    gold_targets,
    parse_dataset,
    split_dataset,
    to_canonical_json,
)
from .decoder import CauseGraphScores, RoleProjections
from .encoder import EncoderConfig, speaker_relative_ids
from .metrics import PRF, evaluate, pairs_by_conversation
from .model import EmotionCauseModel, FeatureBundle, ModelConfig
from .optim import AdamWState, adamw_step, clip_global_norm
from .postprocess import DecodeConfig, decode_conversation, logits_from_targets
from .synthetic import make_synthetic_dataset
from .training import TrainConfig, TrainLog, compute_loss, fit
from .uft import read_uft1, write_uft1

__all__ = [
    "__version__",
    "Tape",
    "Tensor",
    "backward",
    "Conversation",
    "Dataset",
    "DatasetParseError",
    "DatasetValidationError",
    "EmotionCausePair",
    "Utterance",
    "build_vocabulary",
    "gold_targets",
    "parse_dataset",
    "split_dataset",
    "to_canonical_json",
    "CauseGraphScores",
    "RoleProjections",
    "EncoderConfig",
    "speaker_relative_ids",
    "PRF",
    "evaluate",
    "pairs_by_conversation",
    "EmotionCauseModel",
    "FeatureBundle",
    "ModelConfig",
    "AdamWState",
    "adamw_step",
    "clip_global_norm",
    "DecodeConfig",
    "decode_conversation",
    "logits_from_targets",
    "make_synthetic_dataset",
    "TrainConfig",
    "TrainLog",
    "compute_loss",
    "fit",
    "read_uft1",
    "write_uft1",
]
