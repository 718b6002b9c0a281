"""Minimal reader for the conversation corpus JSON consumed upstream.

Only the fields this extractor needs are read: conversation ids,
utterance ids and texts. Tokenization mirrors the corpus contract
(lowercase; word characters grouped, any other non-space character its
own token) so word-level feature records line up with the consumer's
token counts.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


@dataclass(frozen=True)
class UtteranceText:
    record_id: str  # "<conversation_ID>_<utterance_ID>"
    text: str
    tokens: tuple[str, ...]


def tokenize(text: str) -> tuple[str, ...]:
    return tuple(m.group() for m in _TOKEN_RE.finditer(text.lower()))


def load_utterances(path: str | Path) -> list[UtteranceText]:
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, list):
        raise ValueError(f"{path}: expected a JSON array of conversations")
    out: list[UtteranceText] = []
    for conv in raw:
        conv_id = conv.get("conversation_ID") or conv.get("conversation_id") or conv.get("id")
        if conv_id is None:
            raise ValueError(f"{path}: conversation without an id")
        for k, utt in enumerate(conv.get("conversation") or conv.get("utterances") or [], start=1):
            idx = utt.get("utterance_ID") or utt.get("utterance_id") or k
            text = str(utt.get("text") or "")
            out.append(
                UtteranceText(record_id=f"{conv_id}_{idx}", text=text, tokens=tokenize(text))
            )
    return out
