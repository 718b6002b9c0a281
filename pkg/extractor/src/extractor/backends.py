"""Feature backends.

Every extractor accepts a backend name: "stub" produces deterministic
features with no model downloads (content-sensitive where the input has
content), anything else is treated as a Hugging Face model identifier and
loaded lazily. The stub keeps the full pipeline testable offline; the
model path is exercised whenever weights are actually available.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

STUB = "stub"


def _rng_for(key: str, seed: int) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{key}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _projection(key: str, d_in: int, d_out: int, seed: int) -> np.ndarray:
    return _rng_for(f"proj:{key}:{d_in}x{d_out}", seed).standard_normal((d_in, d_out)) / np.sqrt(d_in)


# ---------------------------------------------------------------------------
# text
# ---------------------------------------------------------------------------


@dataclass
class StubTextBackend:
    dim: int = 32
    seed: int = 0
    model_id: str = STUB
    revision: str = "n/a"

    def encode_words(self, tokens: tuple[str, ...]) -> np.ndarray:
        """Rows: [CLS, word_1..word_n]; CLS is the mean of the word rows."""
        rows = [_rng_for(f"text:{tok}", self.seed).standard_normal(self.dim) for tok in tokens]
        words = np.stack(rows)
        return np.vstack([words.mean(axis=0, keepdims=True), words]).astype(np.float32)


class HfTextBackend:
    """Frozen masked-LM encoder; word vectors are the first-subword hidden
    states, the CLS row comes first."""

    def __init__(self, model_id: str, revision: str | None = None):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        self.model_id = model_id
        self.tokenizer = AutoTokenizer.from_pretrained(model_id, revision=revision)
        self.model = AutoModel.from_pretrained(model_id, revision=revision)
        self.model.eval()
        self.revision = revision or "default"
        self.dim = int(self.model.config.hidden_size)

    def encode_words(self, tokens: tuple[str, ...]) -> np.ndarray:
        torch = self._torch
        enc = self.tokenizer(list(tokens), is_split_into_words=True, return_tensors="pt", truncation=True)
        with torch.no_grad():
            hidden = self.model(**enc).last_hidden_state[0]
        word_ids = enc.word_ids(0)
        first_rows: dict[int, int] = {}
        for pos, wid in enumerate(word_ids):
            if wid is not None and wid not in first_rows:
                first_rows[wid] = pos
        if len(first_rows) != len(tokens):
            raise ValueError("tokenizer lost words during alignment")
        rows = [hidden[0]] + [hidden[first_rows[w]] for w in range(len(tokens))]
        return torch.stack(rows).cpu().numpy().astype(np.float32)


# ---------------------------------------------------------------------------
# visual
# ---------------------------------------------------------------------------


@dataclass
class StubVisualBackend:
    dim: int = 32
    seed: int = 0
    model_id: str = STUB
    revision: str = "n/a"

    def encode_frame(self, frame: np.ndarray) -> np.ndarray:
        """Content-sensitive summary: coarse intensity statistics projected
        to the output width."""
        img = np.asarray(frame, dtype=np.float64)
        if img.ndim == 2:
            img = img[..., None]
        h, w = img.shape[:2]
        cells = []
        for i in range(4):
            for j in range(4):
                block = img[i * h // 4 : (i + 1) * h // 4 or 1, j * w // 4 : (j + 1) * w // 4 or 1]
                cells.extend([block.mean(), block.std()])
        stats = np.asarray(cells) / 255.0
        return (stats @ _projection("visual", stats.size, self.dim, self.seed)).astype(np.float32)


class HfVisualBackend:
    """Frozen vision transformer; one pooled last-hidden-state vector per
    frame."""

    def __init__(self, model_id: str, revision: str | None = None):
        import torch
        from transformers import AutoImageProcessor, AutoModel

        self._torch = torch
        self.model_id = model_id
        self.processor = AutoImageProcessor.from_pretrained(model_id, revision=revision)
        self.model = AutoModel.from_pretrained(model_id, revision=revision)
        self.model.eval()
        self.revision = revision or "default"
        self.dim = int(self.model.config.hidden_size)

    def encode_frame(self, frame: np.ndarray) -> np.ndarray:
        torch = self._torch
        inputs = self.processor(images=frame, return_tensors="pt")
        with torch.no_grad():
            hidden = self.model(**inputs).last_hidden_state[0]
        return hidden[0].cpu().numpy().astype(np.float32)  # CLS row


# ---------------------------------------------------------------------------
# audio
# ---------------------------------------------------------------------------


@dataclass
class StubAudioBackend:
    dim: int = 32
    seed: int = 0
    model_id: str = STUB
    revision: str = "n/a"
    window: int = 400  # 25 ms at 16 kHz
    hop: int = 320  # 20 ms at 16 kHz

    def encode_signal(self, signal: np.ndarray) -> np.ndarray:
        """One row per analysis window: energy, zero crossings and coarse
        spectrum, projected to the output width."""
        if signal.size < self.window:
            signal = np.pad(signal, (0, self.window - signal.size))
        starts = range(0, signal.size - self.window + 1, self.hop)
        rows = []
        for s in starts:
            chunk = signal[s : s + self.window]
            spec = np.abs(np.fft.rfft(chunk))[:16]
            feats = np.concatenate(
                [
                    [np.sqrt(np.mean(chunk**2)), np.mean(np.abs(np.diff(np.sign(chunk)))) / 2.0],
                    spec / (np.linalg.norm(spec) + 1e-9),
                ]
            )
            rows.append(feats @ _projection("audio", feats.size, self.dim, self.seed))
        return np.stack(rows).astype(np.float32)


class HfAudioBackend:
    """Frozen speech encoder; rows are its hidden-state sequence."""

    def __init__(self, model_id: str, revision: str | None = None):
        import torch
        from transformers import AutoModel, AutoProcessor

        self._torch = torch
        self.model_id = model_id
        self.processor = AutoProcessor.from_pretrained(model_id, revision=revision)
        self.model = AutoModel.from_pretrained(model_id, revision=revision)
        self.model.eval()
        self.revision = revision or "default"
        self.dim = int(self.model.config.hidden_size)

    def encode_signal(self, signal: np.ndarray) -> np.ndarray:
        torch = self._torch
        inputs = self.processor(signal, sampling_rate=16_000, return_tensors="pt")
        with torch.no_grad():
            hidden = self.model(**inputs).last_hidden_state[0]
        return hidden.cpu().numpy().astype(np.float32)


def make_text_backend(model_id: str, dim: int, seed: int):
    return StubTextBackend(dim=dim, seed=seed) if model_id == STUB else HfTextBackend(model_id)


def make_visual_backend(model_id: str, dim: int, seed: int):
    return StubVisualBackend(dim=dim, seed=seed) if model_id == STUB else HfVisualBackend(model_id)


def make_audio_backend(model_id: str, dim: int, seed: int):
    return StubAudioBackend(dim=dim, seed=seed) if model_id == STUB else HfAudioBackend(model_id)
