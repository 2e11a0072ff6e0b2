"""Feature backends behind one small interface.

A backend exposes:

  backend_id    pinned identity string (model name plus weights hash),
                recorded in every output file's label
  input_size    square image side expected by embed_images
  dim           output dimension (constant per backend instance)
  embed_images(batch)  (B, input_size, input_size, 3) uint8 -> (B, dim) float32
  embed_texts(texts)   list[str] -> (B, dim) float32, or raises if unsupported

`reference` is a weight-free deterministic backend for pipeline tests and
wiring checks: features are counter-mode BLAKE2b hashes of the exact pixel
(or NFC text) bytes, mapped to [-1, 1). It has no semantics, but it is
byte-reproducible everywhere, which is what the interchange tests need.

`inception` extracts the final pooled layer (2048-d) of a torchvision
Inception v3 and serves classifier-feature jobs; `clip` wraps a local
transformers CLIP checkpoint for joint image/text jobs. Both require
locally available weights and import torch lazily; loading failures are
fatal by contract.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np


class ModelLoadError(Exception):
    """A pretrained backend could not be constructed."""


def _hash_features(payload: bytes, dim: int, tag: bytes) -> np.ndarray:
    digest = hashlib.blake2b(payload, digest_size=32, person=tag).digest()
    out = np.empty(dim, dtype=np.float32)
    for i in range(dim):
        h = hashlib.blake2b(digest + i.to_bytes(4, "little"), digest_size=8).digest()
        out[i] = np.float32(int.from_bytes(h, "little") / 2**63 - 1.0)
    return out


class ReferenceBackend:
    """Deterministic, weight-free hash features; for tests and wiring."""

    def __init__(self, dim: int = 64, input_size: int = 64):
        if dim < 1 or input_size < 1:
            raise ValueError("dim and input_size must be positive")
        self.dim = dim
        self.input_size = input_size
        self.backend_id = f"reference-hash/dim{dim}/in{input_size}"

    def embed_images(self, batch: np.ndarray) -> np.ndarray:
        out = np.empty((len(batch), self.dim), dtype=np.float32)
        for i, image in enumerate(batch):
            out[i] = _hash_features(np.ascontiguousarray(image, dtype=np.uint8).tobytes(), self.dim, b"img")
        return out

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        import unicodedata

        out = np.empty((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            payload = unicodedata.normalize("NFC", text).encode("utf-8")
            out[i] = _hash_features(payload, self.dim, b"txt")
        return out


class InceptionFeatureBackend:
    """Final-pooled-layer features (2048-d) of a torchvision Inception v3.

    ``weights`` names a local state-dict file; its SHA-256 is part of the
    backend id. ``weights=None`` seeds a random initialization - only useful
    for smoke tests, never for real evaluations.
    """

    dim = 2048
    input_size = 299

    def __init__(self, weights: str | Path | None = None, device: str = "cpu"):
        try:
            import torch
            from torchvision.models import inception_v3
        except ImportError as exc:
            raise ModelLoadError(f"torchvision unavailable: {exc}") from exc
        try:
            torch.manual_seed(0)
            model = inception_v3(weights=None, aux_logits=True, init_weights=True)
            if weights is not None:
                state = torch.load(Path(weights), map_location="cpu", weights_only=True)
                model.load_state_dict(state)
                weights_tag = _file_sha256(weights)[:12]
            else:
                weights_tag = "random-seed0"
        except (OSError, RuntimeError, ValueError) as exc:
            raise ModelLoadError(f"cannot load inception weights: {exc}") from exc
        model.fc = torch.nn.Identity()  # keep the pooled 2048-d activations
        model.eval()
        self._torch = torch
        self._model = model.to(device)
        self._device = device
        self.backend_id = f"inception-v3-pool/{weights_tag}"

    def embed_images(self, batch: np.ndarray) -> np.ndarray:
        torch = self._torch
        data = torch.from_numpy(np.ascontiguousarray(batch)).to(self._device)
        data = data.permute(0, 3, 1, 2).float().div_(255.0)
        mean = torch.tensor([0.485, 0.456, 0.406], device=self._device).view(1, 3, 1, 1)
        std = torch.tensor([0.229, 0.224, 0.225], device=self._device).view(1, 3, 1, 1)
        data = (data - mean) / std
        with torch.no_grad():
            features = self._model(data)
        return features.cpu().numpy().astype(np.float32)

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        raise ModelLoadError("inception backend has no text tower; use the clip backend")


class ClipBackend:
    """Joint image/text embeddings from a local transformers CLIP checkpoint."""

    def __init__(self, checkpoint: str | Path, device: str = "cpu"):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ModelLoadError(f"transformers unavailable: {exc}") from exc
        try:
            self._model = CLIPModel.from_pretrained(str(checkpoint)).to(device).eval()
            self._processor = CLIPProcessor.from_pretrained(str(checkpoint))
        except (OSError, ValueError) as exc:
            raise ModelLoadError(f"cannot load clip checkpoint {checkpoint}: {exc}") from exc
        self._torch = torch
        self._device = device
        self.dim = int(self._model.config.projection_dim)
        self.input_size = int(self._model.config.vision_config.image_size)
        self.backend_id = f"clip/{Path(checkpoint).name}"

    def embed_images(self, batch: np.ndarray) -> np.ndarray:
        torch = self._torch
        inputs = self._processor(images=[img for img in batch], return_tensors="pt").to(self._device)
        with torch.no_grad():
            features = self._model.get_image_features(**inputs)
        return features.cpu().numpy().astype(np.float32)

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        inputs = self._processor(text=texts, return_tensors="pt", padding=True).to(self._device)
        with torch.no_grad():
            features = self._model.get_text_features(**inputs)
        return features.cpu().numpy().astype(np.float32)


def _file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def make_backend(name: str, dim: int = 64, weights: str | None = None, device: str = "cpu"):
    """Backend factory used by the CLI: reference | inception | clip."""
    if name == "reference":
        return ReferenceBackend(dim=dim)
    if name == "inception":
        return InceptionFeatureBackend(weights=weights, device=device)
    if name == "clip":
        if weights is None:
            raise ModelLoadError("clip backend needs --weights pointing at a local checkpoint")
        return ClipBackend(checkpoint=weights, device=device)
    raise ModelLoadError(f"unknown backend {name!r} (expected reference, inception, or clip)")
