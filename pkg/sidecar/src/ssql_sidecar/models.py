"""Embedding model adapters.

A model spec is `<kind>:<argument>`:

    dummy:<dim>          deterministic hash-based vectors, no ML dependencies;
                         for wiring tests and offline demos
    clip:<checkpoint>    a pretrained joint text-image model loaded through
                         transformers (requires the [clip] extra and local
                         weights), e.g. clip:openai/clip-vit-base-patch32

Adapters embed text and image files into the same space and report a fixed
output dimension. Text embedding must be deterministic for identical input.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np


class ModelLoadError(RuntimeError):
    pass


class DummyModel:
    """Hash-seeded random unit vectors. Identical input, identical output;
    no relation between text and image content beyond determinism."""

    def __init__(self, dim: int):
        if dim < 2:
            raise ModelLoadError("dummy model dimension must be at least 2")
        self.dim = dim

    def _from_bytes(self, payload: bytes) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal(self.dim)
        return (raw / np.linalg.norm(raw)).astype(np.float32)

    def embed_text(self, text: str) -> np.ndarray:
        return self._from_bytes(b"text\x00" + text.encode("utf-8"))

    def embed_image(self, path: str | Path) -> np.ndarray:
        return self._from_bytes(b"image\x00" + Path(path).read_bytes())


class ClipModel:
    """Pretrained joint text-image encoder behind transformers."""

    def __init__(self, checkpoint: str):
        try:
            import torch
            from transformers import CLIPModel as HFCLIPModel
            from transformers import CLIPProcessor
        except ImportError as exc:
            raise ModelLoadError(
                "the clip adapter needs the [clip] extra (torch, transformers, pillow)"
            ) from exc
        try:
            self._torch = torch
            self._model = HFCLIPModel.from_pretrained(checkpoint)
            self._processor = CLIPProcessor.from_pretrained(checkpoint)
        except Exception as exc:
            raise ModelLoadError(f"could not load checkpoint {checkpoint!r}: {exc}") from exc
        self._model.eval()
        self.dim = int(self._model.config.projection_dim)

    def embed_text(self, text: str) -> np.ndarray:
        inputs = self._processor(text=[text], return_tensors="pt", padding=True)
        with self._torch.no_grad():
            features = self._model.get_text_features(**inputs)
        return features[0].cpu().numpy().astype(np.float32)

    def embed_image(self, path: str | Path) -> np.ndarray:
        from PIL import Image

        with Image.open(path) as img:
            inputs = self._processor(images=img.convert("RGB"), return_tensors="pt")
        with self._torch.no_grad():
            features = self._model.get_image_features(**inputs)
        return features[0].cpu().numpy().astype(np.float32)


def load_model(spec: str):
    kind, _, argument = spec.partition(":")
    if kind == "dummy":
        try:
            dim = int(argument)
        except ValueError:
            raise ModelLoadError(f"dummy model needs a numeric dimension, got {argument!r}")
        return DummyModel(dim)
    if kind == "clip":
        if not argument:
            raise ModelLoadError("clip model needs a checkpoint name, e.g. clip:openai/clip-vit-base-patch32")
        return ClipModel(argument)
    raise ModelLoadError(f"unknown model kind {kind!r} (expected dummy:<dim> or clip:<checkpoint>)")
