"""External-process embedder speaking the engine's byte protocol."""

from .models import ClipModel, DummyModel, ModelLoadError, load_model
from .protocol import write_embedding_file, write_vector_reply

__version__ = "0.1.0"

__all__ = [
    "ClipModel",
    "DummyModel",
    "ModelLoadError",
    "load_model",
    "write_embedding_file",
    "write_vector_reply",
    "__version__",
]
