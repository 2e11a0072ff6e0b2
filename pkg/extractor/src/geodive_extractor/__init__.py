"""Feature extraction and generation driving for the evaluation engine.

Consumes image manifests and prompt files, produces GEODIVE-EMB/1 embedding
files that the engine's `validate` command accepts bit-for-bit.
"""

from .backends import ClipBackend, InceptionFeatureBackend, ModelLoadError, ReferenceBackend, make_backend
from .crop import DecodeError, center_crop, load_image, preprocess
from .embfile import Row, write_embeddings
from .generate import PromptRow, StubClient, make_client, read_prompts, run_generation
from .jobs import ExtractionJob, embed_object_texts, run_extraction
from .manifest import ManifestRow, read_manifest, write_manifest

__all__ = [
    "ClipBackend",
    "DecodeError",
    "ExtractionJob",
    "InceptionFeatureBackend",
    "ManifestRow",
    "ModelLoadError",
    "PromptRow",
    "ReferenceBackend",
    "Row",
    "StubClient",
    "center_crop",
    "embed_object_texts",
    "load_image",
    "make_backend",
    "make_client",
    "preprocess",
    "read_manifest",
    "read_prompts",
    "run_extraction",
    "run_generation",
    "write_embeddings",
    "write_manifest",
]
