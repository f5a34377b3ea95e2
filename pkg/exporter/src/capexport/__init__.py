"""Offline feature exporter for the caption-evaluation engine.

Runs a frozen dual-encoder backbone over images, captions, and frame
sequences and writes pre-projection features, token-level embeddings, and
projection initializers as interchange containers.
"""

__version__ = "0.1.0"

from .backbones import BACKBONES, ChromaticBackbone, load_backbone
from .export import ExportJob, export_augmented_tuples, export_features

__all__ = ["BACKBONES", "ChromaticBackbone", "ExportJob", "export_augmented_tuples",
           "export_features", "load_backbone"]
