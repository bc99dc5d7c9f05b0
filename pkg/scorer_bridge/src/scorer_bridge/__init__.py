"""HTTP scoring service: embeddings, toxicity, fluency and judge endpoints."""

from .app import create_app

__all__ = ["create_app"]
__version__ = "0.1.0"
