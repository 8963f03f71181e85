"""Session HTTP API and headless pipeline runner."""

from .pipeline import DatasetBundle, load_dataset_dir, run_pipeline
from .sessions import Session, SessionStore, StageError

__all__ = [
    "DatasetBundle",
    "load_dataset_dir",
    "run_pipeline",
    "Session",
    "SessionStore",
    "StageError",
]
