from .aggregate import aggregate_models
from .run_pipeline import run_dataset, run_pipeline
from .synthetic import synthesize_dataset

__all__ = ["aggregate_models", "run_dataset", "run_pipeline", "synthesize_dataset"]
