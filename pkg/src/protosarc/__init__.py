"""Interpretable prototype-based sarcasm classifier over fixed text embeddings."""

from .data import (Dataset, DatasetManifest, EmbeddingRecord, FoldPlan,
                   load_dataset, split_folds, write_dataset)
from .errors import ConfigError, DataError, NumericalError, ProtosarcError
from .explain import (Explanation, Metrics, ProjectedModel, ProjectedPrototype,
                      ProjectionInfo, evaluate, explain, project_prototypes)
from .kmeans import (KMeansResult, init_semantic_prototypes,
                     init_sentiment_prototypes, kmeans)
from .losses import (LossBreakdown, LossWeights, acc_loss, cls_sep, div_loss,
                     inco_loss, total_loss)
from .model import (ForwardTrace, IncongruityHead, ModelParams, OutputHead,
                    PrototypeBank, forward, forward_batch, incongruity_forward,
                    load_checkpoint, rbf_similarity, save_checkpoint,
                    similarity_vector)
from .training import (AdamState, TrainConfig, TrainHistory, adam_step,
                       cross_validate, finite_diff_check, gradients,
                       loss_and_grads, paper_settings, train)

__all__ = [
    "Dataset", "DatasetManifest", "EmbeddingRecord", "FoldPlan",
    "load_dataset", "split_folds", "write_dataset",
    "ConfigError", "DataError", "NumericalError", "ProtosarcError",
    "Explanation", "Metrics", "ProjectedModel", "ProjectedPrototype",
    "ProjectionInfo", "evaluate", "explain", "project_prototypes",
    "KMeansResult", "init_semantic_prototypes", "init_sentiment_prototypes", "kmeans",
    "LossBreakdown", "LossWeights", "acc_loss", "cls_sep", "div_loss",
    "inco_loss", "total_loss",
    "ForwardTrace", "IncongruityHead", "ModelParams", "OutputHead",
    "PrototypeBank", "forward", "forward_batch", "incongruity_forward",
    "load_checkpoint", "rbf_similarity", "save_checkpoint", "similarity_vector",
    "AdamState", "TrainConfig", "TrainHistory", "adam_step", "cross_validate",
    "finite_diff_check", "gradients", "loss_and_grads", "paper_settings", "train",
]

__version__ = "0.1.0"
