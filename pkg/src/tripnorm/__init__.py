"""Two-phase learned normal estimation for unstructured point clouds.

A PointNet-style encoder is first trained with a triplet loss on PCA-aligned
local patches, then a small regressor maps its latent code to the normal of
the patch centre.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .cloud import PointCloud, add_gaussian_noise, bbox_diagonal, load_cloud, save_cloud
from .errors import (
    ConfigHashError,
    CorruptFileError,
    DegeneratePatchError,
    MalformedFileError,
    NumericError,
    ShapeMismatchError,
    TripnormError,
)
from .evaluation import EvalReport, Model, ablate_exponent, patch_size_sweep, run_evaluation
from .inference import estimate_normals, msae, pca_baseline_normals
from .losses import normal_loss, triplet_loss, weight_fn
from .nn import SGD, EncoderNet, EstimatorNet, PlateauScheduler
from .patches import AlignedPatch, PatchConfig, preprocess_patch
from .profiles import get_profile
from .shapes import generate_shape
from .spatial import SpatialIndex, build_index
from .training import DatasetSpec, ShapeSpec, TrainConfig, build_dataset, train_encoder, train_estimator
from .triplets import TripletConfig, sample_triplets

__all__ = [
    "BACKEND", "AlignedPatch", "ConfigHashError", "CorruptFileError", "DatasetSpec",
    "DegeneratePatchError", "EncoderNet", "EstimatorNet", "EvalReport", "MalformedFileError",
    "Model", "NumericError", "PatchConfig", "PlateauScheduler", "PointCloud", "SGD",
    "ShapeMismatchError", "ShapeSpec", "SpatialIndex", "TrainConfig", "TripletConfig",
    "TripnormError", "ablate_exponent", "add_gaussian_noise", "bbox_diagonal", "build_dataset",
    "build_index", "estimate_normals", "generate_shape", "get_profile", "load_cloud", "msae",
    "normal_loss", "patch_size_sweep", "pca_baseline_normals", "preprocess_patch",
    "run_evaluation", "sample_triplets", "save_cloud", "train_encoder", "train_estimator",
    "triplet_loss", "weight_fn",
]
