"""Mixing-based data augmentation for wireless-sensing point-cloud datasets.

The pipeline simulates a range profile per frame (a Gaussian mixture over
discrete range bins), mixes frame pairs through the profiles' intersections,
bootstrap-resamples weighted range candidates, reconstructs angles by kernel
averaging, and averages labels. On top of that sit baseline augmentations
(random global scaling, zero-pad/resample stacking) and a self-training loop
for unsupervised domain adaptation.
"""

__version__ = "0.1.0"

from ._backend import BACKEND, available_backends, get_kernels
from .errors import DataError, OutOfRangeError, WixupError
from .frames import (
    CLASS,
    KEYPOINTS,
    ClassProbs,
    Dataset,
    DatasetMeta,
    Frame,
    Keypoints,
    SynthConfig,
    generate_synthetic,
    make_dataset,
    one_hot,
    read_dataset,
    write_dataset,
)
from .mixer import (
    Candidate,
    Intersection,
    MixConfig,
    assign_angles,
    bootstrap_sample,
    build_candidates,
    find_intersections,
    mix_frames,
    mix_labels,
)
from .pipeline import (
    AugmentConfig,
    PairPlan,
    augment,
    cga_frame,
    enumerate_pairs,
    stable_seed,
    stack_frame,
    wixup_output_size,
)
from .profile import (
    ProfileConfig,
    RangeProfile,
    SphericalPoint,
    build_profile,
    cart_to_spherical,
    range_to_bin,
    spherical_to_cart,
)
from .selftrain import (
    KnnPredictor,
    Predictor,
    UdaConfig,
    UdaReport,
    accuracy,
    knn_predictor,
    mle,
    run_uda,
)

__all__ = [
    "BACKEND",
    "available_backends",
    "get_kernels",
    "DataError",
    "OutOfRangeError",
    "WixupError",
    "CLASS",
    "KEYPOINTS",
    "ClassProbs",
    "Dataset",
    "DatasetMeta",
    "Frame",
    "Keypoints",
    "SynthConfig",
    "generate_synthetic",
    "make_dataset",
    "one_hot",
    "read_dataset",
    "write_dataset",
    "Candidate",
    "Intersection",
    "MixConfig",
    "assign_angles",
    "bootstrap_sample",
    "build_candidates",
    "find_intersections",
    "mix_frames",
    "mix_labels",
    "AugmentConfig",
    "PairPlan",
    "augment",
    "cga_frame",
    "enumerate_pairs",
    "stable_seed",
    "stack_frame",
    "wixup_output_size",
    "ProfileConfig",
    "RangeProfile",
    "SphericalPoint",
    "build_profile",
    "cart_to_spherical",
    "range_to_bin",
    "spherical_to_cart",
    "KnnPredictor",
    "Predictor",
    "UdaConfig",
    "UdaReport",
    "accuracy",
    "knn_predictor",
    "mle",
    "run_uda",
]
