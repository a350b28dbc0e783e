"""Detection and automated repair of systematic errors in image datasets.

Systematic corruption (fixed lines, watermark-like patches) is predictable,
so high-capacity models overfit it.  This library trains a VAE whose latent
space is split into a clean subspace and a dirty subspace, supervised by a
small trusted set of inlier/outlier labels, with a distance-correlation
penalty keeping the subspaces independent.  Repairs decode the clean subspace
alone.  Reference baselines, synthetic corruption benchmarks, metrics, and a
reproducible experiment CLI are included.
"""

from .autodiff import Tape, Tensor, stop_gradient
from .data import (
    CleanDataset,
    ConfigError,
    CorruptedDataset,
    ErrorClass,
    FormatError,
    TrustedSet,
    build_error_classes,
    corrupt,
    generate_shapes,
    load_bundle,
    load_idx,
    load_matrix,
    sample_trusted_set,
    save_bundle,
)
from .distcorr import DegenerateBatch, distance_correlation, double_centered_distances
from .distributions import (
    DiagGaussian,
    IsotropicPrior,
    bernoulli_recon_nll,
    gaussian_recon_nll,
    kl_bernoulli,
    kl_diag_vs_isotropic,
    reparam_sample,
)
from .evaluation import (
    DEFAULT_GAMMA,
    EvalReport,
    UndefinedMetric,
    aggregate_reports,
    avpr,
    detect,
    evaluate,
    iwae_bound,
    smse,
)
from .models import (
    MODEL_KINDS,
    CleanSubspaceVAE,
    ClsvaeHyper,
    ConditionalVAE,
    CvaeHyper,
    MixturePriorVAE,
    VaegmmHyper,
    VaeL2Hyper,
    WeightDecayVAE,
    build_model,
    imbalance_weight,
    load_checkpoint,
    model_from_checkpoint,
    save_checkpoint,
)
from .nn import Adam, DenseLayer, TrainingDiverged, mlp_forward
from .training import Schedule, TrainConfig, resume, train, train_model

__version__ = "0.1.0"
