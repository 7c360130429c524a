"""Clustering of high-dimensional data whose cluster signal sits in contiguous blocks."""

__version__ = "0.1.0"

from .baselines import IFPCALite, KMeans2, SpectralBaseline, ifpca_lite, kmeans2, spectral_baseline
from .blocks import Block, BlockSet, TensorBlock, dissimilarity, enumerate_blocks, expand, step_down
from .cfa import CFAPCA, cfa_pca, cfa_select, cross_scan
from .exceptions import (
    BlockClustError,
    ConfigurationError,
    DegenerateSpectrumError,
    InfeasibleConfigurationError,
    NoFeaturesSelectedError,
    ParseError,
    UndefinedLossError,
)
from .io import DataMatrix, difference_series, load_matrix, save_matrix
from .ma import MAPCA, ma_pca, moving_average_matrix
from .metrics import hamming_clustering, hamming_signal
from .minimax import classify, eval_boundaries, phase_grid
from .recovery import PostClusteringRecovery, aligned_scan, identify_blocks
from .simulation import SimConfig, generate_dataset, generate_signal, run_sweep
from .tuning import TuningGrid, tune_cfa, tune_ma
