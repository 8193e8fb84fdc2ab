"""Fast multiscale spectral segmentation over quad-tree superpixels."""

from .affinity import (
    AffinityParams,
    build_H,
    degree_and_laplacian,
    edge_map,
    pixel_W,
    pixel_affinity,
    superpixel_W_approx,
    superpixel_W_exact,
)
from .clustering import FuzzyResult, fuzzy_cmeans, kmeans
from .eigen import EigenResult, smallest_k, smallest_k_auto, smallest_k_dense
from .errors import (
    ArgumentError,
    CapacityError,
    ConfigError,
    ConvergenceError,
    FastspecError,
    FormatError,
    IsolatedVertexError,
)
from .fsc import fsc
from .image_io import GrayImage, LabelMap, load_gray, load_mask, write_labels
from .metrics import acc, dice, rand_index
from .mfsc import mfsc
from .ncut_baseline import ncut
from .quadtree import QuadNode, QuadTree, decompose, nodes_at_level, superpixel_stats

__version__ = "0.1.0"

__all__ = [
    "AffinityParams",
    "ArgumentError",
    "CapacityError",
    "ConfigError",
    "ConvergenceError",
    "EigenResult",
    "FastspecError",
    "FormatError",
    "FuzzyResult",
    "GrayImage",
    "IsolatedVertexError",
    "LabelMap",
    "QuadNode",
    "QuadTree",
    "acc",
    "build_H",
    "decompose",
    "degree_and_laplacian",
    "dice",
    "edge_map",
    "fsc",
    "fuzzy_cmeans",
    "kmeans",
    "load_gray",
    "load_mask",
    "mfsc",
    "ncut",
    "nodes_at_level",
    "pixel_W",
    "pixel_affinity",
    "rand_index",
    "smallest_k",
    "smallest_k_auto",
    "smallest_k_dense",
    "superpixel_W_approx",
    "superpixel_W_exact",
    "superpixel_stats",
    "write_labels",
    "__version__",
]
