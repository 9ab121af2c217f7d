"""Texture-descriptor pipeline for two-stage thyroid ultrasound nodule
classification: preprocessing, DCT/LDCT/ILBP/BPD-LDCT features, SMOTE
oversampling, an SMO-trained RBF SVM, and cross-validated evaluation.
"""

__version__ = "0.1.0"

from .config import PipelineConfig
from .descriptors import (
    DESCRIPTOR_NAMES,
    BpdLdctDescriptor,
    DctDescriptor,
    IlbpDescriptor,
    LdctDescriptor,
    bpd_ldct,
    dct2,
    dct_global,
    feature_length,
    idct2,
    ilbp_code,
    ilbp_histogram,
    ldct,
    make_descriptor,
    zigzag_order,
    zigzag_select,
)
from .evaluation import (
    ConfusionMatrix,
    EvalReport,
    FoldResult,
    MetricSet,
    compute_metrics,
    confusion,
    run_experiment,
)
from .images import load_image, read_pgm, resize_bilinear, write_pgm
from .manifest import Manifest, ManifestEntry, load_manifest, stage_labels
from .model_selection import TrainConfig, grid_search, shuffled_kfold, stratified_kfold
from .preprocessing import (
    NodulePreprocessor,
    binarize,
    clahe,
    extract_roi,
    normalize_patch,
    otsu_threshold,
    preprocess_image,
    ts_clahe,
)
from .sampling import Smote, smote
from .svm import SmoSvc, kkt_report, load_model, rbf_kernel, save_model

__all__ = [
    "__version__",
    "PipelineConfig",
    "DESCRIPTOR_NAMES",
    "BpdLdctDescriptor",
    "DctDescriptor",
    "IlbpDescriptor",
    "LdctDescriptor",
    "bpd_ldct",
    "dct2",
    "dct_global",
    "feature_length",
    "idct2",
    "ilbp_code",
    "ilbp_histogram",
    "ldct",
    "make_descriptor",
    "zigzag_order",
    "zigzag_select",
    "ConfusionMatrix",
    "EvalReport",
    "FoldResult",
    "MetricSet",
    "compute_metrics",
    "confusion",
    "run_experiment",
    "load_image",
    "read_pgm",
    "resize_bilinear",
    "write_pgm",
    "Manifest",
    "ManifestEntry",
    "load_manifest",
    "stage_labels",
    "TrainConfig",
    "grid_search",
    "shuffled_kfold",
    "stratified_kfold",
    "NodulePreprocessor",
    "binarize",
    "clahe",
    "extract_roi",
    "normalize_patch",
    "otsu_threshold",
    "preprocess_image",
    "ts_clahe",
    "Smote",
    "smote",
    "SmoSvc",
    "kkt_report",
    "load_model",
    "rbf_kernel",
    "save_model",
]
