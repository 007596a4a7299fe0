"""Supervised texture segmentation with four families of window features.

Grey-level co-occurrence (Haralick) features, run-length features, Gaussian
Markov random field parameters and Gabor filter energies are computed on a
sliding window, classified per pixel with a Gaussian Bayes rule, and scored
against ground truth with per-texture Bhattacharyya distances.
"""

from .classifier import ClassModel, TrainedSegmenter, classify, load_model, save_model, train
from .errors import DataError, DegenerateWindowError, NumericalError, SingularMatrixError, TexsegError
from .image import GrayImage, LabelMap, WindowSpec, load_image, load_label_map, save_image, save_label_map
from .mosaic import MosaicSpec, preset_mosaic, reference_images, synthesize_mosaic
from .pipeline import EXTRACTORS, RunConfig, compare, extract_features, segment_image, train_segmenter
from .quality import QualityReport, bhattacharyya, quality_report

__version__ = "0.1.0"

__all__ = [
    "ClassModel", "TrainedSegmenter", "classify", "load_model", "save_model", "train",
    "DataError", "DegenerateWindowError", "NumericalError", "SingularMatrixError", "TexsegError",
    "GrayImage", "LabelMap", "WindowSpec", "load_image", "load_label_map", "save_image", "save_label_map",
    "MosaicSpec", "preset_mosaic", "reference_images", "synthesize_mosaic",
    "EXTRACTORS", "RunConfig", "compare", "extract_features", "segment_image", "train_segmenter",
    "QualityReport", "bhattacharyya", "quality_report",
]
