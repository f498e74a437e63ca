"""lesionkit: lesion localization by an ensemble of segmenters plus
structural descriptors and a histogram/PCA/LDA classifier."""

__version__ = "0.1.0"
