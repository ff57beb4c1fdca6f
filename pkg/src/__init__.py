"""
DOPING - Generative data augmentation for unsupervised anomaly detection.
"""

__version__ = "1.0.0"
__author__ = "DOPING Team"
__description__ = "Adversarial-autoencoder augmentation of infrequent normal samples for Isolation Forest"
