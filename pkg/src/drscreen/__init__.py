"""Diabetic-retinopathy screening toolkit: preprocessing, dense-block
classifier, training protocol, clinical metrics and a screening service."""

__version__ = "0.1.0"
