"""Convolution structures in perturbative and constructive field theory, at desk scale."""

__version__ = "0.1.0"

__all__ = ["effective", "fields", "hierarchy", "hopf", "laurent", "renorm", "sequences"]
