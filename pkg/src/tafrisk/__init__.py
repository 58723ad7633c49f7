"""Workbench for atrial-fibrillation risk models in thyrotoxicosis cohorts.

Four layers: cohort synthesis and I/O, a 180-variant preprocessing grid,
nine hand-rolled classifiers compared under stratified cross-validation,
and downstream artifacts (an integer-points risk questionnaire and
diagnosis-pathway graphs).
"""

__version__ = "0.1.0"

from .errors import ValidationFailure, WorkbenchError

__all__ = ["WorkbenchError", "ValidationFailure", "__version__"]
