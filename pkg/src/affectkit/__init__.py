"""Affective classification toolkit for short happy-moment texts.

Feature extraction (POS, lexicon, profile, embedding), logistic regression,
gradient-boosted trees and a multi-region text CNN, cross-validation and
self-training drivers, and lexico-syntactic pattern statistics.
"""

__version__ = "0.1.0"

from .corpus import CONCEPTS, MomentRecord, ProfileRecord, FoldPlan  # noqa: F401
