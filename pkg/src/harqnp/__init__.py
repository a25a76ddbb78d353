"""Decodability prediction for short codes from partially received blocks.

Most powerful (density-ratio) tests and competing predictors, evaluated by
Monte-Carlo campaigns over ML, bounded-distance and sum-product decoding.
"""

from .channel import BiAwgnChannel
from .codes import BinaryLinearCode, CrcSpec, MessageSet, construct_regular_ldpc, valid_message_set
from .config import CampaignConfig
from .estimators import ThresholdPredictor
from .roc import RocCurve, dominance_report, roc_from_scores

__version__ = "0.1.0"

__all__ = [
    "BiAwgnChannel", "BinaryLinearCode", "CrcSpec", "MessageSet", "construct_regular_ldpc",
    "valid_message_set", "CampaignConfig", "ThresholdPredictor", "RocCurve", "dominance_report",
    "roc_from_scores",
]
