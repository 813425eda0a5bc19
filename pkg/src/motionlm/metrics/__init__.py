from .fid import GaussianStats, fid
from .retrieval import retrieval_metrics, diversity, l1div
from .recon import recon_metrics, procrustes_align
from .beats import extract_motion_beats, bas, beat_f1, merge_beats
from .textmetrics import bleu, rouge_l, CiderScorer, text_metrics, word_tokens
from .embedders import (
    OracleEmbedder, RandomProjectionEmbedder, velocity_stats_features,
    classify_motion_family, classify_caption_family,
)
from .report import MetricReport

__all__ = [
    "GaussianStats", "fid", "retrieval_metrics", "diversity", "l1div",
    "recon_metrics", "procrustes_align", "extract_motion_beats", "bas",
    "beat_f1", "merge_beats", "bleu", "rouge_l", "CiderScorer",
    "text_metrics", "word_tokens", "OracleEmbedder",
    "RandomProjectionEmbedder", "velocity_stats_features",
    "classify_motion_family", "classify_caption_family", "MetricReport",
]
