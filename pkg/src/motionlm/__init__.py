"""Desk-scale motion tokenization, motion-message language modeling, and
evaluation metrics, runnable end-to-end on synthetic motion data."""

__version__ = "0.1.0"
