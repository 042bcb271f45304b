"""Budgeted atrial-fibrillation detection: ECG windows to AF/non-AF decisions."""

__version__ = "0.1.0"
