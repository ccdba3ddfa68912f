"""Regularization parameter selection."""
