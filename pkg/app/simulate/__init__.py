"""Synthetic instance generation."""
