"""Robust objective."""
