"""Quantized Robust Least Squares."""
