"""Nonsmooth solvers."""
