"""Closed-form and robust estimators."""
