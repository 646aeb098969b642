"""Predicting party choice from political likes: sparse multinomial models,
rule classifiers, non-response tests and poll-weighted forecasts."""

__version__ = "0.1.0"
