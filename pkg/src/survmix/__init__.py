"""Imbalanced-class survival pipeline: cleaning, rebalancing, an ensemble of
score-based classifiers blended into a two-component mixture with an
abstention band, and survival analysis (Kaplan-Meier, log-rank, Cox
proportional hazards) on the predicted groups."""

__version__ = "0.1.0"
