"""Hypergraph node classification with counterfactual structure explanations."""

__version__ = "0.1.0"
