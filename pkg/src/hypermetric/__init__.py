"""Hypergraph metrics modulo equivalence and their analyses."""
