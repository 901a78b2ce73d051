"""Glue from any supported input to profiles and distances."""
from __future__ import annotations

from hypermetric import congruence
from hypermetric.core import (
    DistanceMatrix,
    ExplicitHypergraph,
    ProfileTable,
    distance_matrix_from_table,
    profile_table,
)


def profile_table_of(source, jobs: int = 1) -> ProfileTable:
    if isinstance(source, ProfileTable):
        return source
    if isinstance(source, ExplicitHypergraph):
        return profile_table(source)
    if isinstance(source, congruence.ImplicitHypergraph):
        return congruence.analytic_profile_table(source, jobs=jobs)
    return congruence.analytic_profile_table(congruence.build(source), jobs=jobs)


def distance_matrix_of(source, jobs: int = 1) -> DistanceMatrix:
    if isinstance(source, DistanceMatrix):
        return source
    return distance_matrix_from_table(profile_table_of(source, jobs=jobs), jobs=jobs)
