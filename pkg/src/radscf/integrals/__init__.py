"""Analytic Gaussian integrals: Boys function, S, T, V and electron repulsion."""

from .tables import (
    IntegralTables,
    boys,
    build_integral_tables,
    dump_tables,
    eri,
    kinetic,
    load_tables,
    nuclear_attraction,
    overlap,
)

__all__ = [
    "IntegralTables",
    "boys",
    "build_integral_tables",
    "dump_tables",
    "eri",
    "kinetic",
    "load_tables",
    "nuclear_attraction",
    "overlap",
]
