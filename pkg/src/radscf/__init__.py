"""Unrestricted Hartree-Fock engine and radical qubit screener."""
