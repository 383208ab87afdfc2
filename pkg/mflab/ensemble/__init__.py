"""Finite-N mean-field particle system."""
