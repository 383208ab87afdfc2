"""Densities on singularity-graded grids."""
