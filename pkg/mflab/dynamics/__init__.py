"""Coupled intermittent map families."""
