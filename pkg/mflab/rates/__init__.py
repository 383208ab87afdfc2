"""Decay-rate measurement and sequence bounds."""
