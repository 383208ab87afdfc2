"""Core configuration, errors and data models for mflab."""
