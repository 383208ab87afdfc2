"""Application orchestration for mflab."""
