"""Transfer operators and the self-consistent fixed point."""
