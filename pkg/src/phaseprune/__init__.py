"""Complex-valued networks and phase/amplitude pruning."""
