"""Non-intrusive reduced-order modeling toolkit."""
