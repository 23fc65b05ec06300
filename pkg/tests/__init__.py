"""v2ipower test suite."""
