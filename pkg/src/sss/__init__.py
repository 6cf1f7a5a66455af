"""Sampling set selection on graphs."""
