"""Pulse-shaped control of open two-level quantum systems."""
