"""Prometheus metrics, stage timing, and logging setup."""
