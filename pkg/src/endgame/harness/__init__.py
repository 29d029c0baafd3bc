"""Experiment orchestration: configuration, replication scheduling,
summary statistics, CSV and plot-data emission, and the CLI."""
