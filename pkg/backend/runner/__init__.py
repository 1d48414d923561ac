"""
Run configuration, orchestration and artifacts.

This package contains:
- settings.py: RunConfig schema, config loading, CLI flag parsing
- exports.py: design.json, CSV tables, VTK files, summary.json
- orchestrate.py: run / evaluate / post pipelines
- bench.py: parameter studies (Gaussian count, epsilon, threshold, mesh, timing)
"""
