"""Configuration, presets, persistence, diagnostics, experiments and the CLI."""
