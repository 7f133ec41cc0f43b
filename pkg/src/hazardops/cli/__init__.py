"""Command-line surface over the data, training and evaluation pipeline."""

from hazardops.cli.config import RunConfig, help_text, load_config, parse_config
from hazardops.cli.main import main

__all__ = ["RunConfig", "help_text", "load_config", "main", "parse_config"]
