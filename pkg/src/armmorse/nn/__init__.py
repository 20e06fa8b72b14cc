"""Minimal CNN engine: tensor ops, layer chain, model bundle and file format."""
