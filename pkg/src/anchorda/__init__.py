"""Anchor-task assisted domain adaptation on procedural height-field scenes."""

__version__ = "0.1.0"
