"""Retrieval-augmented question answering over a PubMed-style corpus."""

__version__ = "0.1.0"
