"""Ghost-aircraft detection over a surveillance knowledge graph."""

__version__ = "0.1.0"
