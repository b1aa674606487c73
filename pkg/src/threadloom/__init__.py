"""Threadloom: thread-based curation of scientific literature.

Links reader highlights to citation contexts and referenced papers,
organizes them into persistent hierarchical threads, suggests where new
content belongs, and recommends further papers per thread via citation
coverage.
"""

from .engine import Engine, EngineConfig

__version__ = "0.1.0"

__all__ = ["Engine", "EngineConfig", "__version__"]
