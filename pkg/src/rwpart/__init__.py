"""Graph partitioning for parallel random walks."""

__version__ = "0.1.0"
