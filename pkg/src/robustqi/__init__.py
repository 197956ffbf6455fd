"""Explicit robust quasi-isometric embeddings of free groups and semigroups,
with sampled certification of their contraction and ping-pong estimates."""

__version__ = "0.1.0"
