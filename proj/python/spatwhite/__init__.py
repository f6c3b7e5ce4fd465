"""Adjacency-constrained spatial whitening for quantized distributed estimation."""

from spatwhite._core import *  # noqa: F401,F403
