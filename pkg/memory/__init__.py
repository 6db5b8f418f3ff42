"""Domain core: patterns, detector simulation, learning, Ising recall, classification and Hough banking."""

from memory.errors import TrackRecallError

__all__ = ['TrackRecallError']
