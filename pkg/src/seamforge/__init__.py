"""Mesh-native UV seam toolkit: seam chains, canonical ordering, masked decoding, atlas metrics."""

__version__ = "0.1.0"
