"""Two-stream visuotactile simulation, decoding and fusion classification."""

__version__ = "0.1.0"
