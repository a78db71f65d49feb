"""Effects of Lie groupoid arrows on transversal tangent spaces."""

__version__ = "0.1.0"
