"""Real-time pipe burst localization from streaming nodal pressures."""

__version__ = "0.1.0"
