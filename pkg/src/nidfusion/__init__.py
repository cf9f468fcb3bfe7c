"""nidfusion: surfel mapping with information-gated frame fusion."""

__version__ = "0.1.0"
