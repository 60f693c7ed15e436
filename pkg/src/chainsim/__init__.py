"""Two-echelon supply chain simulation with certified information sharing."""

__version__ = "0.1.0"
