"""Visual model checking of natural-language image queries."""

__version__ = "0.1.0"
