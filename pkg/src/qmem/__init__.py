"""Design and simulation toolkit for phononic-crystal acoustic quantum
memories coupled to superconducting circuits."""

__version__ = "0.1.0"
