"""Finite-horizon Furstenberg families, symbolic and circle dynamics, and checkers."""
