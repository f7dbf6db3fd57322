"""Numerical laboratory for Ricci flow, Perelman's functionals and Fisher-information identities."""

__version__ = "0.1.0"
