"""Nonlocal capillarity numerics: contact angles, singular interaction
integrals and a discrete droplet minimizer."""

__version__ = "0.1.0"
