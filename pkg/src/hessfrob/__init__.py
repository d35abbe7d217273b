"""Hessian, information and toric geometry checks for Monge-Ampere domains."""

__version__ = "0.1.0"
