"""nlslab: numerical lab for blow-up in the focusing nonlinear Schrödinger equation."""

__version__ = "0.1.0"
