"""Non-vanishing of holomorphic Poincare series on the SU(p,q) matrix ball."""

__version__ = "0.1.0"
