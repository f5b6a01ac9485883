"""Numerical checks on the gain set: L2-gain, Riccati, Lyapunov, ISS and stability margins."""

from .certify import GainCertificate, certify

__all__ = ["GainCertificate", "certify"]
