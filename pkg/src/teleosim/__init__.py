"""Deterministic teleoperation simulator: impedance-controlled leader and
follower with delayed transport, target-intention estimation, and contact."""

__version__ = "0.1.0"
