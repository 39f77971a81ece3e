"""Discrete-event simulator of the VFPe controlled-mobility protocol."""

__all__ = ["config", "models", "engine", "campaign"]
