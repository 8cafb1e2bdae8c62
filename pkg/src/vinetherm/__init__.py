"""Thermally actuated growing-robot models: pouch-muscle mechanics, phase-change
pressure, radiative heating, chain kinematics and a grow-and-steer loop."""

__version__ = "0.1.0"
