"""Averaging-method periodic solutions of piecewise-smooth systems."""
