"""Orientation distributions for objects with known CAD models."""
