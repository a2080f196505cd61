"""Periodic Lagrange finite elements, L2 projections and an energy-conserving RLW solver."""
