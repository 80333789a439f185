"""Distributed conductance testing on a simulated CONGEST network."""
