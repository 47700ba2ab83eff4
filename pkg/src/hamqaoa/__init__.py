"""Layered four-driver variational circuits for 2-local Hamiltonians."""
