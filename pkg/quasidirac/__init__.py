"""Quasi-Dirac delay amplitude distributions and superoscillatory transmission."""
