"""
Unit tests for the gdefinetti numerics.

Each module is exercised in isolation against closed forms, exact values
and the truncated Fock-space oracle.
"""
