"""
Architecture tests for gdefinetti.

Exceptions, configuration lookup, the container, structured logging and
report validation and rendering.
"""
