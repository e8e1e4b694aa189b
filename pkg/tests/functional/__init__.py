"""
Functional tests for the gdefinetti command line.
"""
