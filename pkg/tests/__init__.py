"""
gdefinetti test suite
"""
