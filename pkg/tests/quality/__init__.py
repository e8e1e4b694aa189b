"""
Acceptance-scale checks of the numerical claims; run with --runslow.
"""
