"""
Command-line tools: report rendering, verification suites and the CLI.
"""
