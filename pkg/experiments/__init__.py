"""
Named experiments driven by the command line.
"""
