"""
Shared infrastructure: errors, logging, configuration and stage monitoring.
"""
