"""
Tests for the covariant QEC toolkit.
"""
