"""
Test suite for the leader-polarization package.
"""
