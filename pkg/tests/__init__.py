"""
Test package for the NRS video reconstruction toolkit.
"""
