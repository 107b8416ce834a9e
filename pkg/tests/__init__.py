"""
Test package for proxdyn_helper.
"""