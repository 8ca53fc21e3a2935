"""Tests for hevi_slice
"""
