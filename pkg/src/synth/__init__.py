"""Numeric candidate synthesis; results are untrusted until checked"""
