"""Switched-system models: types, text format, checks and rewrites"""
