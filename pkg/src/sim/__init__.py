"""Numeric simulation and stability probing"""
