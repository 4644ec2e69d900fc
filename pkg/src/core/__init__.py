"""Exact symbolic core: rationals, polynomials, exponential enclosures"""
