"""Exact decision of real-arithmetic verification conditions"""
