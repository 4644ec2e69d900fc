"""Switched-System Stability Checker Package"""
