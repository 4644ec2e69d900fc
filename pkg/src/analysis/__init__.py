"""Verification runs, reports and the command-line interface"""
