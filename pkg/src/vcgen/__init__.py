"""Verification-condition generation for the Lyapunov proof rules"""
