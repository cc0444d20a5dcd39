"""
Utility functions and helpers for NarrativeMap
"""
