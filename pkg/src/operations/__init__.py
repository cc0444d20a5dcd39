"""
Numerical operations for NarrativeMap
"""
