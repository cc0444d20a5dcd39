"""
Core data types, endpoints and caches for NarrativeMap
"""
