"""
Plots, themes and console tables for NarrativeMap
"""
