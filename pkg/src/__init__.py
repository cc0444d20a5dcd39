"""
NarrativeMap - narrative-structured text embeddings for news corpora
"""

__version__ = "1.0.0"
__author__ = "makalin"
__description__ = "Actant extraction, narrative embeddings and cluster reports for news corpora"
