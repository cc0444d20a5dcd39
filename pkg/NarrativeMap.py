#!/usr/bin/env python3
"""
NarrativeMap - narrative-structured text embeddings for news corpora
"""

from src.cli import main

if __name__ == "__main__":
    main()
