"""Articulatory vocoder - Tests Package."""
