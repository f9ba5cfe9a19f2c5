"""Similarity clustering of IoT nodes with watchdog surveillance and consensus
voting against false-data-injection attackers."""

__version__ = "0.1.0"
