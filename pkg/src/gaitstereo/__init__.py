"""Stereo-vision gait analytics.

A synthetic walker generates ground truth and sensor observations; the
analysis pipeline recovers the 17 gait parameters from stereo marker
detections and heel FSR traces, and a small Transformer identifies walkers
from their gait sequences.
"""
__version__ = "0.1.0"
