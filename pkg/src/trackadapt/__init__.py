"""trackadapt - motion-aware mask selection, error recovery and memory policies for segmenter-based trackers."""

__version__ = "0.1.0"
