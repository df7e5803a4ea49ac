"""Surface-water extent mapping from oblique street-monitoring video.

Semi-supervised water segmentation from sparse seed labels, monoplotting
camera resection against a DEM, pixel georeferencing, and hydraulic
time-series indices (pixel/projected SOFI, smoothing, phase correlation,
lag estimation).
"""

__version__ = "0.1.0"
