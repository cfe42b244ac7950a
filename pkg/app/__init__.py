"""
FD-MIMO Elevation Beamforming Simulator
Array patterns, 3D channel models, spatial correlation and downtilt optimization
"""

__version__ = "1.0.0"
__description__ = "FD-MIMO elevation beamforming simulator"
