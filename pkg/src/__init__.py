"""
Safety-Filtered Grid-Forming Converter Simulation
Main package initialization
"""

__version__ = "1.0.0"
__author__ = "Power Electronics Control Group"
__description__ = "CBF/CLF safety filter for current limiting in grid-forming converters"
