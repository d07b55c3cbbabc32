"""Tools module: output writers and run configuration"""
from .output_tools import OutputTools

__all__ = ['OutputTools']
