"""Version information for nsdlab."""

__version__ = "0.3.0"
__author__ = "nsdlab contributors"
__license__ = "MIT"
