"""Steklov and Robin isospectral pairs from Sunada-type tile gluings.

Submodules are imported on demand; importing the package itself is cheap.
"""

__version__ = "0.1.0"
