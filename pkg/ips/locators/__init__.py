"""
Locators Package
Online-stage matchers; importing the package registers them with LocatorFactory
"""

from ips.locators.knn_locator import (  # noqa: F401
    KNearestNeighborLocator,
    NearestNeighborLocator,
    WeightedKNearestNeighborLocator,
    locate,
    locate_knn,
    locate_nn,
    locate_wknn,
    nearest_neighbors,
    wknn_weights,
)
from ips.locators.cross_validation import cross_validate  # noqa: F401
