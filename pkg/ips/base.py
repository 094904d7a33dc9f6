"""
Base Positioning Framework
Abstract classes and the registry used to plug locators and fingerprint stores together
"""

from abc import ABC, abstractmethod
from typing import Dict, List, Sequence, Type
import logging

from ips.errors import ConfigurationError
from schemas.positioning_schema import (
    Algorithm, FingerprintRecord, LocateConfig, Neighbor, Position
)


class BaseLocator(ABC):
    """
    Abstract base class for online-stage matchers
    Finds the nearest reference points and turns them into a position estimate
    """

    ALGORITHM: Algorithm = None

    def __init__(self, config: LocateConfig):
        self.config = config
        self.logger = logging.getLogger(f"{self.__class__.__name__}")

    @property
    def k(self) -> int:
        return self.config.effective_k

    @abstractmethod
    def estimate(self, neighbors: List[Neighbor]) -> Position:
        """
        Combine the selected neighbours into a single position
        """
        pass

    def locate(self, radio_map, query: Sequence[float]) -> Position:
        """
        Locate a query fingerprint against a radio map
        """
        neighbors = radio_map.nearest_neighbors(query, self.k)
        position = self.estimate(neighbors)
        self.logger.debug(
            f"{self.config.label}: {len(neighbors)} neighbours -> ({position.x:.3f}, {position.y:.3f})"
        )
        return position


class BaseFingerprintStore(ABC):
    """
    Abstract base class for fingerprint persistence
    Handles saving and loading the X, Y, AP1..APn fingerprint table
    """

    def __init__(self, location):
        self.location = location
        self.logger = logging.getLogger(f"{self.__class__.__name__}")

    @abstractmethod
    def save(self, records: List[FingerprintRecord]) -> None:
        """
        Replace the stored table with the given records
        """
        pass

    @abstractmethod
    def load(self) -> List[FingerprintRecord]:
        """
        Read every record, in stored order
        """
        pass

    def append(self, records: List[FingerprintRecord]) -> int:
        """
        Append records and return the new total
        """
        existing = self.load() if self.exists() else []
        combined = existing + list(records)
        self.save(combined)
        return len(combined)

    def count(self) -> int:
        return len(self.load()) if self.exists() else 0

    @abstractmethod
    def exists(self) -> bool:
        pass


class LocatorFactory:
    """
    Factory for creating locators by algorithm
    """

    _locators: Dict[Algorithm, Type[BaseLocator]] = {}

    @classmethod
    def register_locator(cls, algorithm: Algorithm, locator_class: Type[BaseLocator]):
        """Register a locator for an algorithm"""
        cls._locators[Algorithm(algorithm)] = locator_class

    @classmethod
    def available(cls) -> List[Algorithm]:
        return sorted(cls._locators, key=lambda a: a.value)

    @classmethod
    def create_locator(cls, config: LocateConfig) -> BaseLocator:
        """
        Create the locator that implements config.algorithm
        """
        locator_class = cls._locators.get(Algorithm(config.algorithm))
        if not locator_class:
            raise ConfigurationError(f"No locator registered for algorithm: {config.algorithm}")
        return locator_class(config)


def locator_component(algorithm: Algorithm):
    """
    Decorator to automatically register locators
    """
    def decorator(cls):
        cls.ALGORITHM = Algorithm(algorithm)
        LocatorFactory.register_locator(algorithm, cls)
        return cls
    return decorator
