"""Markovian master equations for weak periodic system-reservoir coupling."""

from . import algebra, bath, floquet, generators, oracle, spectral, steering
from .exceptions import PeriodicLindbladError
from .generators import GklsGenerator, build_adiabatic_generator, build_wcl_generator
from .spectral import SystemModel, decompose

__version__ = "0.1.0"

__all__ = [
    "algebra",
    "bath",
    "floquet",
    "generators",
    "oracle",
    "spectral",
    "steering",
    "PeriodicLindbladError",
    "GklsGenerator",
    "SystemModel",
    "build_adiabatic_generator",
    "build_wcl_generator",
    "decompose",
]
