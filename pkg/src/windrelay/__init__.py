"""Phasor-domain fault study and adaptive zone-2 distance protection for a
multi-terminal line with wind-farm in-feed."""

from windrelay.phasor import Phasor, SequenceSet, ThreePhaseSet

__version__ = "0.1.0"

__all__ = ["Phasor", "SequenceSet", "ThreePhaseSet", "__version__"]
