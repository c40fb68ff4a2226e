"""Central tolerance and default-parameter record."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    group: float = 1e-12
    commutator: float = 1e-7
    oracle_rel: float = 1e-9
    translation: float = 1e-11
    dilation: float = 1e-10
    rotation: float = 1e-10
    rotor: float = 1e-10
    pde_abs: float = 1e-4
    pde_order: tuple = (1.7, 2.3)
    subharmonic: float = 1e-6
    subharmonic_borderline: float = 1e-5
    identity_rel: float = 1e-4
    sphere_dilation: float = 1e-8
    moment_rel: float = 1e-9
    singular_rel: float = 1e-12
    decay_slack: tuple = (0.1, 0.15, 0.2)
    hp_ratio: float = 3.0
    tail_share: float = 0.2
    scale_ratio: float = 0.10

    def scaled(self, factor: float) -> "Tolerances":
        """Multiply every absolute/relative tolerance by ``factor``.

        Ranges (convergence orders, decay slacks) and ratio bounds keep
        their meaning and are left alone.
        """
        keep = {"pde_order", "decay_slack", "hp_ratio", "tail_share", "scale_ratio"}
        changes = {
            f.name: getattr(self, f.name) * factor
            for f in dataclasses.fields(self)
            if f.name not in keep
        }
        return dataclasses.replace(self, **changes)


DEFAULT_TOLERANCES = Tolerances()

# finite-difference step defaults
FD_STEP = 1e-4
MAX_FD_HOMDEG = 4

# tiling
TRUNCATION_DEPTH = 26

# atoms
LAMBDA = 8.0
OUTER_FACTOR = 64.0
