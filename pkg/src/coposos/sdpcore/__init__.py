"""Standard-form block semidefinite programming.

Data model (`BlockSdp`), a primal-dual interior-point solver with
Nesterov-Todd scaling inside a homogeneous self-dual embedding (`solve`),
and feasible-region ball diagnostics (`sandwich_diagnostics`).
"""

from .model import (
    BlockSpec,
    BlockSdp,
    SdpBuilder,
    SdpSolution,
    SdpStatus,
    export_sparse,
    parse_sparse,
    nonneg_block,
    psd_block,
    smat,
    svec,
)
from .solver import solve
from .diagnostics import SandwichReport, sandwich_diagnostics

__all__ = [
    "BlockSpec",
    "BlockSdp",
    "SdpBuilder",
    "SdpSolution",
    "SdpStatus",
    "SandwichReport",
    "export_sparse",
    "parse_sparse",
    "nonneg_block",
    "psd_block",
    "sandwich_diagnostics",
    "smat",
    "svec",
    "solve",
]
