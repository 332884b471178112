from .norms import (
    derivative_linf,
    inner,
    l2_norm,
    linf_norm,
    norm,
    sobolev_norm,
    spectral_l1_norm,
)

__all__ = [
    "derivative_linf",
    "inner",
    "l2_norm",
    "linf_norm",
    "norm",
    "sobolev_norm",
    "spectral_l1_norm",
]
