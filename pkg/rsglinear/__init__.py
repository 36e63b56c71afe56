"""
rsglinear - Command-line toolkit for linear-family long-horizon forecasting

    rsglinear train --dataset ili --model rs_glinear --input 96 --horizon 60

The engine lives in `rsg_core`; this package adds run configuration,
report exports and the CLI.
"""

__version__ = "1.0.0"

from .config import RunConfig

__all__ = ["RunConfig"]
