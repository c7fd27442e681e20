"""Groupoid quantization of the Poisson pencil on CP_n."""

from .kernel import INF, DiscreteGroupoid, Report
from .cpn import Above, At, Below, Params

__all__ = ["INF", "DiscreteGroupoid", "Report", "Params", "Below", "At", "Above"]
__version__ = "0.1.0"
