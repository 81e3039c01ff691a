"""Influence maximization in social networks, with tools for preference
modelling, preference aggregation and network formation."""

from .errors import CapExceeded, ContractError, ParseError
from .graph import Graph, LiveGraph, load_edge_list

__all__ = ["CapExceeded", "ContractError", "Graph", "LiveGraph", "ParseError", "load_edge_list"]
__version__ = "0.1.0"
