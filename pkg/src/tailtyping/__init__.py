"""Frequency-stratified evaluation toolkit for ultra-fine entity typing.

The package estimates how often entity mentions occur in the wild (local
corpus counting plus cached search-API hit snapshots), measures how salient
each entity is inside a language model (chain-rule recovery probability),
and evaluates typing systems per frequency bin at several label
granularities.
"""

__version__ = "0.1.0"
