"""densekg: densify an event knowledge graph.

Normalizes annotated tail events into a uniform sentence pattern,
builds relation-prediction training sets with negative sampling, trains
or proxies a (head, tail) relation scorer, completes missing intra- and
inter-cluster links under per-relation thresholds, and reports
multi-hop path statistics and precision.
"""

__version__ = "0.1.0"
