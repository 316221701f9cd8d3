"""MCCS Miner.

Mines maximal connected complete subgraphs of K-partite graphs built from
relational CSV data and ranks them against a maximum-entropy background
model.
"""

__version__ = "0.1.0"
