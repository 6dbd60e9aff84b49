"""Discrete-event MANET simulator with DSDV, OLSR and AODV over RWPM/RPGM mobility."""

__version__ = "0.1.0"
