"""Simulator for many devices sharing one uplink channel through superposed,
Raptor-coded BPSK layers with multistage decoding."""

__version__ = "0.1.0"
