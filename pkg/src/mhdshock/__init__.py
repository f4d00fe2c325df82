"""Viscous shock profiles and Evans-function stability for planar
isentropic MHD with infinite electrical resistivity."""

__version__ = "0.1.0"
