"""Certified spectra of closed hyperbolic 3-manifolds."""
