"""Rotation sensing of a ring condensate by cavity optomechanics: noise spectra and sensitivities."""
__version__ = "0.1.0"
