"""Ergodic interference alignment with fixed precoding for the two-user X channel.

Two channel models are provided: an exact finite-field model (``gf``,
``ff_align``) and a Rayleigh-fading model with random vector quantizer
feedback (``cgeom``, ``rvq``, ``xsim``, ``rates``). ``harness`` drives the
experiments and ``cli`` exposes them as the ``xalign`` command.
"""

__version__ = "0.1.0"
