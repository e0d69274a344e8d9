"""Driven-dissipative vibronic dynamics of a single fluorescent molecule.

A two-level electronic system coupled to one damped vibrational mode,
driven on the zero-phonon line, the Raman sidebands and directly in the
THz.  Frequencies are entered as nu = omega/2pi in GHz and time in ns.
"""

__version__ = "0.1.0"

from . import fock, model, liouville, trajectory, observables, semiclassical, design  # noqa: E402,F401
