"""Verification engine for a class-two 3-group counterexample to the weakly closed conjecture.

Submodules:

* :mod:`weakclosure.gfp` -- exact linear algebra over GF(3)
* :mod:`weakclosure.class2` -- the free class-two exponent-3 group, the wreath product Q and H x| Q
* :mod:`weakclosure.reps` -- the 3-, 9- and 27216-dimensional modules
* :mod:`weakclosure.toolkit` -- brute-force F-module analysis of small matrix groups
* :mod:`weakclosure.verify` -- report assembly for the main construction and the lemma suites
* :mod:`weakclosure.cli` -- command line entry point
"""

__version__ = "0.1.0"
