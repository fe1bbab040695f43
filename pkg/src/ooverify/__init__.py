"""Verification workbench for object-oriented programs: exact small-step
semantics, the transformation to recursive programs, aliasing-aware
substitution, brute-force weakest preconditions, and checkers for the
partial- and strong-partial-correctness proof systems."""

__version__ = "0.1.0"
