"""Desk-scale constructions around amenability of topological full groups.

Modules:

``wobbling``    bounded-displacement bijections of Z and their algebra
``subshift``    primitive substitution subshifts, languages, recurrence
``fullgroup``   local-rule elements of the full group and the orbit embedding
``density``     certified series for the Bernoulli densities ``f_n``
``meanlab``     almost-invariant measures on finite subsets of Z
``stabilizer``  block decompositions and finite-order certificates
``cli``         command-line front end
"""
__version__ = "0.1.0"
