"""cylalg: a finite workbench for cylindric-like atom structures.

Builders for graph-derived relation-algebra structures, basic matrices,
partial-map structures and rainbow structures; equational law checkers over
their complex algebras; adversarial extension games; and hyperbasis search.
"""

__version__ = "0.1.0"
