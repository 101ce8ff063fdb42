"""Exact solvers for persuasion with payments.

Single-receiver instances (any finite action count) and binary-action
multi-receiver instances are solved under four payment regimes: zero,
non-negative, budget-balanced, and arbitrary transfers.  Everything runs
on exact rational arithmetic; closed-form fast paths are cross-checked
against an LP oracle with certified duals.
"""

__version__ = "1.0.0"
