"""Exact computations for groups acting on trees, acylindricity checks and a
combinatorial model of the Hawaiian earring group."""

from .groupcore import (
    FiniteGroup,
    FreeFactor,
    GroupElement,
    GroupSpec,
    conjugate_into_factor,
    cyclic_reduce,
    normalize,
    primitive_root,
)
from .treeact import TreeAction, TreeVertex, classify, translation_length

__version__ = "0.1.0"
