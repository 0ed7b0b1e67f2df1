"""statmodel: static instruction-mix performance models.

Combines source-level loop analysis (affine iteration domains, symbolic
lattice-point counts) with binary-level evidence (DWARF line tables plus
disassembly text) into parametric per-function instruction-mix models that
evaluate without running the target program.
"""

__version__ = "0.1.0"
