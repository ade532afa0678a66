# -*- coding: utf-8 -*-
"""
This package is a collection of modules for uniform handling of the truth plants.
Each module defines a component class of the same name; the assembler loads it
  with getattr on the module, so the classes are not re-exported here.

Version: 1.0.0  (October 2026)
"""

__all__ = ["dynamic", "kinematic"]
