# -*- coding: utf-8 -*-
"""
The package includes an experiment assembler together with truth plants, tracking
controllers and the residual Koopman training pipeline.

Version: 1.0.0  (October 2026)
"""

__version__ = "1.0.1"
