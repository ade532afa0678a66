# -*- coding: utf-8 -*-
"""
Track handling, box QP, Koopman pipeline, configuration, logs and errors

Version: 1.0.0  (October 2026)
"""
