"""Energetically balanced HEVI time stepping for the compressible Euler equations on an x-z slice, built on a
mimetic spectral element discretisation, plus the linearised Boussinesq stability analyser.
"""

# Sentinel for keyword defaults where None is a legitimate value (see Config.get_conf_value)
NOTSET = "__NOTSET__"
