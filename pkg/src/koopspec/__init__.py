"""Koopman-operator spectra from trajectory data.

The analysis modules are ``finite_section`` (EDMD), ``svd_dmd``, ``krylov``
(Hankel-DMD), ``gla`` (Generalized Laplace Analysis) and ``weak_eig``; the
``cli`` module exposes them as the ``koopspec`` command.
"""

from .errors import InputError, KoopError, RankDeficiencyError, SolverError

__version__ = "0.1.0"

__all__ = ["InputError", "KoopError", "RankDeficiencyError", "SolverError", "__version__"]
