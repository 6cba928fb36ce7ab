"""lnlab: a numerical laboratory for noisy gradient descent dynamics.

Library layout:

* :mod:`lnlab.problems`  — synthetic models, losses, datasets, constant audits
* :mod:`lnlab.dynamics`  — discrete chains, flows, couplings, ensembles
* :mod:`lnlab.transport` — semimetric, empirical Wasserstein distances, gaps
* :mod:`lnlab.bounds`    — closed-form bound constants and decay rates
* :mod:`lnlab.config` / :mod:`lnlab.experiments` / :mod:`lnlab.reporting`
  — experiment configs, orchestration, CSV/figure reports
* :mod:`lnlab.cli`       — the ``lnlab`` command
"""

__version__ = "0.1.0"
