"""How the sampled fractional derivative converges, and what limits it.

We estimate the right-sided derivative of (1 - x)^2 on 99 grid points and
compare three things as N = K grows:

* the pseudo-random estimate (median L2 error over a few seeds),
* a quasi-random (Halton) estimate on disjoint windows of the sequence,
* the deterministic Grunwald sum with the same N, i.e. the bias alone.

The gap between the sampled errors and the deterministic one is the sampling
variance; the jump law has heavy tails, so it decays slowly.

Run: python demos/01_estimator_convergence.py
"""

from __future__ import annotations

import numpy as np

from gmcpinn.estimators import gl_deterministic_oracle
from gmcpinn.problems import l2_relative_error
from gmcpinn.runner import EstimateSpec, exact_derivative, run_estimate

ALPHA = 1.2
xs = np.linspace(0, 1, 101)[1:-1]
exact = exact_derivative("(1-x)^2", ALPHA, "right", xs, 1.0)

print(f"right-sided derivative of (1-x)^2, alpha = {ALPHA}")
print(f"{'N=K':>6} {'pseudo':>10} {'halton':>10} {'bias only':>10}")
for n in (10, 30, 100, 300):
    errs = {}
    for stream in ("pseudo", "halton"):
        *_, e = run_estimate(EstimateSpec("(1-x)^2", ALPHA, "right", n, n, stream, seeds=5))
        errs[stream] = np.median(e)
    det = np.array([gl_deterministic_oracle(lambda x: (1 - x) ** 2, x, 1.0, "right", ALPHA, n)
                    for x in xs])
    bias = l2_relative_error(exact, det)
    print(f"{n:>6} {errs['pseudo']:>10.2e} {errs['halton']:>10.2e} {bias:>10.2e}")
