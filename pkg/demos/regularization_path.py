"""
L1 and L2 paths for an over-sized AR block
==========================================

Fit AR order 8 to a series whose AR part is only of order 2 and watch
the PARCOR coefficients as the penalty weight grows. L2 shrinks all of
them gradually; L1 sets the trailing ones exactly to zero.

Each sweep takes one to two minutes.
"""

import numpy as np

from seasadj import lambda_sweep
from seasadj.simulate import FIXTURE_SPEC, synthetic_fixture

y = synthetic_fixture().y
spec = FIXTURE_SPEC.replace(m3=8)

for penalty in ("L2", "L1"):
    path = lambda_sweep(spec.replace(penalty=penalty), y)
    print(f"\n{penalty} path")
    print(f"{'lambda':>8} {'loglik':>9} {'sum|b|':>7} {'zeros':>5}  b1..b8")
    for p in path.points[::3] + [path.points[-1]]:
        b = np.round(p.parcor, 2)
        print(f"{p.lam:8.3f} {p.loglik:9.2f} {np.abs(p.parcor).sum():7.3f} {p.n_zero:5d}  {b}")
