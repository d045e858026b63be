"""
Choosing the AR order by AIC
============================

Scan trend orders 1 and 2 against AR orders 0..4 and print the table in
the layout of a classic AIC scan, with the minimum flagged.
"""

from seasadj import order_scan
from seasadj.simulate import FIXTURE_SPEC, synthetic_fixture

y = synthetic_fixture().y
tab = order_scan(FIXTURE_SPEC, y, m1_set=[1, 2], m3_set=range(5))

print(f"{'m1':>3} {'m3':>3} {'loglik':>10} {'AIC':>10}")
for row in tab.rows:
    flag = "  <- min" if row.is_min else ""
    print(f"{row.m1:>3} {row.m3:>3} {row.loglik:>10.2f} {row.aic:>10.2f}{flag}")

# Constrained roots: one real root and one complex pair kept inside
# modulus (0, 0.9) and argument (0.1, pi).
import numpy as np

from seasadj import RootBounds

bd = RootBounds(1, 1, 0.0, 0.9, 0.1, np.pi)
tmpl = FIXTURE_SPEC.replace(ar_type=2, m3=bd.m3, bounds=bd)
tab2 = order_scan(tmpl, y, m1_set=[2], root_orders=[(1, 0), (0, 1), (2, 0), (1, 1)])
for row in tab2.rows:
    print(f"m_r={row.m_r} m_i={row.m_i}  AIC {row.aic:.2f}{'  <- min' if row.is_min else ''}")
