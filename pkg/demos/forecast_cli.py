"""
Forecasting from the command line
=================================

Write the synthetic series to CSV, then drive the ``seasadj`` CLI the way
a shell user would: decompose, then forecast two years ahead.
"""

import csv
import subprocess
import sys
import tempfile
from pathlib import Path

from seasadj.simulate import synthetic_fixture

work = Path(tempfile.mkdtemp())
data = work / "series.csv"
y = synthetic_fixture().y
data.write_text("month,value\n" + "".join(f"{i},{float(v)!r}\n" for i, v in enumerate(y)))

cfg = work / "run.cfg"
cfg.write_text("spec.m1=2\nspec.period=12\nspec.m3=2\n")


def seasadj(*args):
    cmd = [sys.executable, "-m", "seasadj", *args]
    print("$ seasadj", " ".join(args[:2]), "...")
    return subprocess.run(cmd, check=True)


seasadj("decompose", str(data), "--config", str(cfg), "--out", str(work / "dec"))
seasadj("forecast", str(data), "--config", str(cfg), "--horizon", "24",
        "--out", str(work / "fc"))

with open(work / "fc" / "forecast.csv") as fh:
    rows = list(csv.DictReader(fh))
for r in rows[:12]:
    print(f"h={r['step']:>2}  mean {float(r['mean']):8.2f}  "
          f"95% [{float(r['lower95']):8.2f}, {float(r['upper95']):8.2f}]")
print("outputs in", work)
