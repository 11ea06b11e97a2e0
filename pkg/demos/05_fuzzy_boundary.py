"""What happens when the boundary is measured in the wrong place.

The true solution lives on the ball of radius 0.5 and vanishes outside it.
The solver is told the wall sits at radius 0.6: boundary data and the
fractional operator's integration limits both use the measured ball, while
collocation points (and validation) come from the true one. The error that
remains reflects the mismatch, not the optimizer.

Run: python demos/05_fuzzy_boundary.py [output_dir]
"""

from __future__ import annotations

import sys
from pathlib import Path

from gmcpinn.runner import load_config, run

root = Path(__file__).resolve().parent.parent
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("runs/demo_fuzzy")
s = run(load_config(root / "configs" / "fuzzy.ini"), out)
print(f"L2 relative error on the true ball: {s['l2_relative']:.3g}; "
      f"max pointwise (relative to peak): {s['max_pointwise']:.3g}")
print(f"error report: {out / 'error_report.csv'}")
