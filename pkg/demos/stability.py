"""How many days does an activity space need to settle?  Blocked vs alternating schedules.

Run with ``python demos/stability.py``.
"""

import numpy as np

from pnactivity import Scenario, simulate_study
from pnactivity.stability import lct_curve


def main():
    sc = Scenario.default(seed=0)
    study = simulate_study(sc)
    weekend = [i for i, d in enumerate(study.days) if d.pattern in ("pattern3", "pattern4", "pattern5")]
    blocked = study.reorder(weekend + [i for i in range(study.n) if i not in weekend])
    levels = [round(x, 2) for x in np.arange(0.1, 1.0001, 0.1)]

    alt, _ = lct_curve(study.marked_days(), sc.pn, "polygon", levels, 0.0)
    blk, _ = lct_curve(blocked.marked_days(), sc.pn, "polygon", levels, 0.0)
    print("level  LCT(calendar order)  LCT(weekend days first)")
    for c in levels:
        print(f"{c:<6} {alt[c]:<20} {blk[c]}")


if __name__ == "__main__":
    main()
