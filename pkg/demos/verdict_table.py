"""Run every check against every registered model and tabulate the verdicts.

A check is an implication or an equivalence sampled on a model: `pass` and
`fail` only appear when the hypothesis holds, `vacuous` means the model does
not meet the hypothesis and `skipped` means the check does not apply to the
metric type.  Takes around 15 seconds.
"""

from collections import Counter

from finslernav import model_names, get_model
from finslernav.verify import CHECKS, run_all

ids = sorted(CHECKS)
short = {"pass": "P", "fail": "F", "vacuous": "v", "skipped": "."}
width = max(map(len, model_names()))

print(" " * width, " ".join(f"{i + 1:>2}" for i in range(len(ids))))
totals = Counter()
for name in model_names():
    results = run_all(get_model(name).spec, ids, None, 0)
    totals.update(r.verdict for r in results)
    print(f"{name:<{width}}", " ".join(f"{short[r.verdict]:>2}" for r in results))

print()
for i, cid in enumerate(ids):
    print(f"{i + 1:>2}  {cid}")
print("\ntotals:", dict(totals))
