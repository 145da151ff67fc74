"""The built-in compromise scenarios against their predicted impact.

Runs every threat-matrix entry and prints the audited classification next
to the trust model's prediction. Equivalent to ``bridgesim suite``.
"""

from bridgesim import run_suite

print(f"{'scenario':34s} {'risk':8s} {'predicted':10s} actual")
mismatches = 0
for entry, report in run_suite():
    mark = "" if report.classification == entry.expected else "  <-- MISMATCH"
    mismatches += bool(mark)
    print(f"{entry.name:34s} {entry.risk:8s} {entry.expected:10s} "
          f"{report.classification}{mark}")
print(f"\n{mismatches} mismatches")
