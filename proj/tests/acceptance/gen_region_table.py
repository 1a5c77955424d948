"""Emits region_table.inc: expected admissibility of (kind, 1/p, 1/q) points.

Written against the inequalities directly, with exact fractions, so the table does not
share code with classify_exponents.
"""
from fractions import Fraction as F

BOUNDS = {  # kind: (lower, upper) for 3/p + 2/q with the kind's own p
    "velocity": (1, 2),
    "velocity_gradient": (2, 3),
    "vorticity": (2, 3),
    "vorticity_gradient": (3, 4),
}


def admissible(kind, ip, iq):
    if not (0 <= ip <= 1 and 0 <= iq <= 1):
        return False
    if kind == "vorticity" and ip == 1 and iq == 0:
        return False
    lo, hi = BOUNDS[kind]
    return lo <= 3 * ip + 2 * iq <= hi


rows = []
for kind in BOUNDS:
    for a in range(0, 7):
        for b in range(0, 5):
            ip, iq = F(a, 6), F(b, 4)
            s = 3 * ip + 2 * iq
            lo, hi = BOUNDS[kind]
            ok = admissible(kind, ip, iq)
            rows.append((kind, ip, iq, ok, ok and s == lo, ok and s == hi))

with open("region_table.inc", "w") as out:
    out.write("// generated by gen_region_table.py\n")
    for kind, ip, iq, ok, lo, hi in rows:
        out.write(
            f"{{CriterionKind::{kind}, {ip.numerator}, {ip.denominator}, {iq.numerator}, "
            f"{iq.denominator}, {str(ok).lower()}, {str(lo).lower()}, {str(hi).lower()}}},\n"
        )
print(len(rows), sum(r[3] for r in rows))
