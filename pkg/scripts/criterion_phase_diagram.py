"""Certificate verdict over the (K, eps) plane for the sharp family.

Criterion only, no time stepping, so the whole grid takes a couple of
seconds.  Columns are K, eps, verdict, certificate rhs, radius delta;
feed the file to gnuplot or pandas.
"""

import pathlib

import numpy as np

from frontlab import (blocking_constants, blocking_criterion,
                      make_cubic, make_sharp_indicator)

K_VALUES = np.arange(1.0, 25.0)
EPS_VALUES = (1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0)
OUT = pathlib.Path(__file__).resolve().parent / "out"

nl = make_cubic(0.25)
consts = blocking_constants(nl)

rows = []
for K in K_VALUES:
    for eps in EPS_VALUES:
        rep = blocking_criterion(consts, make_sharp_indicator(float(K), eps))
        rows.append((float(K), eps, rep.verdict, rep.rhs, rep.delta))

n_cert = sum(1 for r in rows if r[2] == "BlockingCertified")
print("C_f = {:.6e}".format(consts.C_f))
print("{} of {} cells certified".format(n_cert, len(rows)))
for K in K_VALUES:
    line = "".join("X" if r[2] == "BlockingCertified" else "."
                   for r in rows if r[0] == K)
    print("K = {:4.1f}  {}".format(K, line))

OUT.mkdir(exist_ok=True)
with open(OUT / "criterion_phase_diagram.dat", "w") as fh:
    fh.write("# K eps verdict rhs delta\n")
    for K, eps, verdict, rhs, delta in rows:
        fh.write("{} {} {} {!r} {!r}\n".format(K, eps, verdict, rhs, delta))
print("wrote", OUT / "criterion_phase_diagram.dat")
