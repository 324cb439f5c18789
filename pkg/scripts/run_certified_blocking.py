"""Certified blocking end to end.

Computes the certificate for a strong mollified indicator drift,
continues the stationary barrier to the left, then integrates the
evolution with the flux scheme and checks that the field stalls under
the barrier.  Takes about ten seconds.
"""

import pathlib

import numpy as np

from frontlab import (Grid1D, blocking_constants, blocking_criterion,
                      continue_to_minus_infinity, make_cubic,
                      make_mollified_indicator, run_simulation,
                      solve_wave, verify_supersolution)

K = 18.0
EPS = 5e-5
SMOOTHING = EPS / 100.0
OUT = pathlib.Path(__file__).resolve().parent / "out"

nl = make_cubic(0.25)
consts = blocking_constants(nl)
d = make_mollified_indicator(K, EPS, SMOOTHING)

cert = blocking_criterion(consts, d)
print("verdict:", cert.verdict)
print("rhs {:.3e} vs C_f {:.3e}".format(cert.rhs, cert.C_f))
if cert.verdict != "BlockingCertified":
    raise SystemExit("criterion not met, nothing to block")

barrier = continue_to_minus_infinity(d, nl, consts.a_opt,
                                     R_start=-15.0, delta=cert.delta)
ver = verify_supersolution(barrier, d, nl)
print("barrier verified:", ver.passed,
      "(residual min {:+.2e})".format(ver.residual_min))

w = solve_wave(nl)
g = Grid1D(-60.0, 40.0, 8001)
res = run_simulation(nl, d, w, g, t0=-20.0 / w.c, t_end=100.0,
                     dt=0.01, scheme="psi_flux", monitors=())
rep = res.report

x = g.nodes()
gap = barrier.at(x) - res.final_state.u
print("classification:", rep.classification)
print("front stalls near x =", rep.details.get("stall_position"))
gap_min = float(np.min(gap))
print("barrier gap min {:+.2e}, trapped: {}".format(
    gap_min, gap_min >= -1e-3))

OUT.mkdir(exist_ok=True)
np.savetxt(OUT / "blocked_final_vs_barrier.dat",
           np.column_stack([x, res.final_state.u, barrier.at(x)]),
           header="x u barrier")
np.savetxt(OUT / "blocked_front_trace.dat", rep.front_trace,
           header="t front_position")
print("wrote", OUT / "blocked_final_vs_barrier.dat")
