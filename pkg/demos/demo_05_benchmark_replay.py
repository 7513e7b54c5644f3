"""
Replaying the published benchmark settings
==========================================

The package ships the initial conditions, gain values, connectivity
targets, and exponent study from the study it reimplements.  The
topologies behind those runs were never published, so the replays
generate random connected networks rescaled to the published
connectivities; published timings are echoed as reference values
only, while the assertions stick to the bounds that hold on any
admissible topology.
"""

import json

from consensus_lab import reproduce

# Case 1: static network, node-error protocol, deadline 1 s.
rep = reproduce("static-a", seed=0)
print("static-a:")
print(f"  connectivity target {rep['lambda2_target']} -> "
      f"calibrated {rep['lambda2']:.5f}")
print(f"  gain kappa {rep['kappa']:.4f} (published {rep['published_kappa']}), "
      f"zeta {rep['zeta']:.6f} (published {rep['published_zeta']})")
print(f"  settled at {rep['settling']['t_settle']:.4f} s, deadline "
      f"{rep['T_c']} s; reference time {rep['reference_settling_s']} s "
      "(not comparable, topology differs)")

# Case 2: switching network, node-error protocol.  Convergence is
# finite-time with a uniform bound, but no tunable deadline exists
# for this variant under switching, so none is asserted.
rep = reproduce("switched-a", seed=0)
print("\nswitched-a:")
print(f"  per-topology gains {[round(k, 4) for k in rep['kappa_per_topology']]}")
print(f"  published          {rep['published_kappa_per_topology']}")
print(f"  settled at {rep['settling']['t_settle']:.4f} s; {rep['deadline_note']}")

# Case 3: switching network, edge-error protocol, deadline 1 s, plus
# the undisturbed average-consensus rerun.
rep = reproduce("switched-b", seed=0)
print("\nswitched-b:")
print(f"  worst-case gain {rep['kappa']:.4f} over connectivities "
      f"{[round(l, 5) for l in rep['lambda2_target']]}")
print(f"  settled at {rep['settling']['t_settle']:.4f} s, deadline {rep['T_c']} s; "
      f"decay-rate audit ok = {rep['rate_check']['ok']}")
avg = rep["average_consensus"]
print(f"  undisturbed rerun meets at the average: final gap "
      f"{avg['final_gap']:.2e}, max mean drift {avg['max_mean_drift']:.2e}")

# Case 4: the exponent study.  Three shaping tuples, both protocol
# variants, common deadline; the replay reports which tuple leaves the
# most slack before the deadline.
rep = reproduce("param-study", seed=0)
print("\nparam-study:")
for i, row in enumerate(rep["rows"]):
    rho = row["rho"]
    print(f"  row {i}: p={rho['p']}, q={rho['q']}, k={rho['k']} -> "
          f"t_settle A {row['settling_A']['t_settle']:.3f} s / "
          f"B {row['settling_B']['t_settle']:.3f} s "
          f"(references {row['reference_A_s']}/{row['reference_B_s']} s)")
print(f"  slack ranking, most to least: {rep['slack_ranking_most_to_least']}")
print(f"\nall runs met their bounds: "
      f"{json.dumps({'param-study ok': rep['ok']})}")
