"""
Link budget of a healthy 7-site network, then with one site down
=================================================================

"""

import numpy as np

from ranres import build_hex_layout, RanEnv, OutageScenario

# one ring of sites around the centre, 300 m apart, 2500 users dropped uniformly
layout = build_hex_layout(n_rings=1, inter_site_distance=300.0, rng_seed=0, n_users=2500)
print(len(layout.sites), 'sites,', len(layout.cells), 'cells,', len(layout.users), 'users')

# every cell at 7 deg electrical tilt and 30 dBm
env = RanEnv(layout)
healthy = env.reset()
report, snap = env.evaluate(healthy)
print('mean RSRP %.1f dBm, mean throughput %.1f Mbps' % (report.mean_rsrp, report.mean_throughput / 1e6))
print('coverage %.4f  service %.4f  states %s/%s' % (snap.p_coverage, snap.p_service,
                                                     snap.coverage_state, snap.service_state))

# users per cell after load balancing
load = np.bincount(report.serving_cell[report.serving_cell >= 0], minlength=len(layout.cells))
print('users per cell:', load)

# switch the centre site off and look again
down = env.reset(OutageScenario.of({0}))
report0, snap0 = env.evaluate(down)
print('centre site off -> coverage %.4f  service %.4f  mean RSRP %.1f dBm' % (
    snap0.p_coverage, snap0.p_service, report0.mean_rsrp))

# the neighbours' share of users grows
load0 = np.bincount(report0.serving_cell[report0.serving_cell >= 0], minlength=len(layout.cells))
print('users per cell:', load0)
