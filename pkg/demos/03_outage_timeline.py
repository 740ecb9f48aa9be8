"""
80-second outage timeline with metrics export
=============================================

Healthy until t=30, one site fails, five reconfigurations follow from t=35.
"""

from pathlib import Path

from ranres import ScenarioConfig, LayoutConfig
from ranres.dynamic import run_dynamic, export_metrics, write_plot_data

cfg = ScenarioConfig(layout=LayoutConfig(n_users=500), policy='no_action', outage_sites=(0,))
run = run_dynamic(cfg)
print('off sites', run.off_sites, 'detected at', run.detected_at, 'actions at', run.action_ticks)

for r in run.records[27:41]:
    print('t=%2d  rsrp %6.1f dBm  th %6.1f Mbps  cov %.3f  serv %.3f  %s%s%s' % (
        r.t, r.mean_rsrp, r.mean_throughput / 1e6, r.p_coverage, r.p_service,
        r.coverage_state, r.service_state, '  *' if r.acted else ''))

# users walking at 5 km/h instead of standing still
walk = run_dynamic(ScenarioConfig(layout=LayoutConfig(n_users=500), policy='no_action',
                                  outage_sites=(0,), user_speed_kmh=5.0))
print('with mobility, mean RSRP at t=0 / 29 / 80: %.2f %.2f %.2f' % tuple(
    walk.records[t].mean_rsrp for t in (0, 29, 80)))

out = Path('timeline_out')
export_metrics(run.records, out / 'metrics.csv')
write_plot_data(run.records, out)
print('wrote', sorted(p.name for p in out.iterdir()))
