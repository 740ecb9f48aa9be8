"""Coverage/service availability, five-level state labels and the resilience gate."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .link import LinkReport

STATES = ("G", "F", "A", "P", "O")
_MIX_TOL = 1e-9


@dataclass(frozen=True)
class ResilienceThresholds:
    p_cov_hat: float = 0.95
    p_serv_hat: float = 0.5
    good_rsrp_min: float = -90.0
    cover_min: float = -127.0

    def __post_init__(self):
        for name in ("p_cov_hat", "p_serv_hat"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")


@dataclass(frozen=True)
class ResilienceSnapshot:
    p_coverage: float
    p_service: float
    rsrp_mix: tuple[float, float, float]
    d_satisfied: float
    coverage_state: str
    service_state: str
    gate_z: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rsrp_mix"] = list(self.rsrp_mix)
        return d


def availabilities(report: LinkReport) -> tuple[float, float]:
    n = report.n_users
    if n < 1:
        raise ValueError("availabilities need at least one user")
    return float(np.count_nonzero(report.covered)) / n, float(np.count_nonzero(report.satisfied)) / n


def rsrp_mix(rsrp, thresholds: ResilienceThresholds = ResilienceThresholds()) -> tuple[float, float, float]:
    """Fractions of users with good (>= -90), fair and poor (< -127) RSRP."""
    rsrp = np.asarray(rsrp, dtype=float)
    n = rsrp.size
    if n == 0:
        raise ValueError("rsrp_mix needs at least one user")
    good = np.count_nonzero(rsrp >= thresholds.good_rsrp_min)
    poor = np.count_nonzero(rsrp < thresholds.cover_min)
    return good / n, (n - good - poor) / n, poor / n


def classify_coverage(mix) -> str:
    x, y, z = (float(v) for v in mix)
    if min(x, y, z) < -_MIX_TOL or abs(x + y + z - 1.0) > 1e-6:
        raise ValueError(f"malformed RSRP mix {mix!r}")
    if z >= 0.05:
        return "O"
    if x >= y and x >= z:
        return "G" if x > y + z else "F"
    if y > x and y >= z:
        return "A" if z < 0.04 else "P"
    # y > x and z > y would force z >= 0.05; kept as the conservative fallback
    return "P"


def classify_service(d: float) -> str:
    if not 0.0 <= d <= 1.0:
        raise ValueError(f"satisfied fraction {d!r} outside [0, 1]")
    if d >= 0.80:
        return "G"
    if d >= 0.65:
        return "F"
    if d >= 0.50:
        return "A"
    if d >= 0.30:
        return "P"
    return "O"


def gate(p_coverage: float, p_service: float,
         thresholds: ResilienceThresholds = ResilienceThresholds()) -> bool:
    return p_coverage >= thresholds.p_cov_hat and p_service >= thresholds.p_serv_hat


def snapshot(report: LinkReport, thresholds: ResilienceThresholds = ResilienceThresholds()) -> ResilienceSnapshot:
    p_cov, p_serv = availabilities(report)
    mix = rsrp_mix(report.rsrp, thresholds)
    return ResilienceSnapshot(
        p_coverage=p_cov,
        p_service=p_serv,
        rsrp_mix=mix,
        d_satisfied=p_serv,
        coverage_state=classify_coverage(mix),
        service_state=classify_service(p_serv),
        gate_z=gate(p_cov, p_serv, thresholds),
    )
