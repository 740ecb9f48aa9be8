"""UMi link budget: path loss, arrival angles, sector antenna gain and received power.

Every function accepts scalars or numpy arrays and broadcasts like a ufunc.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layout import CellGeometry, NetworkLayout, Site, UserPoint, distance_matrices

OUTAGE_GAIN_DBI = -100.0
MIN_EFFECTIVE_HEIGHT = 0.01
D2D_VALID_RANGE = (10.0, 5000.0)


@dataclass(frozen=True)
class RadioParams:
    carrier_frequency: float = 28.0  # GHz
    effective_env_height: float = 1.0
    g_max: float = 8.0
    theta_3db: float = 65.0
    phi_3db: float = 65.0
    sll_v: float = 30.0
    sll_h: float = 30.0
    g_r: float = 0.0
    light_speed: float = 3e8
    nlos: bool = False

    def __post_init__(self):
        if self.carrier_frequency <= 0:
            raise ValueError("carrier_frequency must be positive")
        if self.theta_3db <= 0 or self.phi_3db <= 0:
            raise ValueError("beamwidths must be positive")
        if self.sll_v < 0 or self.sll_h < 0:
            raise ValueError("side-lobe levels must be non-negative")


@dataclass(frozen=True)
class CellConfig:
    cell_id: int
    etilt: float = 7.0
    tx_power: float = 30.0
    mtilt: float = 0.0
    operational: bool = True

    def __post_init__(self):
        if not 0 <= self.etilt <= 14:
            raise ValueError(f"cell {self.cell_id}: etilt {self.etilt} outside [0, 14]")
        if not 0 <= self.tx_power <= 40:
            raise ValueError(f"cell {self.cell_id}: tx_power {self.tx_power} outside [0, 40]")

    @property
    def tilt(self) -> float:
        return self.mtilt + self.etilt


def breakpoint_distance(params: RadioParams, h_bs, h_ut):
    """Breakpoint distance in metres. Effective heights are floored at 1 cm."""
    h_bs_eff = np.maximum(np.asarray(h_bs, dtype=float) - params.effective_env_height, MIN_EFFECTIVE_HEIGHT)
    h_ut_eff = np.maximum(np.asarray(h_ut, dtype=float) - params.effective_env_height, MIN_EFFECTIVE_HEIGHT)
    f_hz = params.carrier_frequency * 1e9
    return 4.0 * h_bs_eff * h_ut_eff * f_hz / params.light_speed


def path_loss_umi_los(d2d, d3d, h_bs, h_ut, params: RadioParams):
    """UMi line-of-sight path loss in dB (log terms use f_c in GHz)."""
    d2d = np.asarray(d2d, dtype=float)
    d3d = np.asarray(d3d, dtype=float)
    if np.any(d3d <= 0) or np.any(d2d < 0):
        raise ValueError("distances must be positive")
    d_bp = breakpoint_distance(params, h_bs, h_ut)
    log_f = 20.0 * np.log10(params.carrier_frequency)
    pl1 = 32.4 + 21.0 * np.log10(d3d) + log_f
    dh = np.asarray(h_bs, dtype=float) - np.asarray(h_ut, dtype=float)
    pl2 = 32.4 + 40.0 * np.log10(d3d) + log_f - 9.5 * np.log10(d_bp ** 2 + dh ** 2)
    out = np.where(d2d <= d_bp, pl1, pl2)
    return float(out) if out.ndim == 0 else out


def path_loss_umi_nlos(d3d, h_ut, los_value, params: RadioParams):
    """UMi non-line-of-sight path loss in dB, never below the LOS value."""
    d3d = np.asarray(d3d, dtype=float)
    nlos = (35.3 * np.log10(d3d) + 22.4 + 21.3 * np.log10(params.carrier_frequency)
            - 0.3 * (np.asarray(h_ut, dtype=float) - 1.5))
    out = np.maximum(los_value, nlos)
    return float(out) if np.ndim(out) == 0 else out


def wrap_degrees(angle):
    """Wrap an angle to (-180, 180]."""
    out = 180.0 - np.mod(180.0 - np.asarray(angle, dtype=float), 360.0)
    return float(out) if np.ndim(out) == 0 else out


def elevation_angle(h_bs, h_ut, d2d):
    """Elevation of the BS seen from the user, degrees; 90 when directly overhead."""
    d2d = np.asarray(d2d, dtype=float)
    dh = np.asarray(h_bs, dtype=float) - np.asarray(h_ut, dtype=float)
    with np.errstate(divide="ignore"):
        theta = np.degrees(np.arctan(dh / np.where(d2d > 0, d2d, 1.0)))
    theta = np.where(d2d > 0, theta, 90.0)
    return float(theta) if theta.ndim == 0 else theta


def arrival_angles(user: UserPoint, site: Site, cell: CellGeometry) -> tuple[float, float]:
    dx = user.position[0] - site.position[0]
    dy = user.position[1] - site.position[1]
    theta = elevation_angle(site.height_bs, user.height_ut, np.hypot(dx, dy))
    phi = wrap_degrees(np.degrees(np.arctan2(dy, dx)) - cell.boresight_azimuth)
    return float(theta), float(phi)


def antenna_gain(theta, phi, tilt, params: RadioParams):
    """3D sector gain in dBi: G_max minus the summed vertical and horizontal attenuations."""
    a_v = np.minimum(12.0 * ((np.asarray(theta) - tilt) / params.theta_3db) ** 2, params.sll_v)
    a_h = np.minimum(12.0 * (np.asarray(phi) / params.phi_3db) ** 2, params.sll_h)
    out = params.g_max - (a_v + a_h)
    return float(out) if np.ndim(out) == 0 else out


def received_power(cfg: CellConfig, gain, path_loss, params: RadioParams):
    if not cfg.operational:
        gain = OUTAGE_GAIN_DBI
    out = cfg.tx_power + np.asarray(gain, dtype=float) + params.g_r - np.asarray(path_loss, dtype=float)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class LinkGeometry:
    """Configuration-independent part of the link budget for every (user, cell) pair.

    path_loss, theta and phi are (N, M); in_range flags d2D inside the UMi validity range.
    """
    path_loss: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    in_range: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.path_loss.shape


def link_geometry(layout: NetworkLayout, params: RadioParams) -> LinkGeometry:
    d2d, d3d = distance_matrices(layout)
    h_bs = layout.site_heights[None, :]
    h_ut = layout.user_heights[:, None]
    if layout.n_users:
        pl = path_loss_umi_los(d2d, np.maximum(d3d, 1e-9), h_bs, h_ut, params)
        if params.nlos:
            pl = path_loss_umi_nlos(d3d, h_ut, pl, params)
    else:
        pl = np.zeros_like(d2d)
    theta = elevation_angle(h_bs, h_ut, d2d)

    delta = layout.user_xy[:, None, :] - layout.site_xy[None, :, :]
    bearing = np.degrees(np.arctan2(delta[..., 1], delta[..., 0]))
    cs = layout.cell_site
    phi = wrap_degrees(bearing[:, cs] - layout.cell_azimuth[None, :])
    lo, hi = D2D_VALID_RANGE
    in_range = (d2d >= lo) & (d2d <= hi)
    return LinkGeometry(
        path_loss=np.asarray(pl, dtype=float).reshape(d2d.shape)[:, cs],
        theta=np.asarray(theta, dtype=float).reshape(d2d.shape)[:, cs],
        phi=np.asarray(phi, dtype=float).reshape(len(layout.users), layout.n_cells),
        in_range=in_range[:, cs],
    )
