"""Hexagonal multi-site geometry: sites, sectors and user test points."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

LAYOUT_SCHEMA_VERSION = 1
SECTOR_AZIMUTHS = (0.0, 120.0, -120.0)
NEIGHBOR_FACTOR = 1.2

# axial unit steps walked around a hex ring that starts at corner (ring, -ring)
_RING_DIRECTIONS = ((0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0))


@dataclass(frozen=True)
class Site:
    id: int
    position: tuple[float, float]
    height_bs: float = 10.0

    def __post_init__(self):
        if self.height_bs <= 0:
            raise ValueError(f"site {self.id}: height_bs must be positive")


@dataclass(frozen=True)
class CellGeometry:
    cell_id: int
    site_id: int
    boresight_azimuth: float

    def __post_init__(self):
        if self.boresight_azimuth not in SECTOR_AZIMUTHS:
            raise ValueError(f"cell {self.cell_id}: azimuth must be one of {SECTOR_AZIMUTHS}")


@dataclass(frozen=True)
class UserPoint:
    user_id: int
    position: tuple[float, float]
    height_ut: float = 1.5

    def __post_init__(self):
        if not 1.5 <= self.height_ut <= 22.5:
            raise ValueError(f"user {self.user_id}: height_ut outside [1.5, 22.5] m")


@dataclass(frozen=True)
class NetworkLayout:
    sites: tuple[Site, ...]
    cells: tuple[CellGeometry, ...]
    users: tuple[UserPoint, ...]
    inter_site_distance: float
    bounds: tuple[float, float, float, float] = field(default=(0.0, 0.0, 0.0, 0.0))

    def __post_init__(self):
        if len(self.cells) != 3 * len(self.sites):
            raise ValueError("layout needs exactly three cells per site")
        n_sites = len(self.sites)
        for site_id in range(n_sites):
            az = sorted(c.boresight_azimuth for c in self.cells if c.site_id == site_id)
            if az != sorted(SECTOR_AZIMUTHS):
                raise ValueError(f"site {site_id} does not carry the three standard sectors")
        for cell in self.cells:
            if not 0 <= cell.site_id < n_sites:
                raise ValueError(f"cell {cell.cell_id} references unknown site {cell.site_id}")

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_users(self) -> int:
        return len(self.users)

    # Array views used by the vectorised link budget. Safe to cache: the layout is frozen.
    @cached_property
    def site_xy(self) -> np.ndarray:
        return np.array([s.position for s in self.sites], dtype=float).reshape(-1, 2)

    @cached_property
    def site_heights(self) -> np.ndarray:
        return np.array([s.height_bs for s in self.sites], dtype=float)

    @cached_property
    def user_xy(self) -> np.ndarray:
        return np.array([u.position for u in self.users], dtype=float).reshape(-1, 2)

    @cached_property
    def user_heights(self) -> np.ndarray:
        return np.array([u.height_ut for u in self.users], dtype=float)

    @cached_property
    def cell_site(self) -> np.ndarray:
        return np.array([c.site_id for c in self.cells], dtype=int)

    @cached_property
    def cell_azimuth(self) -> np.ndarray:
        return np.array([c.boresight_azimuth for c in self.cells], dtype=float)

    def cells_of_site(self, site_id: int) -> list[int]:
        """Cell ids of one site, in ascending order."""
        return sorted(c.cell_id for c in self.cells if c.site_id == site_id)

    def with_users(self, users) -> "NetworkLayout":
        return NetworkLayout(self.sites, self.cells, tuple(users),
                             self.inter_site_distance, self.bounds)

    def to_dict(self) -> dict:
        return {
            "version": LAYOUT_SCHEMA_VERSION,
            "inter_site_distance": self.inter_site_distance,
            "bounds": list(self.bounds),
            "sites": [{"id": s.id, "x": s.position[0], "y": s.position[1],
                       "height_bs": s.height_bs} for s in self.sites],
            "cells": [{"cell_id": c.cell_id, "site_id": c.site_id,
                       "azimuth": c.boresight_azimuth} for c in self.cells],
            "users": [{"user_id": u.user_id, "x": u.position[0], "y": u.position[1],
                       "height_ut": u.height_ut} for u in self.users],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkLayout":
        if doc.get("version") != LAYOUT_SCHEMA_VERSION:
            raise ValueError(f"unsupported layout version {doc.get('version')!r}")
        return cls(
            sites=tuple(Site(d["id"], (d["x"], d["y"]), d["height_bs"]) for d in doc["sites"]),
            cells=tuple(CellGeometry(d["cell_id"], d["site_id"], d["azimuth"]) for d in doc["cells"]),
            users=tuple(UserPoint(d["user_id"], (d["x"], d["y"]), d["height_ut"]) for d in doc["users"]),
            inter_site_distance=doc["inter_site_distance"],
            bounds=tuple(doc["bounds"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "NetworkLayout":
        return cls.from_dict(json.loads(text))


def hex_axial_coords(n_rings: int) -> list[tuple[int, int]]:
    """Axial (q, r) coordinates of a hex patch, centre first then ring by ring."""
    coords = [(0, 0)]
    for ring in range(1, n_rings + 1):
        q, r = ring, -ring
        for dq, dr in _RING_DIRECTIONS:
            for _ in range(ring):
                coords.append((q, r))
                q, r = q + dq, r + dr
    return coords


def build_hex_layout(n_rings: int = 1, inter_site_distance: float = 300.0, rng_seed: int = 0,
                     n_users: int = 2500, height_bs: float = 10.0,
                     height_ut: float = 1.5) -> NetworkLayout:
    """Build a centred hexagonal grid of three-sector sites with uniformly dropped users.

    Users are drawn uniformly over the bounding box of the site centres widened by half an
    inter-site distance on every side. The same seed always yields the same drop.
    """
    if inter_site_distance <= 0:
        raise ValueError("inter_site_distance must be positive")
    if n_rings < 0 or n_users < 0:
        raise ValueError("n_rings and n_users must be non-negative")

    sites = []
    for sid, (q, r) in enumerate(hex_axial_coords(n_rings)):
        x = inter_site_distance * (q + r / 2.0)
        y = inter_site_distance * (math.sqrt(3.0) / 2.0) * r
        sites.append(Site(sid, (x + 0.0, y + 0.0), height_bs))
    cells = [CellGeometry(3 * s.id + k, s.id, az)
             for s in sites for k, az in enumerate(SECTOR_AZIMUTHS)]

    xy = np.array([s.position for s in sites])
    margin = inter_site_distance / 2.0
    x0, y0 = xy.min(axis=0) - margin
    x1, y1 = xy.max(axis=0) + margin
    rng = np.random.default_rng(rng_seed)
    ux = rng.uniform(x0, x1, size=n_users)
    uy = rng.uniform(y0, y1, size=n_users)
    users = [UserPoint(i, (float(ux[i]), float(uy[i])), height_ut) for i in range(n_users)]

    return NetworkLayout(tuple(sites), tuple(cells), tuple(users), float(inter_site_distance),
                         (float(x0), float(y0), float(x1), float(y1)))


def distances(user: UserPoint, site: Site) -> tuple[float, float]:
    """Planar and slant distance between a user and a site, in metres."""
    d2d = math.hypot(user.position[0] - site.position[0], user.position[1] - site.position[1])
    d3d = math.hypot(d2d, site.height_bs - user.height_ut)
    return d2d, d3d


def distance_matrices(layout: NetworkLayout) -> tuple[np.ndarray, np.ndarray]:
    """(N, n_sites) planar and slant distance matrices."""
    delta = layout.user_xy[:, None, :] - layout.site_xy[None, :, :]
    d2d = np.hypot(delta[..., 0], delta[..., 1])
    dh = layout.site_heights[None, :] - layout.user_heights[:, None]
    return d2d, np.hypot(d2d, dh)


def neighbor_sites(layout: NetworkLayout, site_id: int) -> set[int]:
    if not 0 <= site_id < layout.n_sites:
        raise KeyError(f"unknown site {site_id}")
    limit = NEIGHBOR_FACTOR * layout.inter_site_distance
    d = np.hypot(*(layout.site_xy - layout.site_xy[site_id]).T)
    return {int(i) for i in np.flatnonzero(d <= limit) if i != site_id}
