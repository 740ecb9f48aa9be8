"""Cell selection, load balancing, SINR and per-user throughput."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .layout import NetworkLayout
from .radio import OUTAGE_GAIN_DBI, CellConfig, LinkGeometry, RadioParams, link_geometry

UNATTACHED = -1
GOOD_RSRP_MIN = -90.0


@dataclass(frozen=True)
class LinkParams:
    prb_bandwidth: float = 10e6
    bits_per_symbol: float = 1.4
    prbs_per_cell: int = 100
    noise_per_prb: float = -99.0  # dBm
    rsrp_min: float = -127.0  # dBm
    demand: float = 3e6  # bps
    max_users_per_cell: int | None = None  # None -> ceil(3 N / M)

    def __post_init__(self):
        if self.prbs_per_cell < 1:
            raise ValueError("prbs_per_cell must be >= 1")
        if self.prb_bandwidth <= 0 or self.bits_per_symbol <= 0:
            raise ValueError("prb_bandwidth and bits_per_symbol must be positive")

    def cell_cap(self, n_users: int, n_cells: int) -> int:
        if self.max_users_per_cell is not None:
            return self.max_users_per_cell
        return max(1, math.ceil(3 * n_users / max(n_cells, 1)))


def dbm_to_mw(x):
    return np.power(10.0, np.asarray(x, dtype=float) / 10.0)


@dataclass(frozen=True)
class LinkReport:
    """Per-user outcome of one network evaluation (arrays of length N)."""
    user_id: np.ndarray
    serving_cell: np.ndarray  # UNATTACHED when no cell covers the user
    rsrp: np.ndarray
    sinr_linear: np.ndarray
    prbs: np.ndarray
    throughput: np.ndarray
    covered: np.ndarray
    satisfied: np.ndarray
    out_of_range: np.ndarray

    @property
    def n_users(self) -> int:
        return int(self.user_id.size)

    @property
    def sum_throughput(self) -> float:
        return float(self.throughput.sum())

    @property
    def mean_rsrp(self) -> float:
        return float(self.rsrp.mean()) if self.n_users else float("nan")

    @property
    def mean_throughput(self) -> float:
        return float(self.throughput.mean()) if self.n_users else float("nan")

    CSV_FIELDS = ("user_id", "serving_cell", "rsrp", "sinr_linear", "prbs", "throughput",
                  "covered", "satisfied", "out_of_range")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        for i in range(self.n_users):
            w.writerow([int(self.user_id[i]), int(self.serving_cell[i]), repr(float(self.rsrp[i])),
                        repr(float(self.sinr_linear[i])), repr(float(self.prbs[i])),
                        repr(float(self.throughput[i])), int(self.covered[i]),
                        int(self.satisfied[i]), int(self.out_of_range[i])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "LinkReport":
        rows = list(csv.DictReader(io.StringIO(text)))
        missing = set(cls.CSV_FIELDS) - set(rows[0].keys()) if rows else set()
        if missing:
            raise ValueError(f"link report CSV lacks columns {sorted(missing)}")

        def col(name, dtype):
            return np.array([dtype(r[name]) for r in rows], dtype=dtype)

        return cls(
            user_id=col("user_id", int), serving_cell=col("serving_cell", int),
            rsrp=col("rsrp", float), sinr_linear=col("sinr_linear", float),
            prbs=col("prbs", float), throughput=col("throughput", float),
            covered=col("covered", int).astype(bool), satisfied=col("satisfied", int).astype(bool),
            out_of_range=col("out_of_range", int).astype(bool),
        )

    def summary(self) -> dict:
        n = max(self.n_users, 1)
        return {
            "n_users": self.n_users,
            "sum_throughput": self.sum_throughput,
            "mean_rsrp": self.mean_rsrp,
            "mean_throughput": self.mean_throughput,
            "p_coverage": float(self.covered.sum()) / n,
            "p_service": float(self.satisfied.sum()) / n,
            "n_out_of_range": int(self.out_of_range.sum()),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=1, sort_keys=True)


def rsrp_from_arrays(geom: LinkGeometry, tilt, tx_power, operational, radio: RadioParams) -> np.ndarray:
    """(N, M) received power in dBm for per-cell tilt / power / on-off arrays."""
    a_v = np.minimum(12.0 * ((geom.theta - tilt[None, :]) / radio.theta_3db) ** 2, radio.sll_v)
    a_h = np.minimum(12.0 * (geom.phi / radio.phi_3db) ** 2, radio.sll_h)
    gain = radio.g_max - (a_v + a_h)
    gain = np.where(operational[None, :], gain, OUTAGE_GAIN_DBI)
    return tx_power[None, :] + gain + radio.g_r - geom.path_loss


def _config_arrays(configs: list[CellConfig], n_cells: int):
    by_id = {c.cell_id: c for c in configs}
    if sorted(by_id) != list(range(n_cells)):
        raise ValueError(f"configs must cover cells 0..{n_cells - 1} exactly once")
    ordered = [by_id[j] for j in range(n_cells)]
    tilt = np.array([c.tilt for c in ordered], dtype=float)
    power = np.array([c.tx_power for c in ordered], dtype=float)
    on = np.array([c.operational for c in ordered], dtype=bool)
    return tilt, power, on


def rsrp_matrix(layout: NetworkLayout, configs: list[CellConfig], radio: RadioParams) -> np.ndarray:
    tilt, power, on = _config_arrays(configs, layout.n_cells)
    return rsrp_from_arrays(link_geometry(layout, radio), tilt, power, on, radio)


def attach_users(rsrp: np.ndarray, operational, params: LinkParams,
                 max_users_per_cell: int | None = None) -> np.ndarray:
    """Serving cell per user (UNATTACHED if nothing covers it).

    Users start on their strongest covering cell. While a cell holds more than
    ``max_users_per_cell`` users, its weakest surplus users that still have another
    covering candidate move one rank down their own preference list. Users without an
    alternative stay put and share the cell's PRBs. ``None`` disables balancing.
    """
    n, m = rsrp.shape
    operational = np.asarray(operational, dtype=bool)
    if n == 0:
        return np.zeros(0, dtype=int)
    if max_users_per_cell is not None and max_users_per_cell < 1:
        raise ValueError("max_users_per_cell must be >= 1")

    covering = (rsrp >= params.rsrp_min) & operational[None, :]
    masked = np.where(covering, rsrp, -np.inf)
    # stable sort on the negated power: ties go to the lower cell id
    order = np.argsort(-masked, axis=1, kind="stable")
    n_cov = covering.sum(axis=1)
    attached = n_cov > 0
    ptr = np.zeros(n, dtype=int)
    rows = np.arange(n)

    if max_users_per_cell is not None:
        cap = max_users_per_cell
        while True:
            serving = order[rows, ptr]
            load = np.bincount(serving[attached], minlength=m)
            moved = False
            for c in np.flatnonzero(load > cap):
                members = np.flatnonzero(attached & (serving == c))
                movable = members[ptr[members] + 1 < n_cov[members]]
                k = min(load[c] - cap, movable.size)
                if k == 0:
                    continue
                weakest = movable[np.lexsort((movable, rsrp[movable, c]))[:k]]
                ptr[weakest] += 1
                moved = True
            if not moved:
                break

    serving = order[rows, ptr]
    return np.where(attached, serving, UNATTACHED)


def interference_and_sinr(rsrp: np.ndarray, attachment: np.ndarray, params: LinkParams,
                          operational=None) -> np.ndarray:
    """Linear SINR per user; interference sums every other operational cell at full power."""
    n, m = rsrp.shape
    if operational is None:
        operational = np.ones(m, dtype=bool)
    mw = dbm_to_mw(rsrp) * np.asarray(operational, dtype=bool)[None, :]
    attached = attachment != UNATTACHED
    safe = np.where(attached, attachment, 0)
    signal = mw[np.arange(n), safe]
    interference = mw.sum(axis=1) - signal
    noise = float(dbm_to_mw(params.noise_per_prb))
    sinr = signal / (np.maximum(interference, 0.0) + noise)
    return np.where(attached, sinr, 0.0)


def allocate_and_throughput(attachment: np.ndarray, sinr: np.ndarray, params: LinkParams,
                            rsrp: np.ndarray, in_range=None) -> LinkReport:
    """Equal PRB share within each cell, Shannon throughput, coverage/satisfaction flags."""
    n = attachment.size
    m = rsrp.shape[1] if rsrp.ndim == 2 else 0
    attached = attachment != UNATTACHED
    load = np.bincount(attachment[attached], minlength=m).astype(float)
    safe = np.where(attached, attachment, 0)
    prbs = np.where(attached, params.prbs_per_cell / np.maximum(load[safe], 1.0), 0.0) if n else np.zeros(0)
    th = params.prb_bandwidth * params.bits_per_symbol * prbs * np.log2(1.0 + sinr)
    th = np.where(attached, th, 0.0)

    if n:
        best = rsrp.max(axis=1) if m else np.full(n, -np.inf)
        user_rsrp = np.where(attached, rsrp[np.arange(n), safe], best)
    else:
        user_rsrp = np.zeros(0)
    covered = user_rsrp >= params.rsrp_min
    satisfied = covered & (th >= params.demand)
    if in_range is None:
        oor = np.zeros(n, dtype=bool)
    else:
        ref = np.where(attached, safe, np.argmax(rsrp, axis=1) if n and m else 0)
        oor = ~in_range[np.arange(n), ref] if n else np.zeros(0, dtype=bool)
    return LinkReport(
        user_id=np.arange(n), serving_cell=attachment.astype(int), rsrp=user_rsrp,
        sinr_linear=np.asarray(sinr, dtype=float), prbs=prbs, throughput=th,
        covered=covered, satisfied=satisfied, out_of_range=oor,
    )


def evaluate_arrays(geom: LinkGeometry, tilt, tx_power, operational, radio: RadioParams,
                    link: LinkParams) -> LinkReport:
    """Full evaluation from precomputed geometry; the hot path of the RL environment."""
    n, m = geom.shape
    rsrp = rsrp_from_arrays(geom, tilt, tx_power, operational, radio)
    att = attach_users(rsrp, operational, link, link.cell_cap(n, m))
    sinr = interference_and_sinr(rsrp, att, link, operational)
    return allocate_and_throughput(att, sinr, link, rsrp, geom.in_range)


def evaluate_network(layout: NetworkLayout, configs: list[CellConfig], radio: RadioParams,
                     link: LinkParams) -> LinkReport:
    tilt, power, on = _config_arrays(configs, layout.n_cells)
    return evaluate_arrays(link_geometry(layout, radio), tilt, power, on, radio, link)
