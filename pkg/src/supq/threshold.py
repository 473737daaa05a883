"""Search for the minimal level ``N_0 >= 3`` at which the truncated mass
exceeds half of the total mass, and reproduction of the published grids.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional

import numpy as np

from .group import Signature
from .integrand import (
    Constant, DetPower, KAverageConfig, MonomialSum, PolySpec, WeightSpec, has_closed_form,
    phi_k_avg, phi_k_batches,
)
from .quadrature import NotConverged, QuadConfig, incomplete_ratio_1d, integrate_simplex
from .rootdata import mu_batch, nu

N_FLOOR = 3
DEFAULT_MARGIN = 1e-6
BETA_ABS_ERR = 1e-13
MC_BATCHES = 16
MC_MAX_SAMPLES = 64_000
MC_REL_TOL = 1e-5  # quadrature error is negligible next to the sampling error


class Undecided(ArithmeticError):
    """The ratio stays within the decision margin of 1/2 at the precision cap."""

    def __init__(self, N: int, ratio: float, abs_err: float, margin: float):
        super().__init__(
            f"N={N}: ratio {ratio:.12f} (err {abs_err:.1e}) is within {margin:.1e} of 1/2"
        )
        self.N, self.ratio, self.abs_err, self.margin = N, ratio, abs_err, margin


@dataclass(frozen=True)
class N0Query:
    weight: WeightSpec
    poly: PolySpec
    cfg: QuadConfig = QuadConfig()
    margin: float = DEFAULT_MARGIN
    kavg: KAverageConfig = field(default_factory=lambda: KAverageConfig(samples=2000))
    path: str = "quadrature"  # or "incomplete_beta" (p = q = 1, det powers)
    n_max: int = 100_000

    def __post_init__(self):
        self.poly.check(self.weight.sig)
        if isinstance(self.poly, Constant) and self.poly.c == 0:
            raise ValueError("polynomial must be nonzero")
        if isinstance(self.poly, MonomialSum) and self.poly.is_zero():
            raise ValueError("polynomial must be nonzero")
        if self.path not in ("quadrature", "incomplete_beta"):
            raise ValueError(f"unknown path {self.path!r}")
        if self.path == "incomplete_beta":
            sig = self.weight.sig
            if (sig.p, sig.q) != (1, 1) or not isinstance(self.poly, DetPower):
                raise ValueError("incomplete_beta path needs p = q = 1 and a det power")

    @property
    def sig(self) -> Signature:
        return self.weight.sig


@dataclass(frozen=True)
class N0Result:
    n0: int
    ratio_at_n0: float
    ratio_below: Optional[float]
    decided_margin: float
    abs_err: float = 0.0


def sing_exponents(query: N0Query) -> tuple[float, float]:
    """Endpoint exponents of the density at ``x = 0`` and ``x = 1``."""
    sig, m = query.sig, query.weight.m
    a = float(sig.p - sig.q)
    if isinstance(query.poly, DetPower):
        a += 0.5 * query.poly.l
    return a, 0.5 * m - sig.n


def density(query: N0Query):
    """Vectorized ``x -> (int_K phi(k, x) dk) * mu(x)``."""
    sig = query.sig

    def fn(x):
        return phi_k_avg(query.weight, query.poly, x, query.kavg)[0] * mu_batch(sig, x)

    return fn


def density_batches(query: N0Query, batches: int = MC_BATCHES):
    """Like :func:`density`, one column per disjoint block of Haar samples."""
    sig = query.sig

    def fn(x):
        return phi_k_batches(query.weight, query.poly, x, query.kavg, batches) * mu_batch(sig, x)[:, None]

    return fn


def _is_mc(query: N0Query) -> bool:
    return not has_closed_form(query.poly, query.kavg)


def _mass(query: N0Query, R: float, cfg: QuadConfig) -> tuple[float, float]:
    res = integrate_simplex(query.sig.q, density(query), R, sing_exponents(query), cfg)
    return res.value, res.abs_err


@lru_cache(maxsize=1024)
def _total_mass(query: N0Query, cfg: QuadConfig) -> tuple[float, float]:
    return _mass(query, 1.0, cfg)


@lru_cache(maxsize=256)
def _total_mass_batches(query: N0Query, cfg: QuadConfig):
    return integrate_simplex(query.sig.q, density_batches(query), 1.0, sing_exponents(query), cfg)


def _mc_ratio(query: N0Query, R: float, cfg: QuadConfig) -> tuple[float, float]:
    # numerator and denominator share the samples, so their errors largely
    # cancel in the ratio; batch means capture that correlation
    cfg = replace(cfg, rel_tol=max(cfg.rel_tol, MC_REL_TOL))
    num = integrate_simplex(query.sig.q, density_batches(query), R, sing_exponents(query), cfg)
    den = _total_mass_batches(query, cfg)
    r = float(num.value.sum() / den.value.sum())
    per_batch = num.value / den.value
    stderr = float(per_batch.std(ddof=1) / np.sqrt(per_batch.size))
    quad = r * (num.abs_err / abs(num.value).min() + den.abs_err / abs(den.value).min())
    return r, stderr + quad


def ratio(query: N0Query, N: int, cfg: QuadConfig | None = None) -> tuple[float, float]:
    """Truncated-to-total mass ratio at level ``N`` with propagated error.

    For Monte Carlo K-averages the error is the batch-means standard error
    of the ratio plus the quadrature error.
    """
    if N < 1:
        raise ValueError("level N must be positive")
    cfg = cfg or query.cfg
    R = nu(query.sig.n, N)
    if query.path == "incomplete_beta":
        return incomplete_ratio_1d(query.weight.m, query.poly.l, R), BETA_ABS_ERR
    if _is_mc(query):
        return _mc_ratio(query, R, cfg)
    num, enum = _mass(query, R, cfg)
    den, eden = _total_mass(query, cfg)
    r = num / den
    return r, abs(r) * (enum / abs(num) + eden / abs(den))


def _escalate(query: N0Query, cfg: QuadConfig) -> tuple[N0Query, QuadConfig] | None:
    if query.path != "quadrature":
        return None
    if _is_mc(query):
        if 2 * query.kavg.samples > MC_MAX_SAMPLES:
            return None
        return replace(query, kavg=replace(query.kavg, samples=2 * query.kavg.samples)), cfg
    nxt = cfg.escalated()
    return None if nxt is None else (query, nxt)


def decide(query: N0Query, N: int) -> tuple[float, float]:
    """Ratio at ``N`` computed until it is separated from 1/2, else :class:`Undecided`.

    Escalation refines the quadrature, or doubles the Haar sample count for
    Monte Carlo K-averages.
    """
    cfg = query.cfg
    while True:
        try:
            r, err = ratio(query, N, cfg)
        except NotConverged as exc:
            raise Undecided(N, float("nan"), float("inf"), query.margin) from exc
        if abs(r - 0.5) > max(query.margin, 10.0 * err):
            return r, err
        step = _escalate(query, cfg)
        if step is None:
            raise Undecided(N, r, err, query.margin)
        query, cfg = step


def find_n0(query: N0Query) -> N0Result:
    """Smallest ``N >= 3`` whose ratio exceeds 1/2 (linear scan; the ratio grows with N)."""
    below = None
    worst_err = 0.0
    for N in range(N_FLOOR, query.n_max + 1):
        r, err = decide(query, N)
        worst_err = max(worst_err, err)
        if r > 0.5:
            margin = abs(r - 0.5) if below is None else min(abs(r - 0.5), abs(below - 0.5))
            return N0Result(N, r, below, margin, worst_err)
        below = r
    raise Undecided(query.n_max, below, worst_err, query.margin)


# ---------------------------------------------------------------------------
# tables

PUBLISHED = {1: "table1.csv", 2: "table2.csv"}
PUBLISHED_RANGES = {1: (range(3, 16), range(0, 13)), 2: (range(7, 21), range(0, 13))}


def load_published(p: int) -> dict[tuple[int, int], int]:
    """Golden copy of a published grid keyed by ``(l, m)``."""
    text = resources.files("supq.data").joinpath(PUBLISHED[p]).read_text()
    return {(int(r["l"]), int(r["m"])): int(r["n0"]) for r in csv.DictReader(io.StringIO(text))}


@dataclass(frozen=True)
class Cell:
    l: int
    m: int
    result: Optional[N0Result]
    note: str = ""

    @property
    def n0(self) -> Optional[int]:
        return None if self.result is None else self.result.n0


def _cell(args) -> Cell:
    p, l, m, cfg, margin, path = args
    sig = Signature(p, p)
    q = N0Query(WeightSpec(sig, m), DetPower(l), cfg=cfg, margin=margin, path=path)
    try:
        return Cell(l, m, find_n0(q))
    except Undecided as exc:
        return Cell(l, m, None, str(exc))


def reproduce_table(
    p: int,
    m_range: Iterable[int],
    l_range: Iterable[int],
    cfg: QuadConfig = QuadConfig(),
    margin: float = DEFAULT_MARGIN,
    path: str = "quadrature",
    threads: int = 1,
) -> list[Cell]:
    """``N_0(chi_m, det^l)`` on the ``l x m`` grid for ``p = q``, row-major in ``l``."""
    jobs = [(p, l, m, cfg, margin, path) for l in l_range for m in m_range]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_cell, jobs, chunksize=4))
    return [_cell(j) for j in jobs]


def compare_published(p: int, cells: list[Cell]) -> tuple[int, int, list[str]]:
    gold = load_published(p)
    mismatches = []
    hits = 0
    for c in cells:
        want = gold.get((c.l, c.m))
        if want is None:
            continue
        if c.n0 == want:
            hits += 1
        else:
            got = "undecided" if c.n0 is None else c.n0
            mismatches.append(f"l={c.l} m={c.m}: got {got}, published {want}")
    return hits, len(gold), mismatches


def to_csv(cells: list[Cell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["l", "m", "n0"])
    for c in cells:
        w.writerow([c.l, c.m, "undecided" if c.n0 is None else c.n0])
    return buf.getvalue()


def to_json(cells: list[Cell]) -> str:
    rows = []
    for c in cells:
        res = c.result
        rows.append({
            "l": c.l,
            "m": c.m,
            "n0": None if res is None else res.n0,
            "ratio_at_n0": None if res is None else res.ratio_at_n0,
            "margin": None if res is None else res.decided_margin,
        })
    return json.dumps(rows, indent=1)
