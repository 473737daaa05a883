"""Seeded invariant suites run by ``supq verify``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import arithmetic as ar
from .group import (
    Signature, act, automorphy, automorphy_via_factor, exp_Ht, factor, kak_decompose,
    lift_F, random_element, random_point,
)
from .integrand import Constant, DetPower
from .quadrature import incomplete_ratio_1d, integrate_simplex
from .rootdata import cov_identity_residual, max_R, max_R_arcosh, nu

SIGS = [(1, 1), (2, 1), (2, 2), (3, 2)]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _max(vals) -> float:
    return float(max(vals, default=0.0))


def suite_group(seed: int, count: int = 200) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for p, q in SIGS:
        sig = Signature(p, q)
        comp, coc, fac, kak, lift = [], [], [], [], []
        f = DetPower(1) if p == q else Constant(1.0)
        m = 2 * sig.n - 1
        for _ in range(count):
            g, h = random_element(sig, rng), random_element(sig, rng)
            z = random_point(sig, rng)
            comp.append(np.max(np.abs(act(g @ h, z).z - act(g, act(h, z)).z)))
            a1, d1 = automorphy(g @ h, z)
            a2, d2 = automorphy(g, act(h, z))
            a3, d3 = automorphy(h, z)
            coc.append(max(np.max(np.abs(a1 - a2 @ a3)), np.max(np.abs(d1 - d2 @ d3))))
            fa, fd = automorphy_via_factor(g, z)
            ga, gd = automorphy(g, z)
            coc.append(max(np.max(np.abs(fa - ga)), np.max(np.abs(fd - gd))))
            fac.append(np.max(np.abs(factor(sig, g.mat).reassemble() - g.mat)))
            k1, t, k2 = kak_decompose(g)
            kak.append(np.max(np.abs(k1.matrix() @ exp_Ht(sig, t).mat @ k2.matrix() - g.mat)))
            try:
                lift_F(f, m, g, tol=1e-9)
                lift.append(0.0)
            except ArithmeticError:
                lift.append(1.0)
        for name, vals in [("action composition", comp), ("automorphy cocycle", coc),
                           ("factor round trip", fac), ("KAK reconstruction", kak),
                           ("lift two routes", lift)]:
            worst = _max(vals)
            out.append(Check(f"{name} ({p},{q})", worst < 1e-9, f"max residual {worst:.2e}"))
    return out


def suite_rootdata(seed: int, count: int = 1000) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for p, q in [(1, 1), (2, 1), (2, 2), (3, 2), (4, 4)]:
        sig = Signature(p, q)
        worst = 0.0
        for _ in range(count):
            t = np.sort(rng.uniform(0.0, 3.0, size=q))[::-1]
            worst = max(worst, cov_identity_residual(sig, t))
        out.append(Check(f"cov identity ({p},{q})", worst < 1e-12, f"max residual {worst:.2e}"))
    gap = max(abs(max_R(n, N) - max_R_arcosh(n, N)) for n in range(2, 11) for N in range(1, 101))
    out.append(Check("radius identity", gap < 1e-12, f"max gap {gap:.2e}"))
    mono = all(nu(n, N + 1) > nu(n, N) and nu(n + 1, N) < nu(n, N) for n in range(2, 12) for N in range(1, 200))
    out.append(Check("nu monotonicity", mono, ""))
    return out


def suite_quadrature(seed: int) -> list[Check]:
    out = []
    vdm = integrate_simplex(2, lambda x: (x[:, 0] - x[:, 1]) ** 2, 1.0)
    # exact: int_0^1 int_0^x (x - y)^2 dy dx = 1/12
    out.append(Check("Vandermonde moment", abs(vdm.value - 1 / 12) < 1e-12, f"{vdm.value!r}"))
    worst = 0.0
    for l in range(13):
        for m in range(3, 16):
            a, b = 0.5 * l, 0.5 * m - 2
            dens = lambda x: x[:, 0] ** a * (1 - x[:, 0]) ** b
            full = integrate_simplex(1, dens, 1.0, (a, b)).value
            for N in (3, 7, 20, 60):
                R = nu(2, N)
                part = integrate_simplex(1, dens, R, (a, b)).value
                worst = max(worst, abs(part / full - incomplete_ratio_1d(m, l, R)))
    out.append(Check("q=1 quadrature vs incomplete beta", worst < 1e-11, f"max gap {worst:.2e}"))
    return out


def suite_lemmas(seed: int, samples: int = 20000) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    sig11 = Signature(1, 1)
    for N in (1, 2, 3, 5):
        bound = 4 * N * N + 2 + 60
        try:
            rep = ar.check_lemma_8_3(sig11, N, ar.enumerate_gamma(sig11, N, bound))
            out.append(Check(f"off-K norm bound N={N}", True, f"min off-K norm {rep.min_off_K_norm} >= {rep.required}"))
        except ar.Violation as exc:
            out.append(Check(f"off-K norm bound N={N}", False, str(exc)))
    for p, q in [(1, 1), (2, 1), (2, 2)]:
        sig = Signature(p, q)
        for R in (0.1, 0.5, 1.0, max_R(sig.n, 3)):
            mats = ar.sample_KSK_matrices(sig, R, samples, rng)
            norms = np.sum(np.abs(mats) ** 2, axis=(1, 2))
            bound = ar.ksk_norm_bound(sig, R)
            out.append(Check(f"KSK norm bound ({p},{q}) R={R:.4f}", bool(np.all(norms < bound)),
                             f"max {norms.max():.6g} < {bound:.6g}"))
    return out


SUITES: dict[str, Callable[[int], list[Check]]] = {
    "group": suite_group,
    "rootdata": suite_rootdata,
    "quadrature": suite_quadrature,
    "lemmas": suite_lemmas,
}


def run(suite: str, seed: int) -> list[Check]:
    names = list(SUITES) if suite == "all" else [suite]
    return [c for name in names for c in SUITES[name](seed)]
