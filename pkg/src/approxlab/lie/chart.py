"""Exponential charts of matrix Lie groups and the shrinking neighbourhood ladder.

Algebra elements are coordinate vectors over a fixed basis ``E_1..E_d``; the
norm is the Frobenius norm of ``sum c_i E_i``. The BCH product is
``x * y = log(exp(x) exp(y))`` computed with the batched routines in
:mod:`approxlab.lie.matfuncs`.

The ladder is ``U_n = exp(B_n)`` with ``B_n`` the closed algebra ball of radius
``rho_n = 17^(-(n+1)/4) eps`` and ``eps = min(eps1, 1/(2 C1), 1/(17 C0))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .matfuncs import LogDomainError, expm, log_domain_ok, logm

CONSTANT_FLOOR = 1e-9
RADIUS_TOL = 1e-9


class LieChart:
    """A matrix Lie algebra basis with exp/log, norm and (once estimated) BCH constants."""

    def __init__(self, basis, name: str = "chart", safety: float = 1.25):
        basis = np.asarray(basis, dtype=float)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise ValueError("basis must be a stack of square matrices")
        gram = np.einsum("aij,bij->ab", basis, basis)
        if np.linalg.matrix_rank(gram) < basis.shape[0]:
            raise ValueError("basis matrices are linearly dependent")
        if safety < 1:
            raise ValueError("safety factor must be at least 1")
        self.basis = basis
        self.name = name
        self.safety = float(safety)
        self.dim = basis.shape[0]
        self.size = basis.shape[1]
        self.gram = gram
        self._gram_inv = np.linalg.inv(gram)
        self._chol = np.linalg.cholesky(gram)
        self.C0: float | None = None
        self.C1: float | None = None
        self.eps0: float | None = None
        self.eps1: float | None = None
        self.eps: float | None = None
        self.raw: dict = {}

    def __repr__(self) -> str:
        return f"LieChart({self.name}, dim={self.dim}, eps={self.eps})"

    # -- coordinates ------------------------------------------------------------

    def matrix(self, c) -> np.ndarray:
        return np.einsum("...a,aij->...ij", np.asarray(c, dtype=float), self.basis)

    def coords(self, M) -> np.ndarray:
        """Coordinates of the orthogonal projection of M onto the algebra."""
        rhs = np.einsum("...ij,aij->...a", np.asarray(M, dtype=float), self.basis)
        return rhs @ self._gram_inv.T

    def norm(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        return np.sqrt(np.einsum("...a,ab,...b->...", c, self.gram, c))

    def exp(self, c) -> np.ndarray:
        return expm(self.matrix(c))

    def log(self, g, *, check: bool = True) -> np.ndarray:
        return self.coords(logm(g, check=check))

    def bch(self, x, y, *, check: bool = True) -> np.ndarray:
        """``x * y = log(exp(x) exp(y))``."""
        return self.log(self.exp(x) @ self.exp(y), check=check)

    def bch_many(self, *xs, check: bool = True) -> np.ndarray:
        """``x_1 * x_2 * ... * x_k`` through one product of exponentials."""
        g = self.exp(xs[0])
        for x in xs[1:]:
            g = g @ self.exp(x)
        return self.log(g, check=check)

    def in_domain(self, g) -> np.ndarray:
        return log_domain_ok(g)

    # -- sampling ---------------------------------------------------------------

    def _from_unit(self, u: np.ndarray) -> np.ndarray:
        """Map Euclidean coordinates to algebra coordinates with the same norm."""
        return np.linalg.solve(self._chol.T, u.T).T

    def sample_ball(self, rng: np.random.Generator, count: int, radius) -> np.ndarray:
        """Uniform samples from closed algebra balls; ``radius`` is a scalar or one per sample."""
        d = self.dim
        u = rng.normal(size=(count, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        u *= (np.asarray(radius, dtype=float) * rng.random(count) ** (1.0 / d))[:, None]
        return self._from_unit(u)

    def sample_sphere_radii(self, rng: np.random.Generator, radii: np.ndarray) -> np.ndarray:
        d = self.dim
        u = rng.normal(size=(radii.size, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return self._from_unit(u * radii[:, None])

    # -- constants --------------------------------------------------------------

    def estimate_constants(
        self,
        radius: float = 0.5,
        *,
        n_random: int = 100_000,
        sobol_log2: int = 12,
        seed: int = 0,
        max_shrink: int = 30,
    ) -> "LieChart":
        """Sample the BCH deviation constants and set ``eps``.

        C0 bounds ``|x*y - (x+y)| / (|x||y|)``; C1 bounds both
        ``|x*y*(-x)*(-y)|`` and ``|x*y*(-x) - y|`` over ``|x||y|``. Both are the
        sampled maxima times ``safety``, floored at 1e-9. A radius where some
        sample leaves the log domain is halved and retried. After a first pass
        the constants are re-sampled on the ball of radius ``eps`` and eps is
        recomputed (never increased).
        """
        rng = np.random.default_rng(seed)
        R = float(radius)
        for _ in range(max_shrink):
            try:
                c0, c1 = self._sample_constants(R, rng, n_random, sobol_log2)
                break
            except LogDomainError:
                R /= 2
        else:
            raise LogDomainError(f"log domain fails even at radius {R}")
        self.eps0 = self.eps1 = R
        self.raw = {"C0_sampled": c0, "C1_sampled": c1, "radius": R}
        self._set_eps(c0, c1, R)
        # second pass on the final ball
        r2 = self.eps
        c0b, c1b = self._sample_constants(r2, rng, n_random, sobol_log2)
        self.raw.update({"C0_sampled_eps": c0b, "C1_sampled_eps": c1b, "radius_eps": r2})
        self._set_eps(c0b, c1b, R, cap=r2)
        return self

    def _set_eps(self, c0: float, c1: float, eps1: float, cap: float | None = None) -> None:
        self.C0 = max(self.safety * c0, CONSTANT_FLOOR)
        self.C1 = max(self.safety * c1, CONSTANT_FLOOR)
        eps = min(eps1, 1.0 / (2 * self.C1), 1.0 / (17 * self.C0))
        self.eps = eps if cap is None else min(eps, cap)

    def _pairs(self, R: float, rng: np.random.Generator, n_random: int, sobol_log2: int) -> tuple[np.ndarray, np.ndarray]:
        d = self.dim
        # low-discrepancy grid over pairs of points in the ball, then random pairs
        sob = qmc.Sobol(d=2 * d + 2, scramble=True, seed=rng).random_base2(sobol_log2)
        dirs = np.sqrt(2.0) * _erfinv(2 * np.clip(sob[:, : 2 * d], 1e-12, 1 - 1e-12) - 1)
        u, v = dirs[:, :d], dirs[:, d:]
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        u *= R * sob[:, 2 * d, None] ** (1.0 / d)
        v *= R * sob[:, 2 * d + 1, None] ** (1.0 / d)
        x = np.vstack([self._from_unit(u), self.sample_ball(rng, n_random, R)])
        y = np.vstack([self._from_unit(v), self.sample_ball(rng, n_random, R)])
        return x, y

    def _sample_constants(self, R: float, rng, n_random: int, sobol_log2: int) -> tuple[float, float]:
        x, y = self._pairs(R, rng, n_random, sobol_log2)
        nx, ny = self.norm(x), self.norm(y)
        keep = (nx > 1e-6 * R) & (ny > 1e-6 * R)
        x, y, prod = x[keep], y[keep], (nx * ny)[keep]
        ex, ey = self.exp(x), self.exp(y)
        ex_inv, ey_inv = self.exp(-x), self.exp(-y)
        z = self.log(ex @ ey)
        c0 = float(np.max(self.norm(z - (x + y)) / prod))
        comm = self.log(ex @ ey @ ex_inv @ ey_inv)
        conj = self.log(ex @ ey @ ex_inv) - y
        c1 = float(max(np.max(self.norm(comm) / prod), np.max(self.norm(conj) / prod)))
        return c0, c1

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "safety": self.safety,
            "C0": self.C0,
            "C1": self.C1,
            "eps0": self.eps0,
            "eps1": self.eps1,
            "eps": self.eps,
            "sampled": dict(sorted(self.raw.items())),
        }


def _erfinv(x: np.ndarray) -> np.ndarray:
    from scipy.special import erfinv

    return erfinv(x)


# -- standard charts ---------------------------------------------------------------------


def so3_basis() -> np.ndarray:
    return np.array(
        [
            [[0, 0, 0], [0, 0, -1], [0, 1, 0]],
            [[0, 0, 1], [0, 0, 0], [-1, 0, 0]],
            [[0, -1, 0], [1, 0, 0], [0, 0, 0]],
        ],
        dtype=float,
    )


def sl2_basis() -> np.ndarray:
    return np.array([[[1, 0], [0, -1]], [[0, 1], [0, 0]], [[0, 0], [1, 0]]], dtype=float)


def diagonal_basis(n: int = 2) -> np.ndarray:
    out = np.zeros((n, n, n))
    for i in range(n):
        out[i, i, i] = 1.0
    return out


CHARTS = {"so3": so3_basis, "sl2": sl2_basis, "diag2": lambda: diagonal_basis(2)}


def make_chart(name: str, safety: float = 1.25, **estimate) -> LieChart:
    if name not in CHARTS:
        raise KeyError(f"unknown chart {name!r}; known: {', '.join(sorted(CHARTS))}")
    return LieChart(CHARTS[name](), name=name, safety=safety).estimate_constants(**estimate)


def chart_from_spec(spec: dict) -> LieChart:
    """Chart from JSON: ``{"name", "basis": [[row-major matrices]], "inner_product", "safety", "seed", "radius"}``."""
    if spec.get("inner_product", "frobenius") != "frobenius":
        raise ValueError("only the frobenius inner product is supported")
    if "basis" in spec:
        basis = np.asarray(spec["basis"], dtype=float)
        if basis.ndim == 2:
            n = int(round(math.sqrt(basis.shape[1])))
            basis = basis.reshape(basis.shape[0], n, n)
    else:
        basis = CHARTS[spec["name"]]()
    chart = LieChart(basis, name=spec.get("name", "custom"), safety=float(spec.get("safety", 1.25)))
    kw = {"seed": int(spec.get("seed", 0))}
    if "radius" in spec:
        kw["radius"] = float(spec["radius"])
    if "n_random" in spec:
        kw["n_random"] = int(spec["n_random"])
    return chart.estimate_constants(**kw)


# -- ladder -----------------------------------------------------------------------------


@dataclass
class BallLadder:
    eps: float
    n_max: int
    radii: np.ndarray = field(init=False)

    def __post_init__(self):
        n = np.arange(self.n_max + 1)
        self.radii = self.eps * 17.0 ** (-(n + 1) / 4.0)

    def rho(self, n):
        """Radius of B_n for any n >= 0 (not limited to n_max); vectorised over n."""
        return self.eps * 17.0 ** (-(np.asarray(n) + 1) / 4.0)

    def to_json(self) -> dict:
        return {"eps": self.eps, "n_max": self.n_max, "radii": [float(r) for r in self.radii]}


def build_ladder(chart: LieChart, n_max: int) -> BallLadder:
    if chart.eps is None:
        raise ValueError("estimate the chart constants first")
    return BallLadder(chart.eps, int(n_max))


# -- property verification ---------------------------------------------------------------


@dataclass
class PropertyCheck:
    prop: int
    passed: bool
    samples: int
    counterexamples: list = field(default_factory=list)
    worst_margin: float = 0.0  # largest (observed norm / allowed radius) - 1; <= tol means pass
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "property": self.prop,
            "passed": self.passed,
            "samples": self.samples,
            "counterexamples": self.counterexamples[:10],
            "counterexample_count": len(self.counterexamples),
            "worst_margin": float(self.worst_margin),
            "tolerance": RADIUS_TOL,
            "details": self.details,
        }


def _levels(rng, n_max: int, count: int) -> np.ndarray:
    return rng.integers(0, n_max + 1, size=count)


def _ratio_check(prop: int, observed: np.ndarray, allowed: np.ndarray, meta: list) -> PropertyCheck:
    ratio = observed / allowed - 1.0
    bad = np.flatnonzero(ratio > RADIUS_TOL)
    cex = [dict(meta[i], excess=float(ratio[i])) for i in bad[:50]]
    return PropertyCheck(prop, bad.size == 0, observed.size, cex, float(ratio.max(initial=-1.0)))


def verify_property(chart: LieChart, ladder: BallLadder, prop: int, samples: int = 10_000, seed: int = 0) -> PropertyCheck:
    """Sampled check of one ladder property; counterexamples are returned, never raised."""
    rng = np.random.default_rng([seed, prop])
    N = ladder.n_max
    rho = ladder.rho
    if prop == 1:
        return _verify_cover(chart, ladder, samples, rng)
    if prop == 2:
        # U_{n+1}^2 ⊆ U_n
        lv = _levels(rng, N, samples)
        x = chart.sample_ball(rng, samples, rho(lv + 1))
        y = chart.sample_ball(rng, samples, rho(lv + 1))
        z = chart.bch(x, y)
        allowed = rho(lv)
        return _ratio_check(2, chart.norm(z), allowed, [{"n": int(n)} for n in lv])
    if prop == 3:
        # g^-1 U_{n+1} g ⊆ U_n for g in U_0
        lv = _levels(rng, N, samples)
        g = chart.sample_ball(rng, samples, rho(0))
        a = chart.sample_ball(rng, samples, rho(lv + 1))
        z = chart.bch_many(-g, a, g)
        allowed = rho(lv)
        return _ratio_check(3, chart.norm(z), allowed, [{"n": int(n)} for n in lv])
    if prop == 4:
        # [U_n1, U_n2] ⊆ U_n for n <= n1 + n2 (checked at n = n1 + n2 <= n_max, the tightest case)
        n1 = rng.integers(0, N + 1, size=samples)
        n2 = np.floor(rng.random(samples) * (N - n1 + 1)).astype(int)
        x = chart.sample_ball(rng, samples, rho(n1))
        y = chart.sample_ball(rng, samples, rho(n2))
        z = chart.bch_many(-x, -y, x, y)
        allowed = rho(n1 + n2)
        return _ratio_check(4, chart.norm(z), allowed, [{"n1": int(a), "n2": int(b)} for a, b in zip(n1, n2)])
    if prop == 5:
        # x^2 = y^2 in U_0 forces x = y: the principal log of x^2 is 2 log x
        x = chart.sample_ball(rng, samples, rho(0))
        sq = chart.exp(x)
        back = chart.log(sq @ sq)
        err = chart.norm(back - 2 * x) / np.maximum(chart.norm(2 * x), 1e-300)
        bad = np.flatnonzero(err > RADIUS_TOL)
        cex = [{"index": int(i), "relative_error": float(err[i])} for i in bad[:50]]
        return PropertyCheck(5, bad.size == 0, samples, cex, float(err.max(initial=0.0)))
    if prop == 6:
        return _verify_power(chart, ladder, samples, rng)
    raise ValueError("property must be in 1..6")


def _verify_power(chart: LieChart, ladder: BallLadder, samples: int, rng) -> PropertyCheck:
    """U_{n+4} = {x in U_0 : x^17 in U_n}, compared pointwise on log-uniform radii."""
    N = ladder.n_max
    rho = ladder.rho
    lv = _levels(rng, N, samples)
    lo = rho(lv + 4) * 0.5
    hi = np.minimum(rho(lv + 4) * 2.0, rho(0))
    radii = np.exp(rng.uniform(np.log(lo), np.log(hi)))
    x = chart.sample_sphere_radii(rng, radii)
    g = chart.exp(x)
    g17 = np.linalg.matrix_power(g, 17)
    n17 = chart.norm(chart.log(g17))
    cex = []
    skipped = 0
    worst = 0.0
    for i, n in enumerate(lv):
        r_in, r_n = rho(n + 4), rho(n)
        # skip points within tolerance of either boundary
        if abs(radii[i] / r_in - 1) <= RADIUS_TOL or abs(n17[i] / r_n - 1) <= RADIUS_TOL:
            skipped += 1
            continue
        left = radii[i] <= r_in
        right = n17[i] <= r_n
        worst = max(worst, abs(n17[i] / (17 * radii[i]) - 1))
        if left != right:
            cex.append({"n": int(n), "norm": float(radii[i]), "norm_17": float(n17[i])})
    chk = PropertyCheck(6, not cex, samples, cex, worst)
    chk.details = {"skipped_near_boundary": skipped, "max_relative_log_error": worst}
    return chk


def _verify_cover(chart: LieChart, ladder: BallLadder, samples: int, rng) -> PropertyCheck:
    """Per level: greedy rho_{n+2}-separated Z over sampled points of B_n, then each
    sampled x must satisfy |(-z)*x| <= rho_{n+1} for its nearest z, and |Z| <= 17^d."""
    N = ladder.n_max
    rho = ladder.rho
    d = chart.dim
    limit = 17**d
    per_level = max(1, samples // (N + 1))
    cex = []
    counts = []
    worst = -1.0
    for n in range(N + 1):
        x = chart.sample_ball(rng, per_level, rho(n))
        sep = rho(n + 2)
        # Euclidean coordinates for fast distances: |c|_G = |L^T c|
        ex = x @ chart._chol
        Z: list[int] = []
        Zc = np.empty((0, d))
        assign = np.empty(per_level, dtype=int)
        for i in range(per_level):
            if Zc.shape[0]:
                dist = np.linalg.norm(Zc - ex[i], axis=1)
                j = int(np.argmin(dist))
                if dist[j] <= sep:
                    assign[i] = Z[j]
                    continue
            Z.append(i)
            Zc = np.vstack([Zc, ex[i]])
            assign[i] = i
        counts.append(len(Z))
        z = chart.bch(-x[assign], x)
        ratio = chart.norm(z) / rho(n + 1) - 1.0
        worst = max(worst, float(ratio.max()))
        for i in np.flatnonzero(ratio > RADIUS_TOL)[:20]:
            cex.append({"n": n, "excess": float(ratio[i])})
        if len(Z) > limit:
            cex.append({"n": n, "cover_count": len(Z), "limit": limit})
    chk = PropertyCheck(1, not cex, per_level * (N + 1), cex, worst)
    chk.details = {"cover_counts": counts, "limit": limit, "separation": "rho_(n+2)"}
    return chk


def verify_ladder(chart: LieChart, n_max: int = 6, samples: int = 10_000, seed: int = 0) -> dict:
    ladder = build_ladder(chart, n_max)
    checks = [verify_property(chart, ladder, p, samples, seed) for p in range(1, 7)]
    return {
        "chart": chart.to_json(),
        "ladder": ladder.to_json(),
        "properties": [c.to_json() for c in checks],
        "passed": all(c.passed for c in checks),
    }
