"""Manufactured trigonometric fields and pointwise identity verification.

A recipe is a finite sum of rational multiples of products
``f(kx x) g(ky y) h(kz z)`` with ``f, g, h`` in {sin, cos}. Derivatives of a
recipe are recipes, so every derivative used below is exact; spectral
operators are used only for divergences/gradients of products, which are
band-limited and therefore also differentiated exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .spectral import Grid, make_grid

COS, SIN = 0, 1


@dataclass(frozen=True)
class Term:
    coef: Fraction
    kinds: tuple  # (COS|SIN,) * 3
    ks: tuple  # non-negative ints

    def diff(self, axis: int) -> Optional["Term"]:
        k = self.ks[axis]
        if k == 0:
            return None
        kinds = list(self.kinds)
        if kinds[axis] == SIN:
            kinds[axis] = COS
            c = self.coef * k
        else:
            kinds[axis] = SIN
            c = -self.coef * k
        return Term(c, tuple(kinds), self.ks)


@dataclass(frozen=True)
class Recipe:
    terms: tuple = ()

    @classmethod
    def constant(cls, c) -> "Recipe":
        return cls((Term(Fraction(c), (COS, COS, COS), (0, 0, 0)),))

    def __add__(self, other: "Recipe") -> "Recipe":
        return Recipe(self.terms + other.terms)

    def __neg__(self) -> "Recipe":
        return Recipe(tuple(Term(-t.coef, t.kinds, t.ks) for t in self.terms))

    def __sub__(self, other: "Recipe") -> "Recipe":
        return self + (-other)

    def diff(self, *axes: int) -> "Recipe":
        terms = self.terms
        for a in axes:
            terms = tuple(d for d in (t.diff(a) for t in terms) if d is not None)
        return Recipe(terms)

    def kmax(self) -> int:
        return max((max(t.ks) for t in self.terms), default=0)

    def evaluate(self, grid: Grid) -> np.ndarray:
        if not np.isclose(grid.L, 2 * np.pi):
            raise ValueError("manufactured recipes live on the 2*pi box")
        coords = grid.coords()
        out = np.zeros(grid.shape)
        for t in self.terms:
            val = float(t.coef)
            for c, kind, k in zip(coords, t.kinds, t.ks):
                val = val * (np.sin(k * c) if kind == SIN else np.cos(k * c))
            out = out + val
        return out

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for t in self.terms:
            fac = [f"{'sin' if kd == SIN else 'cos'}({k}{ax})" for kd, k, ax in zip(t.kinds, t.ks, "xyz") if k]
            parts.append(f"{t.coef}" + ("*" + "*".join(fac) if fac else ""))
        return " + ".join(parts)


def curl_recipe(a: tuple) -> tuple:
    return (
        a[2].diff(1) - a[1].diff(2),
        a[0].diff(2) - a[2].diff(0),
        a[1].diff(0) - a[0].diff(1),
    )


@dataclass(frozen=True)
class ManufacturedFieldSet:
    """Recipes for ``rho, u, v (solenoidal), P, e, B (solenoidal)``."""

    seed: int
    mode_budget: int
    rho: Recipe
    u: tuple
    v: tuple
    P: Recipe
    e: Recipe
    B: tuple
    orthogonal: bool = False

    def recipe(self, name: str) -> Recipe:
        if name in ("rho", "P", "e"):
            return getattr(self, name)
        return getattr(self, name[0])[int(name[1])]

    def derivative(self, name: str, *axes: int) -> Recipe:
        return self.recipe(name).diff(*axes)


def _rand_term(rng, kmax, allowed_axes=(0, 1, 2)) -> Term:
    while True:
        ks = tuple(int(rng.integers(0, kmax + 1)) if a in allowed_axes else 0 for a in range(3))
        if any(ks):
            break
    kinds = tuple(int(rng.integers(0, 2)) if k else COS for k in ks)
    coef = Fraction(int(rng.integers(1, 5)), int(rng.integers(1, 5))) * (1 if rng.integers(0, 2) else -1)
    return Term(coef, kinds, ks)


def _rand_recipe(rng, budget, kmax, axes=(0, 1, 2), offset=None, total=None) -> Recipe:
    terms = [_rand_term(rng, kmax, axes) for _ in range(budget)]
    if total is not None:
        s = sum(abs(t.coef) for t in terms)
        terms = [Term(t.coef * total / s, t.kinds, t.ks) for t in terms]
    r = Recipe(tuple(terms))
    if offset is not None:
        r = Recipe.constant(offset) + r
    return r


def generate(seed: int, mode_budget: int = 2, kmax: int = 3, orthogonal: bool = False) -> ManufacturedFieldSet:
    """Reproducible manufactured fields with ``mode_budget`` terms per component.

    ``rho = 1 + sum`` with coefficient magnitudes summing to 1/2, so
    ``rho >= 1/2`` everywhere. ``v`` and ``B`` are curls of random vector
    potentials. With ``orthogonal=True`` the density depends on ``z`` only
    and ``u = v = (a(z), b(z), w(x, y))``: the vorticity has no z component,
    so ``w.grad rho`` vanishes identically while the helicity does not.
    """
    if mode_budget < 1:
        raise ValueError("mode_budget must be >= 1")
    rng = np.random.default_rng(seed)
    b, K = mode_budget, kmax
    if orthogonal:
        rho = _rand_recipe(rng, b, K, axes=(2,), offset=1, total=Fraction(1, 2))
        u = v = (
            _rand_recipe(rng, b, K, axes=(2,)),
            _rand_recipe(rng, b, K, axes=(2,)),
            _rand_recipe(rng, b, K, axes=(0, 1)),
        )
    else:
        rho = _rand_recipe(rng, b, K, offset=1, total=Fraction(1, 2))
        u = tuple(_rand_recipe(rng, b, K) for _ in range(3))
        v = curl_recipe(tuple(_rand_recipe(rng, b, K) for _ in range(3)))
    P = _rand_recipe(rng, b, K, offset=2)
    e = _rand_recipe(rng, b, K, offset=1, total=Fraction(1, 2))
    B = curl_recipe(tuple(_rand_recipe(rng, b, K) for _ in range(3)))
    return ManufacturedFieldSet(seed, mode_budget, rho, u, v, P, e, B, orthogonal)


class Fields:
    """Cached grid evaluation of a field set and its exact derivatives."""

    def __init__(self, fs: ManufacturedFieldSet, grid: Grid):
        self.fs = fs
        self.grid = grid
        self._cache = {}

    def s(self, name: str, *axes: int) -> np.ndarray:
        key = (name, tuple(sorted(axes)))
        if key not in self._cache:
            self._cache[key] = self.fs.derivative(name, *axes).evaluate(self.grid)
        return self._cache[key]

    def vec(self, name: str, *axes: int) -> np.ndarray:
        return np.stack([self.s(f"{name}{i}", *axes) for i in range(3)])

    def grad(self, name: str) -> np.ndarray:
        return np.stack([self.s(name, j) for j in range(3)])

    def jac(self, name: str, *axes: int) -> np.ndarray:
        """``J[i, j] = d_j name_i`` (optionally differentiated further along ``axes``)."""
        return np.stack([np.stack([self.s(f"{name}{i}", j, *axes) for j in range(3)]) for i in range(3)])

    def div(self, name: str, *axes: int) -> np.ndarray:
        return sum(self.s(f"{name}{i}", i, *axes) for i in range(3))

    def curl(self, name: str, *axes: int) -> np.ndarray:
        d = lambda i, j: self.s(f"{name}{i}", j, *axes)  # noqa: E731
        return np.stack([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)])


def _dot(a, b):
    return np.sum(a * b, axis=0)


def _cross(a, b):
    return np.cross(a, b, axis=0)


def _adv(u, jac):
    """``(u.grad) f`` for a vector field with Jacobian ``jac[i, j] = d_j f_i``."""
    return np.einsum("j...,ij...->i...", u, jac)


def _scale(*terms) -> float:
    return max(float(np.max(np.abs(t))) for t in terms)


# momentum tendency ``-u.grad u - rho^-1 grad P`` and its gradient, exactly


def _momentum_tendency(F: Fields, un: str):
    rho, gr = F.s("rho"), F.grad("rho")
    u, J = F.vec(un), F.jac(un)
    gP = F.grad("P")
    return -_adv(u, J) - gP / rho


def _momentum_tendency_grad(F: Fields, un: str, k: int):
    """``d_k`` of the momentum tendency."""
    rho = F.s("rho")
    u, J = F.vec(un), F.jac(un)
    Jk = F.jac(un, k)
    uk = F.vec(un, k)
    gP = F.grad("P")
    gPk = np.stack([F.s("P", j, k) for j in range(3)])
    return -_adv(uk, J) - _adv(u, Jk) + F.s("rho", k) * gP / rho**2 - gPk / rho


def _momentum_tendency_curl(F: Fields, un: str):
    d = [_momentum_tendency_grad(F, un, k) for k in range(3)]  # d[k][i] = d_k a_i
    return np.stack([d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0]])


def _density_tendency(F: Fields, un: str, *axes: int):
    """``-div(rho u)`` (optionally differentiated once)."""
    if not axes:
        return -_dot(F.vec(un), F.grad("rho")) - F.s("rho") * F.div(un)
    (k,) = axes
    return -(
        _dot(F.vec(un, k), F.grad("rho"))
        + _dot(F.vec(un), np.stack([F.s("rho", j, k) for j in range(3)]))
        + F.s("rho", k) * F.div(un)
        + F.s("rho") * F.div(un, k)
    )


# identity catalogue -----------------------------------------------------------
# Each entry maps a Fields evaluator to (stages, scale): every stage must
# agree with the first one pointwise; scale is the largest individual term.


def id_pressure_divergence(F: Fields):
    g = F.grid
    rho, gr, u, w, gP, P = F.s("rho"), F.grad("rho"), F.vec("u"), F.curl("u"), F.grad("P"), F.s("P")
    t1 = rho * _dot(w, gP)
    t2 = _dot(u, _cross(gr, gP))
    s0 = t1 - t2
    s1 = _dot(gP, rho * w + _cross(gr, u))
    curl_m = g.curl(rho * u)
    s2 = _dot(gP, curl_m)
    s3 = g.div(P * curl_m)
    return [s0, s1, s2, s3], _scale(t1, t2, s3)


def id_kinetic_source(F: Fields):
    g = F.grid
    rho, gr, u, w = F.s("rho"), F.grad("rho"), F.vec("v"), F.curl("v")
    u2 = _dot(u, u)
    gke = np.einsum("i...,ij...->j...", u, F.jac("v"))  # grad(|u|^2/2)
    q = _dot(w, gr)
    s0 = rho**2 * _dot(w, gke)
    a = _dot(w, g.grad(0.5 * rho**2 * u2))
    b = u2 * _dot(w, rho * gr)
    s1 = a - b
    c = g.div(0.5 * w * rho**2 * u2)
    d = q * rho * u2
    s2 = c - d
    return [s0, s1, s2], _scale(s0, a, b, c, d)


def id_helicity_law_no_pv(F: Fields):
    """Helicity conservation law on fields with ``w . grad rho = 0``: no source."""
    (lhs, sigma), scale = _entropy_relation(F, "v", compressible=False)
    return [lhs, sigma, np.zeros_like(lhs)], scale


def id_ertel(F: Fields):
    """Ertel: ``Dq/Dt = w.grad(D rho/Dt) - [grad(1/rho) x grad P].grad rho`` for div u = 0."""
    rho, gr, u, w = F.s("rho"), F.grad("rho"), F.vec("v"), F.curl("v")
    # D rho / Dt = 0 for ii-euler: d_t rho = -u.grad rho
    hess = lambda j: np.stack([F.s("rho", i, j) for i in range(3)])  # noqa: E731
    drho_grad = np.stack([-(_dot(F.vec("v", k), gr) + _dot(u, hess(k))) for k in range(3)])
    dw = _momentum_tendency_curl(F, "v")
    dq = _dot(dw, gr) + _dot(w, drho_grad)
    grad_q = np.stack([_dot(F.curl("v", k), gr) + _dot(w, hess(k)) for k in range(3)])
    adv_q = _dot(u, grad_q)
    lhs = dq + adv_q
    baroclinic = _dot(_cross(-gr / rho**2, F.grad("P")), gr)
    # w.grad(D rho/Dt) vanishes because the density is materially conserved
    return [lhs, -baroclinic], _scale(dq, adv_q)


def id_pv_flux(F: Fields):
    """``d_t q + div(q u) + div(w rho div u) = 0`` for compressible kinematics."""
    g = F.grid
    rho, gr, u, w = F.s("rho"), F.grad("rho"), F.vec("u"), F.curl("u")
    dw = _momentum_tendency_curl(F, "u")
    drho_grad = np.stack([_density_tendency(F, "u", k) for k in range(3)])
    q = _dot(w, gr)
    dq = _dot(dw, gr) + _dot(w, drho_grad)
    a = g.div(q * u)
    b = g.div(w * rho * F.div("u"))
    return [dq + a + b, np.zeros_like(dq)], _scale(dq, a, b)


def id_field_pv_flux(F: Fields):
    g = F.grid
    rho, gr, u, B = F.s("rho"), F.grad("rho"), F.vec("u"), F.vec("B")
    divu = F.div("u")
    dB = _adv(B, F.jac("u")) - B * divu - _adv(u, F.jac("B"))
    drho_grad = np.stack([_density_tendency(F, "u", k) for k in range(3)])
    qc = _dot(B, gr)
    dq = _dot(dB, gr) + _dot(B, drho_grad)
    a = g.div(u * qc)
    b = g.div(rho * divu * B)
    return [dq + a + b, np.zeros_like(dq)], _scale(dq, a, b)


def id_induction(F: Fields):
    """``curl(u x B) = B.grad u - B div u - u.grad B`` for solenoidal ``B``."""
    g = F.grid
    u, B = F.vec("u"), F.vec("B")
    s0 = g.curl(_cross(u, B))
    a, b, c = _adv(B, F.jac("u")), B * F.div("u"), _adv(u, F.jac("B"))
    return [s0, a - b - c], _scale(a, b, c)


def id_cross_helicity(F: Fields):
    """Cross-helicity chain from the tendency form through to the flux form."""
    g = F.grid
    rho, gr, u, B, P = F.s("rho"), F.grad("rho"), F.vec("u"), F.vec("B"), F.s("P")
    gP, divu = F.grad("P"), F.div("u")
    Ju, JB = F.jac("u"), F.jac("B")
    curlB = F.curl("B")
    m = rho * u
    Jm = rho * Ju + np.einsum("i...,j...->ij...", u, gr)  # d_j (rho u_i)
    dm = -_adv(u, Jm) - m * divu + _cross(curlB, B) - gP
    dB = g.curl(_cross(u, B))
    h = rho * _dot(u, B)
    s0 = _dot(dm, B) + _dot(m, dB)
    s1 = -_dot(B, _cross(B, curlB) + gP + m * divu + _adv(u, Jm)) + _dot(
        m, _adv(B, Ju) - _adv(u, JB) - B * divu
    )
    gke = np.einsum("i...,ij...->j...", u, Ju)
    s2 = -2 * h * divu - _dot(u, g.grad(h)) - _dot(B, gP) + rho * _dot(B, gke)
    u2 = _dot(u, u)
    Jc = h * u + P * B - 0.5 * rho * B * u2
    qc = _dot(B, gr)
    s3 = -h * divu - g.div(Jc) - 0.5 * qc * u2
    return [s0, s1, s2, s3], _scale(_dot(dm, B), _dot(m, dB), _dot(B, gP), g.div(Jc), h * divu)


def id_barotropic_parallel(F: Fields, K: float = 1.0, gamma: float = 5.0 / 3.0):
    rho, gr = F.s("rho"), F.grad("rho")
    gP = gamma * K * rho ** (gamma - 1) * gr
    ginv = -gr / rho**2
    c = _cross(ginv, gP)
    scale = float(np.max(np.sqrt(_dot(ginv, ginv)))) * float(np.max(np.sqrt(_dot(gP, gP))))
    return [c, np.zeros_like(c)], scale


def _entropy_relation(F: Fields, un: str, compressible: bool):
    g = F.grid
    rho, gr, u, w, P = F.s("rho"), F.grad("rho"), F.vec(un), F.curl(un), F.s("P")
    divu = F.div(un)
    du = _momentum_tendency(F, un)
    drho = _density_tendency(F, un) if compressible else -_dot(u, gr)
    m = rho * u
    cm = rho * w + _cross(gr, u)
    dm = rho * du + u * drho
    # curl(d_t m) from exact first derivatives of d_t m
    ddu = [_momentum_tendency_grad(F, un, k) for k in range(3)]
    if compressible:
        ddrho = [_density_tendency(F, un, k) for k in range(3)]
    else:
        hess = lambda j: np.stack([F.s("rho", i, j) for i in range(3)])  # noqa: E731
        ddrho = [-(_dot(F.vec(un, k), gr) + _dot(u, hess(k))) for k in range(3)]
    ddm = [F.s("rho", k) * du + rho * ddu[k] + F.vec(un, k) * drho + u * ddrho[k] for k in range(3)]
    curl_dm = np.stack([ddm[1][2] - ddm[2][1], ddm[2][0] - ddm[0][2], ddm[0][1] - ddm[1][0]])
    dh = _dot(cm, dm) + _dot(m, curl_dm)
    h = _dot(m, cm)
    u2 = _dot(u, u)
    J = h * u + P * cm - 0.5 * w * rho**2 * u2
    divJ = g.div(J)
    sigma = -_dot(w, gr) * rho * u2
    if compressible:
        sigma = sigma - 2 * h * divu
    return [dh + divJ, sigma], _scale(dh, divJ, sigma)


def id_helicity_law_incompressible(F: Fields):
    return _entropy_relation(F, "v", compressible=False)


def id_helicity_law_compressible(F: Fields):
    return _entropy_relation(F, "u", compressible=True)


def id_energy_law(F: Fields):
    """``d_t E + div((E + P) u) = 0`` with ``E = rho(|u|^2/2 + e)`` and ``rho De/Dt = -P div u``."""
    g = F.grid
    rho, u, e, P = F.s("rho"), F.vec("u"), F.s("e"), F.s("P")
    divu = F.div("u")
    du = _momentum_tendency(F, "u")
    drho = _density_tendency(F, "u")
    de = -_dot(u, F.grad("e")) - P * divu / rho
    u2 = _dot(u, u)
    dE = (0.5 * u2 + e) * drho + rho * _dot(u, du) + rho * de
    E = rho * (0.5 * u2 + e)
    flux = g.div((E + P) * u)
    return [dE + flux, np.zeros_like(dE)], _scale(dE, flux)


CATALOGUE: dict[str, Callable] = {
    "pressure-divergence": id_pressure_divergence,
    "kinetic-source": id_kinetic_source,
    "helicity-law-no-pv": id_helicity_law_no_pv,
    "ertel": id_ertel,
    "pv-flux": id_pv_flux,
    "field-pv-flux": id_field_pv_flux,
    "induction": id_induction,
    "cross-helicity": id_cross_helicity,
    "barotropic-parallel": id_barotropic_parallel,
    "helicity-law-incompressible": id_helicity_law_incompressible,
    "helicity-law-compressible": id_helicity_law_compressible,
    "energy-law": id_energy_law,
}

# identities evaluated on the orthogonal (q = 0) field sets
ORTHOGONAL = {"helicity-law-no-pv"}

TOLERANCE = 1e-11
# products of up to five kmax=3 recipes reach wavenumber 15, which must stay below n/2
MIN_GRID = 32


@dataclass
class IdentityResult:
    identity: str
    seed: int
    n: int
    residual: float
    scale: float
    tol: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol * self.scale)


def verify_identity(
    identity: str,
    fields: ManufacturedFieldSet,
    grid: Grid,
    catalogue: Optional[dict] = None,
    evaluator: Optional[Fields] = None,
) -> IdentityResult:
    """Max-norm residual of one catalogued identity on one grid."""
    cat = CATALOGUE if catalogue is None else catalogue
    if identity not in cat:
        raise KeyError(f"unknown identity {identity!r}; known: {sorted(cat)}")
    F = evaluator if evaluator is not None else Fields(fields, grid)
    stages, scale = cat[identity](F)
    ref = stages[0]
    resid = max(float(np.max(np.abs(s - ref))) for s in stages[1:])
    return IdentityResult(identity, fields.seed, grid.n, resid, scale)


@dataclass
class VerifyReport:
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> list:
        return [r for r in self.rows if not r.passed]

    def table(self) -> str:
        lines = [f"{'identity':<12} {'seed':>4} {'n':>4} {'residual':>12} {'scale':>12} {'ratio':>10}  verdict"]
        for r in self.rows:
            ratio = r.residual / r.scale if r.scale else 0.0
            lines.append(
                f"{r.identity:<12} {r.seed:>4} {r.n:>4} {r.residual:>12.3e} {r.scale:>12.3e} {ratio:>10.2e}  {'pass' if r.passed else 'FAIL'}"
            )
        return "\n".join(lines)


def verify_all(
    seed_count: int = 10,
    catalogue: Optional[dict] = None,
    grid_sizes=(32, 64),
    mode_budget: int = 2,
) -> VerifyReport:
    """Every catalogue identity over ``seed_count`` field sets and each grid size."""
    if seed_count < 1:
        raise ValueError("seed_count must be >= 1")
    too_coarse = [n for n in grid_sizes if n < MIN_GRID]
    if too_coarse:
        raise ValueError(f"grid sizes {too_coarse} alias the recipe products; need n >= {MIN_GRID}")
    cat = CATALOGUE if catalogue is None else catalogue
    report = VerifyReport()
    grids = [make_grid(n) for n in grid_sizes]
    for seed in range(seed_count):
        sets = {
            False: generate(seed, mode_budget),
            True: generate(seed, mode_budget, orthogonal=True),
        }
        for g in grids:
            evaluators = {k: Fields(fs, g) for k, fs in sets.items()}
            for name in cat:
                key = name in ORTHOGONAL
                report.rows.append(verify_identity(name, sets[key], g, cat, evaluators[key]))
    report.rows.sort(key=lambda r: (list(cat).index(r.identity), r.seed, r.n))
    return report
