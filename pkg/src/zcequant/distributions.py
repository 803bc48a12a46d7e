"""Distribution specs, seeded sampling, and cdf/quantile evaluation.

Every sampler draws only from the uniform source of a :class:`RandomStream`,
so a seed fully determines every experiment built on top.  Families with a
closed-form quantile are sampled by inverse cdf; the symmetric alpha-stable
family uses the Chambers-Mallows-Stuck transform and a numerical cdf.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri, stdtr, stdtrit

from .errors import ParameterError

__all__ = [
    "DistributionSpec",
    "RandomStream",
    "make_spec",
    "parse_spec",
    "format_spec",
    "support",
    "sample",
    "cdf",
    "survival",
    "quantile",
    "inverse_survival",
    "exponential",
    "rayleigh",
    "std_pareto",
    "gev",
    "lognormal",
    "student_t",
    "sas",
]

# kind -> ordered (parameter, default); None marks a required parameter
_FAMILIES = {
    "exp": (("rate", 1.0),),
    "rayleigh": (("sigma", 1.0),),
    "stdpar": (("xi", None), ("u", 1.0)),
    "gev": (("xi", None), ("beta", 1.0), ("mu", 0.0)),
    "lognormal": (("mu", 0.0), ("sigma", 1.0)),
    "t": (("nu", None),),
    "sas": (("alpha", None),),
}

_STRICTLY_POSITIVE = {
    ("exp", "rate"),
    ("rayleigh", "sigma"),
    ("stdpar", "xi"),
    ("stdpar", "u"),
    ("gev", "beta"),
    ("lognormal", "sigma"),
    ("t", "nu"),
}


@dataclass(frozen=True)
class DistributionSpec:
    """A named distribution family with fully specified parameters."""

    kind: str
    params: dict

    def __str__(self) -> str:
        return format_spec(self)


def make_spec(kind: str, **params: float) -> DistributionSpec:
    if kind not in _FAMILIES:
        raise ParameterError(
            f"unknown distribution kind {kind!r}; expected one of {sorted(_FAMILIES)}"
        )
    table = _FAMILIES[kind]
    known = {name for name, _ in table}
    for name in params:
        if name not in known:
            raise ParameterError(f"{kind} does not take parameter {name!r}")
    filled = {}
    for name, default in table:
        if name in params:
            filled[name] = float(params[name])
        elif default is not None:
            filled[name] = default
        else:
            raise ParameterError(f"{kind} requires parameter {name!r}")
    for name, value in filled.items():
        if not math.isfinite(value):
            raise ParameterError(f"{kind}: parameter {name}={value} must be finite")
        if (kind, name) in _STRICTLY_POSITIVE and value <= 0:
            raise ParameterError(f"{kind}: parameter {name}={value} must be > 0")
    if kind == "sas" and not 0.0 < filled["alpha"] <= 2.0:
        raise ParameterError(
            f"sas: characteristic exponent alpha={filled['alpha']} must be in (0, 2]"
        )
    return DistributionSpec(kind, filled)


def exponential(rate: float = 1.0) -> DistributionSpec:
    return make_spec("exp", rate=rate)


def rayleigh(sigma: float = 1.0) -> DistributionSpec:
    return make_spec("rayleigh", sigma=sigma)


def std_pareto(xi: float, u: float = 1.0) -> DistributionSpec:
    return make_spec("stdpar", xi=xi, u=u)


def gev(xi: float, beta: float = 1.0, mu: float = 0.0) -> DistributionSpec:
    return make_spec("gev", xi=xi, beta=beta, mu=mu)


def lognormal(mu: float = 0.0, sigma: float = 1.0) -> DistributionSpec:
    return make_spec("lognormal", mu=mu, sigma=sigma)


def student_t(nu: float) -> DistributionSpec:
    return make_spec("t", nu=nu)


def sas(alpha: float) -> DistributionSpec:
    return make_spec("sas", alpha=alpha)


_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*\(\s*(.*?)\s*\)\s*$")


def parse_spec(text: str) -> DistributionSpec:
    """Parse the plain-text form, e.g. ``stdpar(xi=0.3,u=1)`` or ``exp(rate=1)``."""
    m = _SPEC_RE.match(text)
    if m is None:
        raise ParameterError(f"cannot parse distribution spec {text!r}")
    kind, body = m.group(1), m.group(2)
    params = {}
    if body:
        for part in body.split(","):
            name, sep, value = part.partition("=")
            if not sep:
                raise ParameterError(f"expected name=value in {text!r}, got {part!r}")
            try:
                params[name.strip()] = float(value)
            except ValueError:
                raise ParameterError(f"bad numeric value {value!r} in {text!r}") from None
    return make_spec(kind, **params)


def format_spec(spec: DistributionSpec) -> str:
    inner = ",".join(f"{name}={spec.params[name]:.12g}" for name, _ in _FAMILIES[spec.kind])
    return f"{spec.kind}({inner})"


def support(spec: DistributionSpec) -> tuple[float, float]:
    """Lower and upper endpoints of the support."""
    p = spec.params
    if spec.kind in ("exp", "rayleigh"):
        return 0.0, math.inf
    if spec.kind == "stdpar":
        return p["u"], math.inf
    if spec.kind == "gev":
        if p["xi"] > 0:
            return p["mu"] - p["beta"] / p["xi"], math.inf
        if p["xi"] < 0:
            return -math.inf, p["mu"] - p["beta"] / p["xi"]
        return -math.inf, math.inf
    if spec.kind == "lognormal":
        return 0.0, math.inf
    return -math.inf, math.inf


class RandomStream:
    """Seeded uniform source with deterministic splitting for parallel work.

    Two streams built from the same seed and spawn key return bit-identical
    sequences under the same call order.  ``split(i)`` derives a child stream
    that is statistically independent of the parent and of other children.
    """

    def __init__(self, seed: int, spawn_key: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.spawn_key = tuple(int(k) for k in spawn_key)
        ss = np.random.SeedSequence(seed, spawn_key=self.spawn_key)
        self._generator = np.random.Generator(np.random.PCG64(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def uniform(self, size=None):
        """Uniform draws on [0, 1)."""
        return self._generator.random(size)

    def split(self, index: int) -> "RandomStream":
        return RandomStream(self.seed, self.spawn_key + (int(index),))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, spawn_key={self.spawn_key})"


def sample(spec: DistributionSpec, count: int, rng: RandomStream) -> np.ndarray:
    """Draw ``count`` i.i.d. values from ``spec``."""
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise ParameterError(f"count must be a positive integer, got {count!r}")
    p = spec.params
    if spec.kind == "sas":
        return _sas_draw(p["alpha"], count, rng)
    if spec.kind == "t":
        nu = p["nu"]
        half = round(nu / 2)
        if nu == 2 * half and half >= 1:
            # ratio method: T = Z / sqrt(V/nu); for even nu the chi-square
            # variate is an exact sum of nu/2 exponentials, so the draw
            # consumes uniforms only
            z = ndtri(rng.uniform(count))
            v = np.zeros(count)
            for _ in range(half):
                v -= 2.0 * np.log1p(-rng.uniform(count))
            return z / np.sqrt(v / nu)
        return stdtrit(nu, rng.uniform(count))
    return _quantile(spec, rng.uniform(count))


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _result(arr, scalar):
    return float(arr) if scalar else arr


def cdf(spec: DistributionSpec, x):
    """P(X <= x); vectorized over x."""
    x, scalar = _as_array(x)
    p = spec.params
    if spec.kind == "exp":
        out = np.where(x > 0, -np.expm1(-p["rate"] * np.maximum(x, 0.0)), 0.0)
    elif spec.kind == "rayleigh":
        out = np.where(x > 0, -np.expm1(-np.maximum(x, 0.0) ** 2 / (2 * p["sigma"] ** 2)), 0.0)
    elif spec.kind == "stdpar":
        safe = np.maximum(x, p["u"])
        out = np.where(x > p["u"], -np.expm1(-np.log(safe / p["u"]) / p["xi"]), 0.0)
    elif spec.kind == "gev":
        out = np.exp(-_gev_tail_arg(p, x))
    elif spec.kind == "lognormal":
        safe = np.where(x > 0, x, 1.0)
        out = np.where(x > 0, ndtr((np.log(safe) - p["mu"]) / p["sigma"]), 0.0)
    elif spec.kind == "t":
        out = stdtr(p["nu"], x)
    else:
        out = _sas_evaluator(p["alpha"]).cdf(x)
    return _result(out, scalar)


def survival(spec: DistributionSpec, x):
    """P(X > x), computed directly so that deep tails keep full precision."""
    x, scalar = _as_array(x)
    p = spec.params
    if spec.kind == "exp":
        out = np.where(x > 0, np.exp(-p["rate"] * np.maximum(x, 0.0)), 1.0)
    elif spec.kind == "rayleigh":
        out = np.where(x > 0, np.exp(-np.maximum(x, 0.0) ** 2 / (2 * p["sigma"] ** 2)), 1.0)
    elif spec.kind == "stdpar":
        safe = np.maximum(x, p["u"])
        out = np.where(x > p["u"], np.exp(-np.log(safe / p["u"]) / p["xi"]), 1.0)
    elif spec.kind == "gev":
        out = -np.expm1(-_gev_tail_arg(p, x))
    elif spec.kind == "lognormal":
        safe = np.where(x > 0, x, 1.0)
        out = np.where(x > 0, ndtr(-(np.log(safe) - p["mu"]) / p["sigma"]), 1.0)
    elif spec.kind == "t":
        out = stdtr(p["nu"], -x)
    else:
        out = _sas_evaluator(p["alpha"]).sf(x)
    return _result(out, scalar)


def quantile(spec: DistributionSpec, q):
    """Inverse cdf; q in [0, 1], with 0 and 1 mapping to the support endpoints."""
    q, scalar = _as_array(q)
    if np.any((q < 0) | (q > 1)):
        raise ParameterError("quantile level must lie in [0, 1]")
    return _result(_quantile(spec, q), scalar)


def inverse_survival(spec: DistributionSpec, s):
    """x with P(X > x) = s; keeps precision where 1 - s would round to 1."""
    s, scalar = _as_array(s)
    if np.any((s < 0) | (s > 1)):
        raise ParameterError("survival level must lie in [0, 1]")
    p = spec.params
    with np.errstate(divide="ignore"):
        if spec.kind == "exp":
            out = -np.log(s) / p["rate"]
        elif spec.kind == "rayleigh":
            out = p["sigma"] * np.sqrt(-2.0 * np.log(s))
        elif spec.kind == "stdpar":
            out = p["u"] * s ** (-p["xi"])
        elif spec.kind == "gev":
            loglog = np.log(-np.log1p(-s))
            if p["xi"] == 0.0:
                out = p["mu"] - p["beta"] * loglog
            else:
                out = p["mu"] + p["beta"] * np.expm1(-p["xi"] * loglog) / p["xi"]
        elif spec.kind == "lognormal":
            out = np.exp(p["mu"] - p["sigma"] * ndtri(s))
        elif spec.kind == "t":
            out = -stdtrit(p["nu"], s)
        else:
            out = -_sas_evaluator(p["alpha"]).quantile(s)  # symmetric law
    return _result(out, scalar)


def _quantile(spec: DistributionSpec, q):
    p = spec.params
    with np.errstate(divide="ignore"):
        if spec.kind == "exp":
            return -np.log1p(-q) / p["rate"]
        if spec.kind == "rayleigh":
            return p["sigma"] * np.sqrt(-2.0 * np.log1p(-q))
        if spec.kind == "stdpar":
            return p["u"] * (1.0 - q) ** (-p["xi"])
        if spec.kind == "gev":
            loglog = np.log(-np.log(q))
            if p["xi"] == 0.0:
                return p["mu"] - p["beta"] * loglog
            return p["mu"] + p["beta"] * np.expm1(-p["xi"] * loglog) / p["xi"]
        if spec.kind == "lognormal":
            return np.exp(p["mu"] + p["sigma"] * ndtri(q))
        if spec.kind == "t":
            return stdtrit(p["nu"], q)
    return _sas_evaluator(p["alpha"]).quantile(q)


def _gev_tail_arg(p, x):
    """t(x) = (1 + xi (x-mu)/beta)^(-1/xi) with support clamping; cdf = exp(-t)."""
    z = (x - p["mu"]) / p["beta"]
    xi = p["xi"]
    if xi == 0.0:
        return np.exp(-z)
    base = 1.0 + xi * z
    safe = np.maximum(base, 1e-300)
    with np.errstate(over="ignore"):
        t = np.exp(-np.log(safe) / xi)
    if xi > 0:
        return np.where(base > 0, t, np.inf)  # below lower endpoint: cdf 0
    return np.where(base > 0, t, 0.0)  # above upper endpoint: cdf 1


# ---------------------------------------------------------------------------
# symmetric alpha-stable internals


def _sas_draw(alpha: float, count: int, rng: RandomStream) -> np.ndarray:
    """Chambers-Mallows-Stuck draws for the standard symmetric stable law."""
    phi = np.pi * (rng.uniform(count) - 0.5)
    w = -np.log1p(-rng.uniform(count))
    if alpha == 2.0:
        return 2.0 * np.sqrt(w) * np.sin(phi)
    if alpha == 1.0:
        return np.tan(phi)
    return (
        np.sin(alpha * phi)
        / np.cos(phi) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * phi) / w) ** ((1.0 - alpha) / alpha)
    )


def _sas_cdf_quad(alpha: float, x: float) -> float:
    """Gil-Pelaez inversion of the characteristic function exp(-|t|^alpha).

    F(x) = 1/2 + (1/pi) int_0^inf sin(tx) exp(-t^alpha) / t dt.  The integral
    is split at t = 1 so the oscillatory tail can use the QAWF sine rule.
    """
    if x == 0.0:
        return 0.5
    if x < 0.0:
        return 1.0 - _sas_cdf_quad(alpha, -x)

    def head(t):
        return math.sin(t * x) * math.exp(-(t**alpha)) / t if t > 0.0 else x

    i1, _ = quad(head, 0.0, 1.0, limit=200, epsabs=1e-13, epsrel=1e-12)
    i2, _ = quad(
        lambda t: math.exp(-(t**alpha)) / t, 1.0, np.inf, weight="sin", wvar=x, limit=400
    )
    return min(1.0, 0.5 + (i1 + i2) / math.pi)


def _sas_tail_series(alpha: float, x: np.ndarray):
    """Asymptotic power-tail series for P(X > x), x > 0.

    Terms are summed until they stop decreasing (or converge); `ok` marks
    points where the smallest term is below 1e-12 of the running sum, which
    bounds the truncation error of this alternating asymptotic series.
    """
    x = np.asarray(x, dtype=float)
    logx = np.log(x)
    total = np.zeros_like(x)
    prev_mag = np.full_like(x, np.inf)
    last_mag = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 121):
        s = math.sin(k * math.pi * alpha / 2.0)
        if s == 0.0:
            continue
        logc = math.lgamma(k * alpha) - math.lgamma(k + 1) + math.log(abs(s)) - math.log(math.pi)
        sign = math.copysign(1.0, s) * (1.0 if k % 2 == 1 else -1.0)
        mag = np.exp(logc - k * alpha * logx)
        grew = active & (mag >= prev_mag)
        last_mag[grew] = prev_mag[grew]
        active &= ~grew
        total[active] += sign * mag[active]
        prev_mag[active] = mag[active]
        done = active & (mag <= 1e-13 * np.abs(total))
        last_mag[done] = mag[done]
        active &= ~done
        if not active.any():
            break
    last_mag[active] = prev_mag[active]
    ok = (total > 0) & (last_mag <= 1e-12 * np.abs(total))
    return total, ok


class _SasEvaluator:
    """Numerical cdf/sf/quantile for the standard symmetric alpha-stable law.

    Inside ``|x| <= edge`` the cdf is a monotone pchip fit, over an
    arctan-spaced grid, of Gil-Pelaez quadrature values; beyond the edge the
    asymptotic tail series applies (with quadrature as fallback).  alpha = 2
    is the exact normal case with scale sqrt(2).
    """

    edge = 60.0
    grid_points = 1201

    def __init__(self, alpha: float):
        self.alpha = float(alpha)
        if self.alpha == 2.0:
            self._interp = None
            return
        uu = np.linspace(0.0, math.atan(self.edge), self.grid_points)
        xs = np.tan(uu)
        vals = np.array([_sas_cdf_quad(self.alpha, x) for x in xs])
        self._interp = PchipInterpolator(uu, vals, extrapolate=False)
        self._edge_cdf = float(vals[-1])

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.alpha == 2.0:
            return ndtr(x / math.sqrt(2.0))
        return np.where(x >= 0, 1.0 - self._sf_pos(np.abs(x)), self._sf_pos(np.abs(x)))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        if self.alpha == 2.0:
            return ndtr(-x / math.sqrt(2.0))
        return np.where(x >= 0, self._sf_pos(np.abs(x)), 1.0 - self._sf_pos(np.abs(x)))

    def _sf_pos(self, x):
        """P(X > x) for x >= 0 (array)."""
        out = np.empty_like(x)
        inside = x <= self.edge
        if inside.any():
            out[inside] = 1.0 - self._interp(np.arctan(x[inside]))
        far = ~inside
        if far.any():
            vals, ok = _sas_tail_series(self.alpha, x[far])
            if not ok.all():
                flat = x[far]
                for j in np.flatnonzero(~ok):
                    vals[j] = 1.0 - _sas_cdf_quad(self.alpha, float(flat[j]))
            out[far] = vals
        return out

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        if self.alpha == 2.0:
            return math.sqrt(2.0) * ndtri(q)
        out = np.empty_like(q)
        for idx in np.ndindex(q.shape):
            out[idx] = self._quantile_scalar(float(q[idx]))
        return out

    def _quantile_scalar(self, q: float) -> float:
        if q == 0.5:
            return 0.0
        if q == 0.0:
            return -math.inf
        if q == 1.0:
            return math.inf
        if q < 0.5:
            return -self._quantile_scalar(1.0 - q)
        if q <= self._edge_cdf:
            target = q
            f = lambda u: float(self._interp(u)) - target
            u = brentq(f, 0.0, math.atan(self.edge), xtol=1e-15, rtol=8.9e-16)
            return math.tan(u)
        # beyond the grid: invert the tail series region by bracketing
        sf_target = 1.0 - q
        lo, hi = self.edge, 2.0 * self.edge
        while float(self._sf_pos(np.array([hi]))[0]) > sf_target:
            lo, hi = hi, hi * 2.0
            if hi > 1e300:
                return math.inf
        f = lambda x: float(self._sf_pos(np.array([x]))[0]) - sf_target
        return brentq(f, lo, hi, xtol=1e-12, rtol=8.9e-16)


_SAS_CACHE: dict[float, _SasEvaluator] = {}


def _sas_evaluator(alpha: float) -> _SasEvaluator:
    ev = _SAS_CACHE.get(alpha)
    if ev is None:
        ev = _SasEvaluator(alpha)
        _SAS_CACHE[alpha] = ev
    return ev
