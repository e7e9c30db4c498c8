"""Grid-FFT lab for the five-linear multiplier, band projections and Leibniz checks.

Frequencies are integers on the discrete torus (cycles per domain period),
with the symmetric representative in (-N/2, N/2].  Wherever a symbol factor is
evaluated at a sum of frequencies, the sum is taken mod N and mapped to its
symmetric representative: this makes the direct frequency-sum evaluation and
the FFT convolution cascade two implementations of the same finite object.

Band windows follow the usual smooth ladder: a mother low-pass window equal to
1 on [-1, 1] and supported in [-2, 2]; the annulus window is the difference of
two of its dilates; the low-pass member of the band family at scale k lags ten
scales behind, matching the cumulative-sum convention (its value at frequency
zero is taken to be 1 by continuity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dyadic import GridFunction1D, GridFunction2D
from .errors import ConfigError

__all__ = [
    "SymbolSpec",
    "ExponentTuple",
    "LeibnizReport",
    "fractional_derivative",
    "lp_project",
    "apply_multiplier",
    "special_symbol_cascade",
    "leibniz_check",
    "mother_phi_hat",
    "psi_hat_band",
    "phi_hat_band",
    "usable_bands",
]

PHI_LAG = 10  # scale lag of the low-pass band member behind the annulus


_PLATEAU = 1.5  # the low-pass mother equals 1 up to here ...
_CUTOFF = 1.9   # ... and vanishes from here on


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """1 at t <= _PLATEAU, 0 at t >= _CUTOFF, smooth monotone in between."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t <= _PLATEAU] = 1.0
    mid = (t > _PLATEAU) & (t < _CUTOFF)
    if np.any(mid):
        u = (t[mid] - _PLATEAU) / (_CUTOFF - _PLATEAU)
        def h(v):
            with np.errstate(over="ignore", divide="ignore"):
                return np.where(v > 0, np.exp(-1.0 / np.maximum(v, 1e-300)), 0.0)
        num = h(1.0 - u)
        out[mid] = num / (num + h(u))
    return out


def mother_phi_hat(xi) -> np.ndarray:
    """Low-pass mother window: 1 on [-1.5, 1.5], supported in [-1.9, 1.9].

    The wide plateau gives the annulus window a genuine plateau
    [0.95, 1.5] instead of a single point, so low integer frequencies can sit
    on it; the support still fits inside [-2, 2].
    """
    return _smooth_step(np.abs(np.asarray(xi, dtype=float)))


def mother_psi_hat(xi) -> np.ndarray:
    """Annulus mother window phi(xi) - phi(2 xi): supported in
    0.75 < |xi| < 1.9 and equal to 1 on 0.95 <= |xi| <= 1.5."""
    xi = np.asarray(xi, dtype=float)
    return mother_phi_hat(xi) - mother_phi_hat(2.0 * xi)


def psi_hat_band(xi, k: int) -> np.ndarray:
    return mother_psi_hat(np.asarray(xi, dtype=float) / 2.0 ** k)


def phi_hat_band(xi, k: int) -> np.ndarray:
    """Low-pass band member at scale k (cumulative annuli up to k - 10)."""
    return mother_phi_hat(np.asarray(xi, dtype=float) / 2.0 ** (k - PHI_LAG))


def _sym_freqs(n: int) -> np.ndarray:
    """Symmetric integer representatives in FFT bin order."""
    m = np.arange(n)
    return np.where(m <= n // 2, m, m - n)


def usable_bands(n: int) -> list[int]:
    """Annulus scales whose support meets a nonzero frequency of the grid."""
    top = int(math.log2(n // 2)) if n >= 4 else 0
    return list(range(0, top + 1))


@dataclass(frozen=True)
class SymbolSpec:
    """A multiplier symbol: trivial, band-product, or explicitly tabulated.

    product_special carries psi/phi type flags per factor and per axis: two
    flags for the four-variable symbol, three for the six-variable one.  At
    least one flag per axis group must be "psi".  tabulated carries a dense
    array over FFT-ordered frequency bins with a declared sup bound.
    """

    kind: str
    x_types: tuple[str, ...] = ()
    y_types: tuple[str, ...] = ()
    gap: int = 3
    values: object = None
    bound: float = 1.0

    def __post_init__(self):
        if self.kind == "constant_one":
            return
        if self.kind == "product_special":
            for types in (self.x_types, self.y_types):
                if not types or any(t not in ("psi", "phi") for t in types):
                    raise ConfigError("type flags must be psi/phi per factor")
                if "psi" not in types:
                    raise ConfigError("at least one factor per axis must be psi type")
            if self.gap < 1:
                raise ConfigError("gap must be >= 1")
            return
        if self.kind == "tabulated":
            if self.values is None:
                raise ConfigError("tabulated symbol needs values")
            arr = np.asarray(self.values)
            if float(np.max(np.abs(arr))) > self.bound + 1e-12:
                raise ConfigError("tabulated symbol exceeds its declared bound")
            return
        raise ConfigError(f"unknown symbol kind {self.kind!r}")


def _grid_n(f: GridFunction1D) -> int:
    return f.grid.n_points


def _fft1(f: GridFunction1D) -> np.ndarray:
    return np.fft.fft(np.asarray(f.samples, dtype=complex)) / _grid_n(f)


def _fft2(h: GridFunction2D) -> np.ndarray:
    n = h.grid_x.n_points * h.grid_y.n_points
    return np.fft.fft2(np.asarray(h.samples, dtype=complex)) / n


def fractional_derivative(f, orders) -> "GridFunction1D | GridFunction2D":
    """|xi|^alpha multiplier per axis on integer torus frequencies.

    orders is a scalar (1D) or a pair (2D); all orders must be nonnegative.
    Real input yields real output up to roundoff; the real part is returned
    for real input.
    """
    if isinstance(f, GridFunction1D):
        alpha = float(orders if np.isscalar(orders) else orders[0])
        if alpha < 0:
            raise ConfigError("order must be nonnegative")
        n = f.grid.n_points
        mult = np.abs(_sym_freqs(n)).astype(float) ** alpha if alpha > 0 else np.ones(n)
        if alpha > 0:
            mult[0] = 0.0
        out = np.fft.ifft(np.fft.fft(np.asarray(f.samples, dtype=complex)) * mult)
        if np.isrealobj(f.samples):
            out = out.real
        return GridFunction1D(f.grid, out)
    a1, a2 = (float(orders[0]), float(orders[1]))
    if a1 < 0 or a2 < 0:
        raise ConfigError("orders must be nonnegative")
    nx, ny = f.grid_x.n_points, f.grid_y.n_points
    mx = np.abs(_sym_freqs(nx)).astype(float) ** a1 if a1 > 0 else np.ones(nx)
    my = np.abs(_sym_freqs(ny)).astype(float) ** a2 if a2 > 0 else np.ones(ny)
    if a1 > 0:
        mx[0] = 0.0
    if a2 > 0:
        my[0] = 0.0
    spec = np.fft.fft2(np.asarray(f.samples, dtype=complex)) * np.outer(mx, my)
    out = np.fft.ifft2(spec)
    if np.isrealobj(f.samples):
        out = out.real
    return GridFunction2D(f.grid_x, f.grid_y, out)


def lp_project(f: GridFunction1D, band: int, kind: str = "psi") -> GridFunction1D:
    """Frequency-window projection onto an annulus (psi) or ball (phi) band."""
    n = f.grid.n_points
    if 2.0 ** (band - 1) >= n // 2 + 0.5:
        raise ConfigError(f"band {band} beyond the Nyquist range of N={n}")
    xs = _sym_freqs(n).astype(float)
    if kind == "psi":
        w = psi_hat_band(xs, band)
    elif kind == "phi":
        w = phi_hat_band(xs, band)
        w[0] = 1.0  # value at frequency zero by continuity
    else:
        raise ConfigError("kind must be psi or phi")
    out = np.fft.ifft(np.fft.fft(np.asarray(f.samples, dtype=complex)) * w)
    if np.isrealobj(f.samples):
        out = out.real
    return GridFunction1D(f.grid, out)


def _band_window(t: str, k: int, xs: np.ndarray) -> np.ndarray:
    return psi_hat_band(xs, k) if t == "psi" else phi_hat_band(xs, k)


def _completion_windows(k1: int, k2: int, xs: np.ndarray):
    """Fixed completion windows for the scale pair (k1 << k2).

    comp3 plateaus past the support of the k1-factors' sum, comp1 is the
    k2-scale low-pass with plateau 2^{k2-1}, psi3 a widened annulus equal to 1
    on [2^{k2-2}, 2^{k2+2}].
    """
    comp3 = mother_phi_hat(xs / 2.0 ** (k1 + 2))
    comp1 = mother_phi_hat(xs / 2.0 ** (k2 - 1))
    u = np.abs(xs) / 2.0 ** k2
    psi3 = mother_phi_hat(u / 4.0) * (1.0 - mother_phi_hat(4.0 * u))
    return comp3, comp1, psi3


def _axis_pairs(spec_a: SymbolSpec, spec_b: SymbolSpec, n: int) -> list[tuple[int, int]]:
    gap = spec_a.gap
    if spec_b.gap != gap:
        raise ConfigError("the two symbols must share the scale gap")
    ks = usable_bands(n)
    pairs = [(k1, k2) for k2 in ks for k1 in ks if k1 < k2 - gap]
    if not pairs:
        raise ConfigError(
            f"no admissible scale pairs at N={n} with gap={gap}: "
            "insufficient band separation")
    return pairs


def _check_special(spec_a: SymbolSpec, spec_b: SymbolSpec):
    if len(spec_a.x_types) != 2 or len(spec_a.y_types) != 2:
        raise ConfigError("four-variable symbol needs two flags per axis")
    if len(spec_b.x_types) != 3 or len(spec_b.y_types) != 3:
        raise ConfigError("six-variable symbol needs three flags per axis")
    for types in (spec_b.x_types, spec_b.y_types):
        if types[:2] != ("phi", "phi") or types[2] != "psi":
            raise ConfigError(
                "the cross-scale regime needs the six-variable factors "
                "(phi, phi, psi) per axis")


def _axis_symbol_tensor(a_types, pairs, n: int) -> np.ndarray:
    """Dense completed symbol s(f1-freq, f2-freq, h-freq) with wrapped sums."""
    xs = _sym_freqs(n).astype(float)
    m = np.arange(n)
    sum2 = (m[:, None] + m[None, :]) % n
    sum3 = (sum2[:, :, None] + m[None, None, :]) % n
    s = np.zeros((n, n, n))
    for (k1, k2) in pairs:
        w1 = _band_window(a_types[0], k1, xs)
        w2 = _band_window(a_types[1], k1, xs)
        comp3, comp1, psi3 = _completion_windows(k1, k2, xs)
        mid = (comp3 * comp1)[sum2]
        outer = psi3[sum3]
        d = psi_hat_band(xs, k2)
        s += (w1[:, None, None] * w2[None, :, None] * mid[:, :, None]
              * d[None, None, :] * outer)
    return s


def _phases(n: int) -> np.ndarray:
    j = np.arange(n)
    return np.exp(2j * np.pi * np.outer(j, np.arange(n)) / n)


def _apply_separable(sx: np.ndarray, sy: np.ndarray, f1, f2, g1, g2, h
                     ) -> GridFunction2D:
    """Direct frequency-sum evaluation for per-axis factorized symbols."""
    n = _grid_n(f1)
    e = _phases(n)
    f1h, f2h = _fft1(f1), _fft1(f2)
    g1h, g2h = _fft1(g1), _fft1(g2)
    hh = _fft2(h)
    mx = np.einsum("abc,a,b,xa,xb->xc", sx, f1h, f2h, e, e, optimize=True)
    my = np.einsum("abc,a,b,ya,yb->yc", sy, g1h, g2h, e, e, optimize=True)
    out = np.einsum("cd,xc,yd->xy", hh, mx * e, my * e, optimize=True)
    return GridFunction2D(h.grid_x, h.grid_y, out.real)


def apply_multiplier(a: SymbolSpec, b: SymbolSpec, f1: GridFunction1D,
                     f2: GridFunction1D, g1: GridFunction1D,
                     g2: GridFunction1D, h: GridFunction2D) -> GridFunction2D:
    """The five-linear multiplier operator for the symbol pair (a, b).

    constant_one pairs collapse to the pointwise product.  product_special
    pairs realize the cross-scale (completed) part of the symbol product; up
    to N = 64 the six-fold frequency sum is evaluated directly, larger grids
    delegate to the convolution cascade, which computes the identical sum.
    tabulated pairs run the dense six-fold sum and are capped at N = 16.
    """
    n = _grid_n(f1)
    if not (_grid_n(f2) == _grid_n(g1) == _grid_n(g2)
            == h.grid_x.n_points == h.grid_y.n_points == n):
        raise ConfigError("all five inputs must share one grid size")
    if a.kind != b.kind:
        raise ConfigError("mixed symbol kinds are not supported")
    if a.kind == "constant_one":
        prod = (f1.samples * f2.samples)[:, None] * (g1.samples * g2.samples)[None, :]
        return GridFunction2D(h.grid_x, h.grid_y, prod * h.samples)
    if a.kind == "product_special":
        _check_special(a, b)
        if n > 512:
            raise ConfigError("product_special capped at N = 512")
        if n > 64:
            return special_symbol_cascade(a, b, f1, f2, g1, g2, h)
        pairs = _axis_pairs(a, b, n)
        sx = _axis_symbol_tensor((a.x_types[0], a.x_types[1]), pairs, n)
        sy = _axis_symbol_tensor((a.y_types[0], a.y_types[1]), pairs, n)
        return _apply_separable(sx, sy, f1, f2, g1, g2, h)
    # tabulated
    if n > 16:
        raise ConfigError("tabulated symbols capped at N = 16")
    av = np.asarray(a.values, dtype=complex)
    bv = np.asarray(b.values, dtype=complex)
    if av.shape != (n,) * 4 or bv.shape != (n,) * 6:
        raise ConfigError("tabulated shapes must be N^4 and N^6")
    f1h, f2h = _fft1(f1), _fft1(f2)
    g1h, g2h = _fft1(g1), _fft1(g2)
    hh = _fft2(h)
    c = np.zeros((n, n), dtype=complex)
    for i1 in range(n):
        for j1 in range(n):
            w1 = f1h[i1] * g1h[j1]
            if w1 == 0:
                continue
            for i2 in range(n):
                for j2 in range(n):
                    w = w1 * av[i1, j1, i2, j2] * f2h[i2] * g2h[j2]
                    if w == 0:
                        continue
                    block = bv[i1, j1, i2, j2] * hh
                    c += np.roll(np.roll(w * block, (i1 + i2) % n, axis=0),
                                 (j1 + j2) % n, axis=1)
    e = _phases(n)
    out = e @ c @ e.T
    return GridFunction2D(h.grid_x, h.grid_y, out.real)


def _conv_window(samples: np.ndarray, window: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.fft.fft(samples) * window)


def special_symbol_cascade(a: SymbolSpec, b: SymbolSpec, f1, f2, g1, g2, h
                           ) -> GridFunction2D:
    """FFT-convolution evaluation of the cross-scale band-product symbol.

    For each admissible scale pair, the two low-frequency factors are banded
    and multiplied, smoothed through the completion low-pass windows, matched
    against the annulus piece of h, and the product is pushed through the
    final widened-annulus window; everything sums over pairs on both axes.
    """
    _check_special(a, b)
    n = _grid_n(f1)
    pairs = _axis_pairs(a, b, n)
    xs = _sym_freqs(n).astype(float)

    def axis_blocks(types, u1: GridFunction1D, u2: GridFunction1D):
        blocks = {}
        for (k1, k2) in pairs:
            w1 = _band_window(types[0], k1, xs)
            w2 = _band_window(types[1], k1, xs)
            comp3, comp1, _ = _completion_windows(k1, k2, xs)
            p1 = _conv_window(np.asarray(u1.samples, dtype=complex), w1)
            p2 = _conv_window(np.asarray(u2.samples, dtype=complex), w2)
            blocks[(k1, k2)] = _conv_window(p1 * p2, comp3 * comp1)
        return blocks

    xblocks = axis_blocks((a.x_types[0], a.x_types[1]), f1, f2)
    yblocks = axis_blocks((a.y_types[0], a.y_types[1]), g1, g2)

    hspec = np.fft.fft2(np.asarray(h.samples, dtype=complex))
    acc = np.zeros((n, n), dtype=complex)
    for (k1, k2) in pairs:
        dx = psi_hat_band(xs, k2)
        _, _, px = _completion_windows(k1, k2, xs)
        for (j1, j2) in pairs:
            dy = psi_hat_band(xs, j2)
            _, _, py = _completion_windows(j1, j2, xs)
            hband = np.fft.ifft2(hspec * np.outer(dx, dy))
            core = (xblocks[(k1, k2)][:, None] * yblocks[(j1, j2)][None, :]
                    * hband)
            acc += np.fft.ifft2(np.fft.fft2(core) * np.outer(px, py))
    return GridFunction2D(h.grid_x, h.grid_y, acc.real)


@dataclass(frozen=True)
class ExponentTuple:
    """(p1, q1, p2, q2, s) with the target r fixed by the scaling identity."""

    p1: float
    q1: float
    p2: float
    q2: float
    s: float

    def __post_init__(self):
        for name in ("p1", "q1", "p2", "q2", "s"):
            v = getattr(self, name)
            if not (1.0 < v):
                raise ConfigError(f"{name} must exceed 1")
        if math.isinf(self.p1) and math.isinf(self.q1):
            raise ConfigError("(p1, q1) = (inf, inf) is excluded")
        if math.isinf(self.p2) and math.isinf(self.q2):
            raise ConfigError("(p2, q2) = (inf, inf) is excluded")
        if abs((1 / self.p1 + 1 / self.q1) - (1 / self.p2 + 1 / self.q2)) > 1e-12:
            raise ConfigError("the two axis reciprocal sums must match")

    @property
    def r(self) -> float:
        return 1.0 / (1 / self.p1 + 1 / self.q1 + 1 / self.s)

    @property
    def r_conjugate_reciprocal(self) -> float:
        """1/r' = 1 - 1/r (negative in the quasi-Banach range r < 1)."""
        return 1.0 - 1.0 / self.r


@dataclass
class LeibnizReport:
    alphas: tuple[float, float]
    betas: tuple[float, float]
    lhs: float
    terms: tuple[float, ...]
    n: int
    gap: int
    seed: int | None = None

    @property
    def rhs(self) -> float:
        return float(sum(self.terms))

    @property
    def ratio(self) -> float:
        if self.lhs == 0.0:
            return 0.0
        return self.lhs / self.rhs if self.rhs > 0 else float("inf")

    def csv_row(self) -> str:
        a1, a2 = self.alphas
        b1, b2 = self.betas
        seed = "" if self.seed is None else self.seed
        return (f"{a1},{a2},{b1},{b2},{self.n},{self.gap},{seed},"
                f"{self.lhs!r},{self.rhs!r},{self.ratio!r}")


def leibniz_check(alphas: tuple[float, float], betas: tuple[float, float],
                  exponents: Sequence[ExponentTuple] | ExponentTuple,
                  f1: GridFunction1D, f2: GridFunction1D, g1: GridFunction1D,
                  g2: GridFunction1D, h: GridFunction2D,
                  seed: int | None = None) -> LeibnizReport:
    """Left side of the product rule against its sixteen majorizing terms.

    lhs = || D1^b1 D2^b2 ( D1^a1 D2^a2 (f1 f2 g1 g2) * h ) ||_r.  Each right
    term routes a1 to f1 or f2, a2 to g1 or g2, and b1 (resp. b2) either onto
    the same factor or onto h, with its own exponent tuple; all tuples must
    share the common r.
    """
    a1, a2 = alphas
    b1, b2 = betas
    if min(a1, a2, b1, b2) < 0:
        raise ConfigError("orders must be nonnegative")
    tuples = list(exponents) if isinstance(exponents, (list, tuple)) else [exponents] * 16
    if len(tuples) != 16:
        raise ConfigError("need one exponent tuple or sixteen")
    r = tuples[0].r
    for t in tuples:
        if abs(t.r - r) > 1e-12:
            raise ConfigError("all sixteen tuples must share the target r")

    prod_x = GridFunction1D(f1.grid, f1.samples * f2.samples)
    prod_y = GridFunction1D(g1.grid, g1.samples * g2.samples)
    big = GridFunction2D(h.grid_x, h.grid_y,
                         np.outer(prod_x.samples, prod_y.samples))
    inner = fractional_derivative(big, (a1, a2))
    mid = GridFunction2D(h.grid_x, h.grid_y, inner.samples * h.samples)
    lhs = fractional_derivative(mid, (b1, b2)).norm(r)

    terms = []
    idx = 0
    for xa in (0, 1):           # a1 onto f1 or f2
        for xb in ("f", "h"):   # b1 onto the same f or onto h
            for ya in (0, 1):
                for yb in ("g", "h"):
                    t = tuples[idx]
                    idx += 1
                    fx = [f1, f2]
                    gx = [g1, g2]
                    xakind = a1 + (b1 if xb == "f" else 0.0)
                    yakind = a2 + (b2 if yb == "g" else 0.0)
                    dfx = fractional_derivative(fx[xa], xakind)
                    dgy = fractional_derivative(gx[ya], yakind)
                    hb1 = b1 if xb == "h" else 0.0
                    hb2 = b2 if yb == "h" else 0.0
                    dh = fractional_derivative(h, (hb1, hb2))
                    term = (dfx.norm(t.p1) * fx[1 - xa].norm(t.q1)
                            * dgy.norm(t.p2) * gx[1 - ya].norm(t.q2)
                            * dh.norm(t.s))
                    terms.append(term)
    return LeibnizReport((a1, a2), (b1, b2), lhs, tuple(terms),
                         _grid_n(f1), 0, seed)
