"""Conserved functionals evaluated by quadrature on windowed samples.

Mass M, energy E, the higher-order energies E5/E7/E9, the Lyapunov
combinations H0/H5/H7/H9 and the breather functional H, Sobolev norms, and
the second-order expansion of H around a breather.  Integrals over the real
line are truncated to a uniform periodic window; the integrands decay
super-exponentially inside properly sized windows, so the plain rectangle
(periodic trapezoid) sum converges spectrally.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import closed_forms as cf


class TailWarning(UserWarning):
    """Field magnitude exceeds 1e-10 at a window edge; quadrature suspect."""


@dataclass(frozen=True)
class Window:
    center: float
    half_width: float
    n_points: int

    def __post_init__(self):
        n = self.n_points
        if n < 256 or (n & (n - 1)) != 0:
            raise ValueError("n_points must be a power of two >= 256")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def length(self) -> float:
        return 2.0 * self.half_width

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    def grid(self) -> np.ndarray:
        # periodic convention: left edge included, right edge excluded
        return self.center - self.half_width + self.spacing * np.arange(self.n_points)

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    def quad(self, values) -> float:
        """Periodic trapezoid sum; spectrally accurate for decaying smooth data."""
        return self.spacing * float(np.sum(values))


def default_window(p: cf.BreatherParams, t: float, n_points: int = 2048,
                   margin: float = 5.0) -> Window:
    """Window tracking the envelope core, wide enough for <1e-12 tails."""
    v = p.velocities()
    half = 30.0 / p.beta + max(abs(p.x1), abs(p.x2)) + margin
    return Window(center=-v.gamma * t - p.x2, half_width=half, n_points=n_points)


def require_window(w: Window, p: cf.BreatherParams) -> None:
    need = 20.0 / p.beta + max(abs(p.x1), abs(p.x2))
    if w.half_width < need:
        raise ValueError(f"window half_width {w.half_width} below required {need} "
                         f"for beta={p.beta}, phases ({p.x1}, {p.x2})")


def spectral_derivative(values: np.ndarray, w: Window, k: int = 1) -> np.ndarray:
    kk = 2.0 * np.pi * np.fft.rfftfreq(w.n_points, d=w.spacing)
    fac = (1j * kk) ** k
    if k % 2 == 1:
        fac[-1] = 0.0  # Nyquist mode has no meaningful odd derivative
    return np.fft.irfft(np.fft.rfft(values) * fac, n=w.n_points)


@dataclass(frozen=True)
class SampledField:
    """Field values on a window, with optional exact derivative arrays.

    derivs[k-1] holds the k-th x-derivative.  Missing derivatives are
    computed spectrally on demand (valid while the field stays resolved).
    """

    window: Window
    values: np.ndarray
    derivs: tuple = ()

    def __post_init__(self):
        if len(self.values) != self.window.n_points:
            raise ValueError("values length must equal window n_points")
        for d in self.derivs:
            if len(d) != self.window.n_points:
                raise ValueError("derivative array length must equal n_points")

    def deriv(self, k: int) -> np.ndarray:
        if k == 0:
            return self.values
        if len(self.derivs) >= k:
            return self.derivs[k - 1]
        return spectral_derivative(self.values, self.window, k)


def spectral_consistency(f: SampledField) -> float:
    """Max relative mismatch between stored derivatives and FFT differentiation."""
    worst = 0.0
    for k in range(1, len(f.derivs) + 1):
        ref = spectral_derivative(f.values, f.window, k)
        scale = max(1.0, float(np.max(np.abs(f.derivs[k - 1]))))
        worst = max(worst, float(np.max(np.abs(ref - f.derivs[k - 1]))) / scale)
    return worst


def zero_field(w: Window) -> SampledField:
    return SampledField(w, np.zeros(w.n_points))


def sample_breather(p: cf.BreatherParams, t: float, w: Window | None = None,
                    m: int = 4) -> SampledField:
    if w is None:
        w = default_window(p, t)
    j = cf.breather_jet(p, t, w.grid(), m=m)
    return SampledField(w, j.value, tuple(j.dx))


def default_soliton_window(sp: cf.SolitonParams, t: float,
                           n_points: int = 2048) -> Window:
    half = 30.0 / math.sqrt(sp.c) + 5.0
    return Window(center=sp.speed() * t, half_width=half, n_points=n_points)


def sample_soliton(sp: cf.SolitonParams, t: float, w: Window | None = None,
                   m: int = 4) -> SampledField:
    if w is None:
        w = default_soliton_window(sp, t)
    j = cf.soliton_jet(sp, t, w.grid(), m=m)
    return SampledField(w, j.value, tuple(j.dx))


# --------------------------------------------------------------------------
# functionals

FUNCTIONAL_KINDS = ("M", "E", "E5", "E7", "E9", "H0", "H5", "H7", "H9", "H")


@dataclass(frozen=True)
class FunctionalValue:
    kind: str
    value: float


def _tail_check(f: SampledField) -> None:
    edge = max(abs(float(f.values[0])), abs(float(f.values[-1])))
    if edge > 1e-10:
        warnings.warn(f"field magnitude {edge:.2e} at window edge", TailWarning,
                      stacklevel=3)


def mass(f: SampledField) -> float:
    """M[u] = (1/2) int u^2."""
    _tail_check(f)
    return f.window.quad(0.5 * f.values**2)


def energy(f: SampledField) -> float:
    """E[u] = (1/2) int (u_x^2 - u^4)."""
    _tail_check(f)
    u, u1 = f.values, f.deriv(1)
    return f.window.quad(0.5 * (u1**2 - u**4))


def higher_energy(f: SampledField, kind: str) -> float:
    """E5, E7 or E9; needs derivatives to order 2, 3, 4 respectively."""
    _tail_check(f)
    u = f.values
    u1 = f.deriv(1)
    u2 = f.deriv(2)
    if kind == "E5":
        dens = 0.5 * u2**2 - 5.0 * u**2 * u1**2 + u**6
    elif kind == "E7":
        u3 = f.deriv(3)
        dens = (0.5 * u3**2 + 3.5 * u1**4 - 7.0 * u**2 * u2**2
                + 35.0 * u**4 * u1**2 - 2.5 * u**8)
    elif kind == "E9":
        u3 = f.deriv(3)
        u4 = f.deriv(4)
        dens = (0.5 * u4**2 - 9.0 * u**2 * u3**2 + 20.0 * u * u2**3
                + 51.0 * u1**2 * u2**2 + 63.0 * u**4 * u2**2
                - 133.0 * u**2 * u1**4 - 210.0 * u**6 * u1**2 + 7.0 * u**10)
    else:
        raise ValueError(f"unknown higher energy kind {kind!r}")
    return f.window.quad(dens)


def lyapunov(f: SampledField, alpha: float, beta: float, kind: str) -> float:
    """Lyapunov combinations.

    H0/H5/H7/H9 are the soliton functionals E + cM, E5 - c^2 M, E7 + c^3 M,
    E9 - c^4 M; they take the single scaling c through the alpha slot and
    ignore beta.  H is the breather functional
    E5 + 2(beta^2 - alpha^2) E + (alpha^2 + beta^2)^2 M.
    """
    c = alpha
    if kind == "H0":
        return energy(f) + c * mass(f)
    if kind == "H5":
        return higher_energy(f, "E5") - c**2 * mass(f)
    if kind == "H7":
        return higher_energy(f, "E7") + c**3 * mass(f)
    if kind == "H9":
        return higher_energy(f, "E9") - c**4 * mass(f)
    if kind == "H":
        return (higher_energy(f, "E5") + 2.0 * (beta**2 - alpha**2) * energy(f)
                + (alpha**2 + beta**2) ** 2 * mass(f))
    raise ValueError(f"unknown Lyapunov kind {kind!r}")


def functional(f: SampledField, kind: str, alpha: float = 0.0,
               beta: float = 0.0) -> FunctionalValue:
    if kind == "M":
        v = mass(f)
    elif kind == "E":
        v = energy(f)
    elif kind in ("E5", "E7", "E9"):
        v = higher_energy(f, kind)
    elif kind in ("H0", "H5", "H7", "H9", "H"):
        v = lyapunov(f, alpha, beta, kind)
    else:
        raise ValueError(f"unknown functional kind {kind!r}")
    return FunctionalValue(kind, v)


def sobolev_norm(f: SampledField, s: int = 2) -> float:
    """H^s norm (s = 0, 1, 2) with Fourier weight (1 + k^2)^s on the window."""
    if s not in (0, 1, 2):
        raise ValueError("s must be 0, 1 or 2")
    w = f.window
    k = w.wavenumbers()
    uhat = np.fft.fft(f.values) / w.n_points
    return math.sqrt(w.length * float(np.sum((1.0 + k**2) ** s * np.abs(uhat) ** 2)))


# --------------------------------------------------------------------------
# closed forms and reductions

def closed_form_energy(kind: str, alpha: float, beta: float) -> float:
    """Breather values: M = 2b, E = (2/3)b(3a^2-b^2), E5 = -(2/5)b g5,
    E7 = +(2/7)b g7, E9 = -(2/9)b g9."""
    if kind == "M":
        return 2.0 * beta
    if kind == "E":
        return (2.0 / 3.0) * beta * (3.0 * alpha**2 - beta**2)
    if kind == "E5":
        return -(2.0 / 5.0) * beta * cf.velocities(5, alpha, beta).gamma
    if kind == "E7":
        return +(2.0 / 7.0) * beta * cf.velocities(7, alpha, beta).gamma
    if kind == "E9":
        return -(2.0 / 9.0) * beta * cf.velocities(9, alpha, beta).gamma
    raise ValueError(f"no breather closed form for kind {kind!r}")


# E = s_n/(2n+1) * int (M)_t dx with int (M)_t = 2 beta gamma.  The +1/9
# variant in circulation fails the closed forms by a sign; see ledger.
REDUCTION_FACTORS = {5: -1.0 / 5.0, 7: +1.0 / 7.0, 9: -1.0 / 9.0}


def energy_reduction(order: int, alpha: float, beta: float, t: float = 0.0,
                     n_points: int = 4096) -> tuple[float, float]:
    """(quadrature energy, reduction value s_n/(2n+1) * int (M)_t dx)."""
    if order not in REDUCTION_FACTORS:
        raise ValueError("reduction defined for orders 5, 7, 9")
    p = cf.BreatherParams(order=order, alpha=alpha, beta=beta)
    w = default_window(p, t, n_points=n_points)
    f = sample_breather(p, t, w, m=4)
    e = higher_energy(f, f"E{order}")
    mt = cf.partial_mass_t(p, t, w.grid())
    return e, REDUCTION_FACTORS[order] * w.quad(mt)


def higher_energy_conjecture(order: int, alpha: float, beta: float) -> tuple[float, float]:
    """(conjectured value, lemma value) for E_{2n+1}[B].

    The conjectured formula (-1)^(n+1) (2 beta/(2n+1)) gamma_{2n+1} uses its
    own alternating-binomial sum for gamma_{2n+1}, which evaluates to the
    negative of the velocity gamma; the two columns therefore disagree by a
    sign.  Both are returned unreconciled.
    """
    if order not in (3, 5, 7, 9):
        raise ValueError("conjecture comparison covers orders 3, 5, 7, 9")
    n = (order - 1) // 2
    g_sum = sum((-1) ** j * math.comb(order, 2 * j) * alpha ** (2 * j)
                * beta ** (2 * (n - j)) for j in range(n + 1))
    conjectured = (-1) ** (n + 1) * (2.0 * beta / order) * g_sum
    kind = "E" if order == 3 else f"E{order}"
    return conjectured, closed_form_energy(kind, alpha, beta)


# --------------------------------------------------------------------------
# expansion of H around the breather

def quadratic_form_density(p: cf.BreatherParams, t: float, x: np.ndarray,
                           z: np.ndarray, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    """Integrand of Q[z], the second variation of H at B, in the
    integrated-by-parts layout (equals int z L z after two parts steps)."""
    j = cf.breather_jet(p, t, x, m=1)
    B, B1 = j.value, j.dx[0]
    a, b = p.alpha, p.beta
    mu2 = 2.0 * (b**2 - a**2)
    return (z2**2 + mu2 * z1**2 + (a**2 + b**2) ** 2 * z**2
            - 10.0 * B**2 * z1**2 - 10.0 * B1**2 * z**2 - 40.0 * B * B1 * z * z1
            + 30.0 * B**4 * z**2 - 12.0 * (b**2 - a**2) * B**2 * z**2)


def expansion_remainder(p: cf.BreatherParams, z: SampledField,
                        t: float) -> tuple[float, float]:
    """Split H[B+z] - H[B] into (quadratic = Q[z]/2, cubic-order remainder).

    The remainder obeys |N[z]| <= K ||z||_H2^3 for small z; callers verify
    the cubic order by a Richardson ratio.  Raises for ||z||_H2 > 0.1 where
    the contract is untestable.
    """
    nz = sobolev_norm(z, 2)
    if nz > 0.1:
        raise ValueError(f"perturbation H2 norm {nz:.3g} exceeds 0.1")
    w = z.window
    x = w.grid()
    zv, z1, z2 = z.values, z.deriv(1), z.deriv(2)
    quadratic = 0.5 * w.quad(quadratic_form_density(p, t, x, zv, z1, z2))
    j = cf.breather_jet(p, t, x, m=2)
    fB = SampledField(w, j.value, (j.dx[0], j.dx[1]))
    fBz = SampledField(w, j.value + zv, (j.dx[0] + z1, j.dx[1] + z2))
    dH = (lyapunov(fBz, p.alpha, p.beta, "H")
          - lyapunov(fB, p.alpha, p.beta, "H"))
    return quadratic, dH - quadratic
