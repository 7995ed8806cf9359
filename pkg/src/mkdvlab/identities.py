"""Residual verification of the nonlinear identities satisfied by breathers
and solitons, with a variant facility that adjudicates suspect terms
empirically.

Every identity is a list of terms (coefficient, symbols); a symbol is either
an integer k for the k-th x-derivative of the profile (0 for the profile
itself) or one of the tags "bt" (time derivative of the antiderivative
profile), "mt" (time derivative of the partial mass), "F9" (the cumulative
integral entering the 9th-order product identity).  Reports carry the sup of
the residual over the sample set together with rel_scale, the sup of the
largest constituent term, so thresholds are meaningful across parameter
sweeps.

Two printed readings are contested and settled here by variant runs: the
delta exponent in the 9th-order velocity pair, and one term (plus one
coefficient) of the 7th-order product identity.  The shipped defaults are
the readings that pass; the canned variant suites below reproduce the
adjudication.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import closed_forms as cf

IDENTITY_IDS = (
    "soliton_ode_2nd",
    "soliton_ode_high",
    "breather_ode",
    "evolution_identity",
    "evolution_delta",
    "lemma21_5th",
    "lemma21_7th",
    "lemma21_9th",
    "lemma23",
    "corollary_7th",
    "corollary_9th",
)

_SPECIAL_SYMBOLS = ("bt", "mt", "F9")


@dataclass(frozen=True)
class ResidualReport:
    identity_id: str
    params: dict
    sample_spec: str
    sup_residual: float
    rel_scale: float
    variant: str = "verbatim"

    def __post_init__(self):
        if not self.sup_residual >= 0:
            raise ValueError("sup_residual must be nonnegative")
        if not self.rel_scale > 0:
            raise ValueError("rel_scale must be positive")

    @property
    def normalized(self) -> float:
        return self.sup_residual / self.rel_scale

    def to_json_dict(self) -> dict:
        return {
            "identity_id": self.identity_id,
            "params": dict(self.params),
            "sup_residual": self.sup_residual,
            "rel_scale": self.rel_scale,
            "samples": self.sample_spec,
            "variant": self.variant,
        }


@dataclass(frozen=True)
class IdentityVariant:
    """term_substitutions: tuple of (term_index, coeff) or
    (term_index, coeff, symbols); an empty tuple reproduces the verbatim run.

    For the identity "evolution_delta" the substitutions target the delta
    velocity monomials (coeff, alpha_exp, beta_exp) of the 9th-order pair
    instead of residual terms.
    """

    identity_id: str
    term_substitutions: tuple = ()
    label: str = "verbatim"


def _substitute(terms, subs):
    terms = list(terms)
    for sub in subs:
        if len(sub) == 2:
            idx, coeff = sub
            syms = None
        elif len(sub) == 3:
            idx, coeff, syms = sub
        else:
            raise ValueError(f"malformed substitution {sub!r}")
        if not 0 <= idx < len(terms):
            raise ValueError(f"substitution index {idx} out of range")
        old = terms[idx]
        if syms is None:
            syms = old[1]
        else:
            syms = tuple(syms)
            old_max = max((s for s in old[1] if isinstance(s, int)), default=0)
            new_max = max((s for s in syms if isinstance(s, int)), default=0)
            if new_max > old_max:
                raise ValueError("substitution raises the differential order")
            old_special = sorted(s for s in old[1] if not isinstance(s, int))
            new_special = sorted(s for s in syms if not isinstance(s, int))
            if old_special != new_special:
                raise ValueError("substitution may not change bt/mt/F terms")
        terms[idx] = (float(coeff), syms)
    return tuple(terms)


def _eval_terms(terms, data):
    """(residual array, rel_scale) for a term list over sampled data."""
    total = 0.0
    scale = 0.0
    for coeff, syms in terms:
        prod = np.full_like(data[0], coeff)
        for s in syms:
            prod = prod * data[s]
        total = total + prod
        scale = max(scale, float(np.max(np.abs(prod))))
    return total, scale


# --------------------------------------------------------------------------
# sampling

def _cheb_nodes(center: float, radius: float, n: int) -> np.ndarray:
    i = np.arange(n)
    return center + radius * np.cos(np.pi * (2 * i + 1) / (2 * n))


def breather_samples(p: cf.BreatherParams, t: float, n_cheb: int = 256,
                     n_peak: int = 64,
                     radius_factor: float = 1.0) -> tuple[np.ndarray, str]:
    """Chebyshev nodes over the decay window + a cluster at the core."""
    v = p.velocities()
    core = -v.gamma * t - p.x2
    radius = (20.0 / p.beta + max(abs(p.x1), abs(p.x2)) + 2.0) * radius_factor
    x = np.concatenate([_cheb_nodes(core, radius, n_cheb),
                        _cheb_nodes(core, 2.0 / p.beta, n_peak)])
    x.sort()
    spec = (f"cheb{n_cheb}+peak{n_peak} radius={radius:.6g} "
            f"core={core:.6g} t={t:.6g}")
    return x, spec


def soliton_samples(sp: cf.SolitonParams, t: float, n_cheb: int = 256,
                    n_peak: int = 64,
                    radius_factor: float = 1.0) -> tuple[np.ndarray, str]:
    core = sp.speed() * t
    radius = (20.0 / np.sqrt(sp.c) + 2.0) * radius_factor
    x = np.concatenate([_cheb_nodes(core, radius, n_cheb),
                        _cheb_nodes(core, 2.0 / np.sqrt(sp.c), n_peak)])
    x.sort()
    spec = (f"cheb{n_cheb}+peak{n_peak} radius={radius:.6g} "
            f"core={core:.6g} t={t:.6g}")
    return x, spec


def _breather_data(p: cf.BreatherParams, t: float, x: np.ndarray, m: int,
                   vel: cf.Velocities | None = None) -> dict:
    jet = cf.breather_jet_raw(p.order, p.alpha, p.beta, p.x1, p.x2, t, x, m,
                              vel=vel)
    data = {0: jet.value, "bt": jet.dt_tilde}
    for k in range(1, m + 1):
        data[k] = jet.dx[k - 1]
    return data


def _breather_params_dict(p: cf.BreatherParams, t: float) -> dict:
    return {"order": p.order, "alpha": p.alpha, "beta": p.beta,
            "x1": p.x1, "x2": p.x2, "t": t}


# --------------------------------------------------------------------------
# identity term lists

def _breather_ode_terms(alpha: float, beta: float):
    mu2 = 2.0 * (beta**2 - alpha**2)
    return (
        (1.0, (4,)),
        (10.0, (0, 1, 1)),
        (10.0, (0, 0, 2)),
        (6.0, (0, 0, 0, 0, 0)),
        (-mu2, (2,)),
        (-2.0 * mu2, (0, 0, 0)),
        ((alpha**2 + beta**2) ** 2, (0,)),
    )


def _evolution_terms(order: int):
    return ((1.0, ("bt",)), (1.0, (order - 1,))) + tuple(cf.flux_terms(order))


def _lemma23_terms(alpha: float, beta: float):
    mu2 = 2.0 * (beta**2 - alpha**2)
    return (
        (1.0, ("bt",)),
        (-((alpha**2 + beta**2) ** 2), (0,)),
        (mu2, (2,)),
        (2.0 * mu2, (0, 0, 0)),
    )


_LEMMA21_5TH = (
    (1.0, (2, 2)),
    (-2.0, (0, "bt")),
    (2.0, ("mt",)),
    (-2.0, (0, 0, 0, 0, 0, 0)),
    (-2.0, (1, 3)),
    (-10.0, (0, 0, 1, 1)),
)

# as printed; see FIRSTMKDV_VARIANTS for the adjudicated corrections
_LEMMA21_7TH = (
    (1.0, (3, 3)),
    (2.0, (0, "bt")),
    (-2.0, ("mt",)),
    (5.0, (0,) * 8),
    (2.0, (1, 5)),
    (-2.0, (2, 2, 4)),
    (28.0, (0, 0, 1, 3)),
    (-14.0, (0, 0, 2, 2)),
    (56.0, (0, 1, 1, 2)),
    (7.0, (1, 1, 1, 1)),
    (70.0, (0, 0, 0, 0, 1, 1)),
)

_LEMMA21_9TH = (
    (1.0, (4, 4)),
    (-2.0, (0, "bt")),
    (2.0, ("mt",)),
    (-2.0, (1, 7)),
    (2.0, (2, 6)),
    (-2.0, (3, 5)),
    (1.0, ("F9",)),
)


def _corollary7_terms(alpha: float, beta: float):
    a2, b2 = alpha**2, beta**2
    return (
        (1.0, ("bt",)),
        (-2.0 * (b2 - a2) * (a2 + b2) ** 2, (0,)),
        (4.0 * (a2**2 - 6.0 * a2 * b2 + b2**2), (0, 0, 0)),
        (4.0 * (b2 - a2), (0,) * 5),
        (-4.0, (0,) * 7),
        (3.0 * a2**2 - 10.0 * a2 * b2 + 3.0 * b2**2, (2,)),
        (4.0 * (b2 - a2), (0, 1, 1)),
        (-20.0, (0, 0, 0, 1, 1)),
        (2.0, (0, 2, 2)),
        (-4.0, (0, 1, 3)),
    )


def _corollary9_terms(alpha: float, beta: float):
    a2, b2 = alpha**2, beta**2
    a0 = -((a2 + b2) ** 2) * (3.0 * a2**2 - 10.0 * a2 * b2 + 3.0 * b2**2)
    a1 = -4.0 * (a2 - b2) * (a2**2 - 14.0 * a2 * b2 + b2**2)
    a2c = -2.0 * (a2**2 + 18.0 * a2 * b2 + b2**2)
    a3 = 2.0 * (5.0 * a2**2 - 6.0 * a2 * b2 + 5.0 * b2**2)
    a4 = -4.0 * (a2 - b2) * (a2**2 - 6.0 * a2 * b2 + b2**2)
    return (
        (1.0, ("bt",)),
        (a0, (0,)),
        (a1, (0, 0, 0)),
        (a2c, (0,) * 5),
        (16.0 * (b2 - a2), (0,) * 7),
        (-26.0, (0,) * 9),
        (a3, (1, 1, 0)),
        (32.0 * (a2 - b2), (1, 1, 0, 0, 0)),
        (-100.0, (1, 1, 0, 0, 0, 0, 0)),
        (-2.0, (1, 1, 1, 1, 0)),
        (a4, (2,)),
        (-6.0 * (a2 + b2) ** 2, (2, 0, 0)),
        (20.0 * (b2 - a2), (2, 0, 0, 0, 0)),
        (-28.0, (2, 0, 0, 0, 0, 0, 0)),
        (4.0 * (b2 - a2), (1, 1, 2)),
        (-12.0, (1, 1, 2, 0, 0)),
        (8.0 * (b2 - a2), (2, 2, 0)),
        (-4.0, (2, 2, 0, 0, 0)),
        (2.0, (2, 2, 2)),
        (8.0 * (a2 - b2), (1, 3, 0)),
        (-32.0, (1, 3, 0, 0, 0)),
        (-4.0, (1, 2, 3)),
        (-2.0, (3, 3, 0)),
    )


def _max_deriv(terms) -> int:
    return max((s for _, syms in terms for s in syms if isinstance(s, int)),
               default=0)


# --------------------------------------------------------------------------
# residual operations

def soliton_ode_residual(p: cf.SolitonParams, level: str = "2nd",
                         t: float = 0.0, samples=None) -> ResidualReport:
    """Second-order profile equation, or the order-matched high ODE."""
    if level == "2nd":
        terms = ((1.0, (2,)), (-p.c, (0,)), (2.0, (0, 0, 0)))
        ident = "soliton_ode_2nd"
    elif level == "high":
        n = (p.order - 1) // 2
        terms = ((1.0, (p.order - 1,)), (-(p.c**n), (0,))) + tuple(
            cf.flux_terms(p.order))
        ident = "soliton_ode_high"
    else:
        raise ValueError(f"unknown level {level!r}")
    x, spec = samples if samples is not None else soliton_samples(p, t)
    m = _max_deriv(terms)
    jet = cf.soliton_jet_raw(p.order, p.c, t, x, m)
    data = {0: jet.value, "bt": jet.dt_tilde}
    for k in range(1, m + 1):
        data[k] = jet.dx[k - 1]
    res, scale = _eval_terms(terms, data)
    return ResidualReport(ident, {"order": p.order, "c": p.c, "t": t,
                                  "level": level}, spec,
                          float(np.max(np.abs(res))), scale)


def breather_ode_residual(p: cf.BreatherParams, t: float,
                          substitutions=(), variant="verbatim",
                          samples=None) -> ResidualReport:
    """Fourth-order stationary equation; holds for every order at fixed t."""
    terms = _substitute(_breather_ode_terms(p.alpha, p.beta), substitutions)
    x, spec = samples if samples is not None else breather_samples(p, t)
    data = _breather_data(p, t, x, _max_deriv(terms))
    res, scale = _eval_terms(terms, data)
    return ResidualReport("breather_ode", _breather_params_dict(p, t), spec,
                          float(np.max(np.abs(res))), scale, variant)


def evolution_identity_residual(p: cf.BreatherParams, t: float = 0.37,
                                substitutions=(), variant="verbatim",
                                vel: cf.Velocities | None = None,
                                samples=None) -> ResidualReport:
    terms = _substitute(_evolution_terms(p.order), substitutions)
    x, spec = samples if samples is not None else breather_samples(p, t)
    data = _breather_data(p, t, x, _max_deriv(terms), vel=vel)
    res, scale = _eval_terms(terms, data)
    return ResidualReport("evolution_identity", _breather_params_dict(p, t),
                          spec, float(np.max(np.abs(res))), scale, variant)


def evolution_delta_residual(p: cf.BreatherParams, t: float = 0.37,
                             substitutions=(), variant="verbatim") -> ResidualReport:
    """Evolution identity with substituted delta-velocity monomials."""
    dterms, gterms = cf.VELOCITY_TERMS[p.order]
    dterms = list(dterms)
    for sub in substitutions:
        if len(sub) != 2 or len(sub[1]) != 3:
            raise ValueError(f"malformed velocity substitution {sub!r}")
        idx, mono = sub
        if not 0 <= idx < len(dterms):
            raise ValueError(f"velocity substitution index {idx} out of range")
        dterms[idx] = (float(mono[0]), int(mono[1]), int(mono[2]))
    vel = cf.Velocities(cf.eval_velocity_terms(dterms, p.alpha, p.beta),
                        cf.eval_velocity_terms(gterms, p.alpha, p.beta))
    rep = evolution_identity_residual(p, t, vel=vel, variant=variant)
    return ResidualReport("evolution_delta", rep.params, rep.sample_spec,
                          rep.sup_residual, rep.rel_scale, variant)


_LEMMA21_CASES = {"5th": (5, _LEMMA21_5TH), "7th": (7, _LEMMA21_7TH),
                  "9th": (9, _LEMMA21_9TH)}


def _cumulative_integral(g: np.ndarray, spacing: float) -> np.ndarray:
    """Antiderivative vanishing at the left edge, by Fourier integration.

    Valid for smooth g decaying at both window edges; the mean is carried
    by an explicit linear ramp.
    """
    n = len(g)
    ghat = np.fft.rfft(g)
    mean = ghat[0].real / n
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=spacing)
    inv = np.zeros_like(ghat)
    inv[1:] = ghat[1:] / (1j * k[1:])
    if n % 2 == 0:
        inv[-1] = 0.0
    F = np.fft.irfft(inv, n) + mean * spacing * np.arange(n)
    return F - F[0]


def lemma21_residual(p: cf.BreatherParams, case: str, t: float = 0.37,
                     substitutions=(), variant="verbatim",
                     n_grid: int = 4096, half_factor: float = 1.0,
                     samples=None) -> ResidualReport:
    """Product identities obtained by multiplying the evolution identity by
    B_x and integrating; the 9th-order case carries a cumulative-integral
    term and is therefore evaluated on a uniform window grid."""
    if case not in _LEMMA21_CASES:
        raise ValueError(f"case must be one of {tuple(_LEMMA21_CASES)}")
    order, base_terms = _LEMMA21_CASES[case]
    if p.order != order:
        raise ValueError(f"case {case} needs an order-{order} breather, "
                         f"got order {p.order}")
    terms = _substitute(base_terms, substitutions)

    if case == "9th":
        v = p.velocities()
        core = -v.gamma * t - p.x2
        half = (30.0 / p.beta + max(abs(p.x1), abs(p.x2)) + 5.0) * half_factor
        h = 2.0 * half / n_grid
        x = core - half + h * np.arange(n_grid)
        spec = f"grid{n_grid} half={half:.6g} core={core:.6g} t={t:.6g}"
        data = _breather_data(p, t, x, max(_max_deriv(terms), 7))
        g = -2.0 * cf.eval_flux_terms(cf.flux_terms(9), [data[k] for k in range(7)]) * data[1]
        data["F9"] = _cumulative_integral(g, h)
    else:
        x, spec = samples if samples is not None else breather_samples(p, t)
        data = _breather_data(p, t, x, _max_deriv(terms))
    data["mt"] = cf.partial_mass_t(p, t, x)
    res, scale = _eval_terms(terms, data)
    return ResidualReport(f"lemma21_{case}", _breather_params_dict(p, t), spec,
                          float(np.max(np.abs(res))), scale, variant)


def lemma23_residual(p: cf.BreatherParams, t: float,
                     substitutions=(), variant="verbatim",
                     samples=None) -> ResidualReport:
    """First-order-in-time identity; holds for 5th-order breathers only."""
    if p.order != 5:
        raise ValueError("the identity holds for order-5 breathers only")
    terms = _substitute(_lemma23_terms(p.alpha, p.beta), substitutions)
    x, spec = samples if samples is not None else breather_samples(p, t)
    data = _breather_data(p, t, x, _max_deriv(terms))
    res, scale = _eval_terms(terms, data)
    return ResidualReport("lemma23", _breather_params_dict(p, t), spec,
                          float(np.max(np.abs(res))), scale, variant)


def corollary_residual(p: cf.BreatherParams, case: str, t: float = 0.37,
                       substitutions=(), variant="verbatim",
                       samples=None) -> ResidualReport:
    if case == "7th":
        need, builder = 7, _corollary7_terms
    elif case == "9th":
        need, builder = 9, _corollary9_terms
    else:
        raise ValueError(f"case must be '7th' or '9th', got {case!r}")
    if p.order != need:
        raise ValueError(f"case {case} needs an order-{need} breather, "
                         f"got order {p.order}")
    terms = _substitute(builder(p.alpha, p.beta), substitutions)
    x, spec = samples if samples is not None else breather_samples(p, t)
    data = _breather_data(p, t, x, _max_deriv(terms))
    res, scale = _eval_terms(terms, data)
    return ResidualReport(f"corollary_{case}", _breather_params_dict(p, t),
                          spec, float(np.max(np.abs(res))), scale, variant)


# --------------------------------------------------------------------------
# variant adjudication

# printed 9th-order delta monomial has an odd alpha power; the replacement
# candidates keep the even-exponent structure of every other velocity pair
DELTA9_VARIANTS = (
    IdentityVariant("evolution_delta", ((3, (84.0, 3, 6)),), "printed-a3b6"),
    IdentityVariant("evolution_delta", ((3, (84.0, 6, 2)),), "swapped-a6b2"),
    IdentityVariant("evolution_delta", ((3, (84.0, 2, 6)),), "resolved-a2b6"),
)

# 7th-order product identity: the printed term -2 B_xx^2 B_4x (index 5) and
# the printed coefficient 7 B_x^4 (index 9)
FIRSTMKDV_VARIANTS = (
    IdentityVariant("lemma21_7th", (), "printed"),
    IdentityVariant("lemma21_7th", ((5, -2.0, (2, 4)),), "degree-fixed"),
    IdentityVariant("lemma21_7th", ((5, -2.0, (2, 4)), (9, 21.0, (1, 1, 1, 1))),
                    "derived"),
)

_CANONICAL = {
    "breather_ode": (cf.BreatherParams(5, 1.1, 0.9, 0.15, -0.25), 0.37),
    "evolution_identity": (cf.BreatherParams(9, 1.3, 0.7, 0.2, -0.1), 0.37),
    "evolution_delta": (cf.BreatherParams(9, 1.3, 0.7, 0.2, -0.1), 0.37),
    "lemma21_5th": (cf.BreatherParams(5, 1.1, 0.9, 0.15, -0.25), 0.37),
    "lemma21_7th": (cf.BreatherParams(7, 1.1, 0.9, 0.15, -0.25), 0.37),
    "lemma21_9th": (cf.BreatherParams(9, 1.1, 0.9, 0.15, -0.25), 0.37),
    "lemma23": (cf.BreatherParams(5, 1.1, 0.9, 0.15, -0.25), 0.37),
    "corollary_7th": (cf.BreatherParams(7, 1.1, 0.9, 0.15, -0.25), 0.37),
    "corollary_9th": (cf.BreatherParams(9, 1.1, 0.9, 0.15, -0.25), 0.37),
}


def run_variants(base: str, variants, p: cf.BreatherParams | None = None,
                 t: float | None = None) -> list[ResidualReport]:
    """One report per variant on identical samples; an empty list runs the
    verbatim identity.  Deterministic ordering, duplicate in -> duplicate out."""
    if base not in _CANONICAL:
        raise ValueError(f"no variant support for identity {base!r}")
    p0, t0 = _CANONICAL[base]
    if p is not None:
        p0 = p
    if t is not None:
        t0 = t
    if not variants:
        variants = [IdentityVariant(base)]
    reports = []
    for v in variants:
        if v.identity_id != base:
            raise ValueError(f"variant for {v.identity_id!r} passed to {base!r}")
        subs = tuple(v.term_substitutions)
        if base == "breather_ode":
            reports.append(breather_ode_residual(p0, t0, subs, v.label))
        elif base == "evolution_identity":
            reports.append(evolution_identity_residual(p0, t0, subs, v.label))
        elif base == "evolution_delta":
            reports.append(evolution_delta_residual(p0, t0, subs, v.label))
        elif base.startswith("lemma21_"):
            reports.append(lemma21_residual(p0, base[-3:], t0, subs, v.label))
        elif base == "lemma23":
            reports.append(lemma23_residual(p0, t0, subs, v.label))
        elif base.startswith("corollary_"):
            reports.append(corollary_residual(p0, base[-3:], t0, subs, v.label))
    return reports


def adjudicate_delta9(p: cf.BreatherParams | None = None,
                      t: float | None = None) -> list[ResidualReport]:
    return run_variants("evolution_delta", DELTA9_VARIANTS, p, t)


def adjudicate_firstmkdv(p: cf.BreatherParams | None = None,
                         t: float | None = None) -> list[ResidualReport]:
    return run_variants("lemma21_7th", FIRSTMKDV_VARIANTS, p, t)
