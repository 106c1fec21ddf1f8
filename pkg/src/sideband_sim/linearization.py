"""
Linearization of the driven, generally-coupled two-oscillator model.

The rotating-frame Hamiltonian is

    H = Δ₀ a'†a' + ω_b b'†b' + g' F(a'†, a') (b'† + b') + f (a'† + a')

with ``F`` a normal-ordered polynomial.  Displacing both modes around a
coherent point (α, β), the first-order terms vanish at the mean-field
equilibrium and the second-order terms give the beam-splitter plus
counter-rotating (``Full``) model with effective detuning and coupling

    Δ_eff = Δ₀ + 2 Re(β) g' ∂²F/∂x∂y,      g_eff = g' ∂F/∂x,

everything evaluated at (x, y) = (α*, α).

``f`` is the effective rotating-frame drive amplitude; whatever prefactor
relates it to a lab-frame ``f₀ cos(ω_d t)`` drive belongs to the caller.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ConfigError, MultistabilityError

__all__ = [
    "FSpec",
    "FValue",
    "Equilibrium",
    "LinearizedModel",
    "ExpansionResidual",
    "eval_f",
    "mean_field_energy",
    "stationarity_residual",
    "equilibrium_displacements",
    "real_equilibria",
    "linearized_params",
    "linearize",
    "expansion_residual",
]


@dataclass(frozen=True)
class FSpec:
    """Normal-ordered polynomial ``F(x, y) = Σ c x^m y^n`` with x ↔ a†, y ↔ a.

    Monomials with equal powers are merged on construction.  The polynomial
    must be Hermitian: every ``(m, n, c)`` has a partner ``(n, m, c)``.
    """

    monomials: tuple = field(default=())

    def __post_init__(self):
        merged: dict[tuple[int, int], float] = {}
        for item in self.monomials:
            try:
                m, n, c = item
            except (TypeError, ValueError):
                raise ConfigError(f"f_spec entry {item!r} is not an (m, n, coefficient) triple",
                                  field="coupling.f_spec") from None
            if int(m) != m or int(n) != n or m < 0 or n < 0:
                raise ConfigError(f"f_spec powers must be non-negative integers, got {item!r}",
                                  field="coupling.f_spec")
            key = (int(m), int(n))
            merged[key] = merged.get(key, 0.0) + float(c)
        cleaned = tuple(sorted((m, n, c) for (m, n), c in merged.items() if c != 0.0))
        for m, n, c in cleaned:
            partner = merged.get((n, m), 0.0)
            if not np.isclose(partner, c, rtol=1e-12, atol=0.0):
                raise ConfigError(
                    f"f_spec is not Hermitian: ({m}, {n}, {c}) lacks the partner ({n}, {m}, {c})",
                    field="coupling.f_spec",
                )
        object.__setattr__(self, "monomials", cleaned)

    @classmethod
    def number(cls) -> "FSpec":
        """``F = a†a``: radiation-pressure coupling."""
        return cls(((1, 1, 1.0),))

    @classmethod
    def position(cls) -> "FSpec":
        """``F = a† + a``."""
        return cls(((1, 0, 1.0), (0, 1, 1.0)))

    @property
    def degree(self) -> int:
        return max((m + n for m, n, _ in self.monomials), default=0)


class FValue(NamedTuple):
    value: complex
    dx: complex
    dy: complex
    dxy: complex


def eval_f(spec: FSpec, x: complex, y: complex) -> FValue:
    """Value and first/mixed partial derivatives of ``F`` at ``(x, y)``."""
    value = dx = dy = dxy = 0j
    for m, n, c in spec.monomials:
        value += c * x**m * y**n
        if m:
            dx += c * m * x ** (m - 1) * y**n
        if n:
            dy += c * n * x**m * y ** (n - 1)
        if m and n:
            dxy += c * m * n * x ** (m - 1) * y ** (n - 1)
    return FValue(value, dx, dy, dxy)


def mean_field_energy(spec, g_prime, f_drive, delta0, omega_b, alpha, beta) -> float:
    """Coherent-state expectation of the rotating-frame Hamiltonian."""
    fv = eval_f(spec, np.conj(alpha), alpha)
    e = (delta0 * abs(alpha) ** 2 + omega_b * abs(beta) ** 2
         + g_prime * fv.value * 2 * beta.real + 2 * f_drive * alpha.real)
    return float(np.real(e))


def _gradients(spec, g_prime, f_drive, delta0, omega_b, alpha, beta):
    # ∂E/∂α*, ∂E/∂β*
    fv = eval_f(spec, np.conj(alpha), alpha)
    d_alpha = delta0 * alpha + g_prime * fv.dx * 2 * beta.real + f_drive
    d_beta = omega_b * beta + g_prime * fv.value
    return d_alpha, d_beta


def stationarity_residual(spec, g_prime, f_drive, delta0, omega_b, alpha, beta) -> float:
    """Max-norm of the mean-field stationarity conditions at (α, β)."""
    d_alpha, d_beta = _gradients(spec, g_prime, f_drive, delta0, omega_b,
                                 complex(alpha), complex(beta))
    return float(max(abs(d_alpha), abs(d_beta)))


@dataclass(frozen=True)
class Equilibrium:
    alpha: complex
    beta: complex
    residual: float
    default: bool = False


def _check_inputs(delta0, omega_b):
    if delta0 == 0:
        raise ConfigError("delta0 must be non-zero", field="delta0")
    if omega_b <= 0:
        raise ConfigError("omega_b must be positive", field="omega_b")


def _fixed_point(spec, g_prime, f_drive, delta0, omega_b, alpha0, tol, max_iter, damping):
    alpha = complex(alpha0)
    for _ in range(max_iter):
        fv = eval_f(spec, np.conj(alpha), alpha)
        beta = -g_prime * fv.value / omega_b
        target = -(f_drive + g_prime * fv.dx * 2 * beta.real) / delta0
        new = (1 - damping) * alpha + damping * target
        if not np.isfinite(new) or abs(new) > 1e100:
            return None
        alpha = new
        beta = -g_prime * eval_f(spec, np.conj(alpha), alpha).value / omega_b
        if stationarity_residual(spec, g_prime, f_drive, delta0, omega_b, alpha, beta) < tol:
            return alpha, beta
    return None


def _reduced_polynomial(spec, g_prime, f_drive, delta0, omega_b) -> Polynomial:
    # h(α) for real α after eliminating β = -g' F(α, α)/ω_b
    f_diag = Polynomial([0.0])
    dfx_diag = Polynomial([0.0])
    for m, n, c in spec.monomials:
        f_diag = f_diag + Polynomial([0.0] * (m + n) + [c])
        if m:
            dfx_diag = dfx_diag + Polynomial([0.0] * (m + n - 1) + [c * m])
    beta_poly = -g_prime * f_diag / omega_b
    return Polynomial([f_drive, delta0]) + 2 * g_prime * beta_poly * dfx_diag


def _polish(poly: Polynomial, x: float, steps: int = 50) -> float:
    dpoly = poly.deriv()
    for _ in range(steps):
        d = dpoly(x)
        if d == 0:
            break
        step = poly(x) / d
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return float(x)


def _real_roots(spec, g_prime, f_drive, delta0, omega_b) -> list[float]:
    poly = _reduced_polynomial(spec, g_prime, f_drive, delta0, omega_b).trim(tol=0.0)
    if poly.degree() < 1:
        return []
    roots = poly.roots()
    scale = max(1.0, float(np.max(np.abs(roots))))
    real = sorted(_polish(poly, r.real) for r in roots if abs(r.imag) <= 1e-7 * scale)
    unique: list[float] = []
    for r in real:
        if not unique or abs(r - unique[-1]) > 1e-9 * max(1.0, abs(r)):
            unique.append(r)
    return unique


def _continued_root(spec, g_prime, f_drive, delta0, omega_b, steps=200) -> float | None:
    """Follow the root from g' = 0 (α = -f/Δ₀) to the requested g'."""
    x = -f_drive / delta0
    for s in np.linspace(0.0, 1.0, steps + 1)[1:]:
        poly = _reduced_polynomial(spec, s * g_prime, f_drive, delta0, omega_b)
        dpoly = poly.deriv()
        for _ in range(100):
            d = dpoly(x)
            if d == 0 or not np.isfinite(d):
                return None
            step = poly(x) / d
            x -= step
            if abs(step) <= 1e-15 * max(1.0, abs(x)):
                break
        else:
            return None
    return float(x)


def real_equilibria(spec: FSpec, g_prime: float, f_drive: float, delta0: float,
                    omega_b: float) -> list[Equilibrium]:
    """Every real equilibrium, in increasing α, with the continuation root marked ``default``."""
    _check_inputs(delta0, omega_b)
    roots = _real_roots(spec, g_prime, f_drive, delta0, omega_b)
    if not roots and f_drive == 0:
        roots = [0.0]
    chosen = _continued_root(spec, g_prime, f_drive, delta0, omega_b)
    idx = 0 if len(roots) == 1 else None
    if chosen is not None and roots:
        idx = int(np.argmin([abs(r - chosen) for r in roots]))
    out = []
    for i, a in enumerate(roots):
        alpha = complex(a)
        beta = complex(-g_prime * eval_f(spec, a, a).value / omega_b)
        res = stationarity_residual(spec, g_prime, f_drive, delta0, omega_b, alpha, beta)
        out.append(Equilibrium(alpha, beta, res, default=(i == idx)))
    return out


def equilibrium_displacements(spec: FSpec, g_prime: float, f_drive: float, delta0: float,
                              omega_b: float, tol: float = 1e-12, max_iter: int = 10_000,
                              damping: float = 0.5) -> tuple[complex, complex]:
    """Mean-field equilibrium (α, β) of the driven model.

    Solves ``β = -g' F(α*, α)/ω_b`` and ``α = -[f + 2 Re(β) g' ∂_x F(α*, α)]/Δ₀``
    by damped fixed-point iteration started at the undisplaced-drive value
    ``-f/Δ₀``.  When the iteration stalls, the real roots of the reduced
    scalar equation are located instead; a unique root is returned, several
    roots raise :class:`MultistabilityError` carrying them all.
    """
    _check_inputs(delta0, omega_b)
    result = _fixed_point(spec, g_prime, f_drive, delta0, omega_b, -f_drive / delta0,
                          tol, max_iter, damping)
    if result is not None:
        return result
    roots = [r for r in real_equilibria(spec, g_prime, f_drive, delta0, omega_b)
             if r.residual < max(tol, 1e-9)]
    if len(roots) == 1:
        return roots[0].alpha, roots[0].beta
    if roots:
        listing = ", ".join(f"alpha={r.alpha.real:.10g} (residual {r.residual:.2e})" for r in roots)
        raise MultistabilityError(
            f"fixed-point iteration did not converge; {len(roots)} real equilibria: {listing}",
            roots=roots,
        )
    # no real root: retry in complex arithmetic from a rotated start
    for start in (1j * f_drive / delta0, (1 + 1j) * f_drive / delta0):
        result = _fixed_point(spec, g_prime, f_drive, delta0, omega_b, start, tol, max_iter, 0.1)
        if result is not None:
            return result
    raise MultistabilityError("no equilibrium found (real or complex search)", roots=[])


def linearized_params(spec: FSpec, g_prime: float, alpha: complex, beta: complex,
                      delta0: float) -> tuple[float, float]:
    """Effective (Δ, g) of the displaced model."""
    fv = eval_f(spec, np.conj(alpha), alpha)
    delta_eff = delta0 + 2 * np.real(beta) * g_prime * np.real(fv.dxy)
    g_eff = g_prime * fv.dx
    if abs(np.imag(g_eff)) > 1e-12 * max(1.0, abs(g_eff)):
        # complex displacement: only the modulus survives a phase redefinition of a
        return float(delta_eff), float(abs(g_eff))
    return float(delta_eff), float(np.real(g_eff))


@dataclass(frozen=True)
class LinearizedModel:
    alpha: complex
    beta: complex
    delta_eff: float
    g_eff: float
    residual: float


def linearize(spec: FSpec, g_prime: float, f_drive: float, delta0: float, omega_b: float,
              tol: float = 1e-12) -> LinearizedModel:
    alpha, beta = equilibrium_displacements(spec, g_prime, f_drive, delta0, omega_b, tol=tol)
    delta_eff, g_eff = linearized_params(spec, g_prime, alpha, beta, delta0)
    res = stationarity_residual(spec, g_prime, f_drive, delta0, omega_b, alpha, beta)
    return LinearizedModel(complex(alpha), complex(beta), delta_eff, g_eff, res)


class ExpansionResidual(NamedTuple):
    linear: float
    quadratic: float


def expansion_residual(spec, g_prime, f_drive, delta0, omega_b, alpha, beta,
                       step: float = 1e-3) -> ExpansionResidual:
    """Finite-difference check of the displaced expansion.

    Differentiates the mean-field energy numerically in the real coordinates
    (Re α, Im α, Re β, Im β) with one Richardson refinement.  ``linear`` is
    the gradient max-norm (zero only at a true equilibrium); ``quadratic`` is
    the max mismatch between the numerical Hessian and the Hessian of
    ``Δ_eff|δa|² + ω_b|δb|² + g_eff(δa + δa*)(δb + δb*)``.
    """
    alpha = complex(alpha)
    beta = complex(beta)
    u0 = np.array([alpha.real, alpha.imag, beta.real, beta.imag])

    def energy(u):
        return mean_field_energy(spec, g_prime, f_drive, delta0, omega_b,
                                 complex(u[0], u[1]), complex(u[2], u[3]))

    eye = np.eye(4)

    def grad(h):
        return np.array([(energy(u0 + h * e) - energy(u0 - h * e)) / (2 * h) for e in eye])

    def hess(h):
        out = np.empty((4, 4))
        for i in range(4):
            for j in range(i, 4):
                ei, ej = h * eye[i], h * eye[j]
                val = (energy(u0 + ei + ej) - energy(u0 + ei - ej)
                       - energy(u0 - ei + ej) + energy(u0 - ei - ej)) / (4 * h * h)
                out[i, j] = out[j, i] = val
        return out

    g_num = (4 * grad(step / 2) - grad(step)) / 3
    h_num = (4 * hess(step / 2) - hess(step)) / 3

    delta_eff, g_eff = linearized_params(spec, g_prime, alpha, beta, delta0)
    h_pred = np.diag([2 * delta_eff, 2 * delta_eff, 2 * omega_b, 2 * omega_b])
    h_pred[0, 2] = h_pred[2, 0] = 4 * g_eff
    return ExpansionResidual(float(np.max(np.abs(g_num))), float(np.max(np.abs(h_num - h_pred))))
