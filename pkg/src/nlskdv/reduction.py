"""KdV reduction of the coupled condensate dynamics, branch by branch.

A weak long-wavelength perturbation riding on branch j of the linear problem,

    (delta_rho; delta_v) = eps^2 f(eps(x - lam_j t), eps^3 t) * (a; b),

obeys a KdV equation for the profile f:

    d_tau f + B_j f f' + A_j f''' = 0.

Projecting the quadratic and quantum-pressure terms onto the dual eigenvector
(w_rho; w_v) of the linearization gives the coefficients

    A_j = -(hbar^2/4) sum_k w_v[k] a[k] / rho0_k
    B_j = sum_k ( 2 w_rho[k] a[k] b[k] + w_v[k] b[k]^2 ),

with (a; b) the branch column of V and (w_rho; w_v) the matching column of
W = (V^-T).  Left movers come out with lam -> -lam and A -> -A, B unchanged.

B_j (unlike A_j and lam_j) scales with the eigenvector normalization, so the
coefficients are computed in a canonical gauge: the velocity direction b is
rescaled to have last component +1 (falling back to the largest-magnitude
entry when that component vanishes).  This pins B_j to the printed closed
forms for two and three components, makes the output independent of any
upstream column scaling, and leaves every physical field (which only sees
products like a*f) unchanged.

The module also evaluates those closed forms directly as an independent
check, builds the sech^2 soliton profile for a branch, reconstructs physical
density/velocity fields from a profile, and synthesizes wavefunctions via the
Madelung transform.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .nls import FieldState, Grid
from .spectrum import (
    Background,
    LinearSpectrum,
    StructuredCoupling,
    branch_column,
    eigensystem,
)

__all__ = [
    "KdvModel",
    "ScalingParams",
    "SolitonProfile",
    "ClosedFormN2",
    "ClosedFormN3",
    "DegenerateBranchError",
    "ZeroNonlinearityError",
    "kdv_coefficients",
    "kdv_from_eigenpair",
    "kdv_coefficients_closed_form",
    "soliton_profile",
    "soliton_phases",
    "reconstruct_fields",
    "madelung_synthesize",
    "lab_frame_speed",
]

ZERO_NONLINEARITY_TOL = 1e-12


class DegenerateBranchError(ValueError):
    """Requested branch has a repeated sound speed.

    Repeated speeds couple the branch profiles into a system of KdV
    equations, which this library does not model; only simple branches are
    reduced.
    """


class ZeroNonlinearityError(ValueError):
    """The branch KdV is linear (B ~ 0); there is no sech^2 soliton.

    Evolve such branches spectrally with kdvref.linear_kdv_evolve instead.
    """


@dataclass(frozen=True, eq=False)
class KdvModel:
    """Per-branch KdV data: signed speed, coefficients, field directions.

    branch is the signed public index (+1 = fastest right mover); lam carries
    the sign.  a and b are the density/velocity eigen-directions (the branch
    column of V split in halves), w_rho / w_v the matching dual column.
    """

    branch: int
    lam: float
    dispersion: float      # A_j
    nonlinearity: float    # B_j
    a: np.ndarray
    b: np.ndarray
    w_rho: np.ndarray
    w_v: np.ndarray

    @property
    def is_linear(self) -> bool:
        return abs(self.nonlinearity) <= ZERO_NONLINEARITY_TOL


@dataclass(frozen=True)
class ScalingParams:
    """Amplitude/length scaling eps and KdV-frame soliton speed."""

    epsilon: float
    soliton_speed: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if not self.soliton_speed > 0.0:
            raise ValueError("soliton speed must be positive")


@dataclass(frozen=True)
class ClosedFormN2:
    """A = g1 rho1 + g2 rho2, C = g1 rho1 - g2 rho2, B = sqrt(discriminant)."""

    a_sum: float
    c_diff: float
    b_disc: float


@dataclass(frozen=True)
class ClosedFormN3:
    """X, Y, Z, W combinations for the three-component degenerate-pair case."""

    x: float
    y: float
    z: float
    w: float


@dataclass(frozen=True)
class SolitonProfile:
    """f(xi, tau) = amplitude * sech^2(kappa (xi - speed * tau)).

    Exact traveling solution of d_tau f + B f f' + A f''' = 0 with
    amplitude = 3 V A / B, kappa = sqrt(V)/2 and speed = A V.
    """

    amplitude: float
    kappa: float
    speed: float

    def __call__(self, xi, tau=0.0):
        arg = self.kappa * (np.asarray(xi, dtype=float) - self.speed * tau)
        return self.amplitude / np.cosh(arg) ** 2


def _canonical_gauge(q: np.ndarray) -> float:
    """Scale factor putting the velocity direction in the canonical gauge."""
    scale = q[-1]
    if abs(scale) <= 1e-8 * np.max(np.abs(q)):
        scale = q[np.argmax(np.abs(q))]
    return scale


def kdv_from_eigenpair(lam_signed: float, q: np.ndarray, bg: Background,
                       branch: int = 0) -> KdvModel:
    """KdV model from a single eigenpair of alpha @ rho.

    lam_signed is the signed sound speed (lam_signed^2 the eigenvalue), q the
    eigenvector in any scaling.  The V/W column blocks are reconstructed from
    q alone via l = sum rho q^2:

        a = rho q / lam,  b = q,  w_rho = lam q / (2 l),  w_v = rho q / (2 l).
    """
    q = np.asarray(q, dtype=float) / _canonical_gauge(np.asarray(q, dtype=float))
    lam = float(lam_signed)
    rho = bg.rho0
    ell = float(np.sum(rho * q * q))
    a = rho * q / lam
    b = q.copy()
    w_rho = lam * q / (2.0 * ell)
    w_v = rho * q / (2.0 * ell)
    hbar = bg.hbar
    dispersion = -(hbar**2 / 4.0) * float(np.sum(w_v * a / rho))
    nonlinearity = float(np.sum(2.0 * w_rho * a * b + w_v * b * b))
    return KdvModel(branch=branch, lam=lam, dispersion=dispersion,
                    nonlinearity=nonlinearity, a=a, b=b, w_rho=w_rho, w_v=w_v)


def kdv_coefficients(spectrum: LinearSpectrum, bg: Background,
                     branch: int) -> KdvModel:
    """KdV coefficients for one signed branch by dual-eigenvector projection.

    Extracts the branch column of V and the matching column of W, moves both
    to the canonical gauge, and projects the quadratic flux.  Branches whose
    sound speed is repeated are rejected: their reduction is a coupled KdV
    system, out of scope here.
    """
    n = spectrum.n
    col = branch_column(n, branch)
    asc = n - abs(branch)  # ascending-order index of this speed
    for grp in spectrum.degeneracy:
        if asc in grp and len(grp) >= 2:
            raise DegenerateBranchError(
                f"branch {branch} has a repeated sound speed; repeated speeds "
                "yield coupled KdV systems, which are not modeled"
            )
    vcol = spectrum.V[:, col].copy()
    wcol = spectrum.W[:, col].copy()
    scale = _canonical_gauge(vcol[n:])
    vcol /= scale
    wcol *= scale
    a, b = vcol[:n], vcol[n:]
    w_rho, w_v = wcol[:n], wcol[n:]
    hbar = bg.hbar
    dispersion = -(hbar**2 / 4.0) * float(np.sum(w_v * a / bg.rho0))
    nonlinearity = float(np.sum(2.0 * w_rho * a * b + w_v * b * b))
    lam = float(np.sign(branch) * spectrum.lam[asc])
    return KdvModel(branch=branch, lam=lam, dispersion=dispersion,
                    nonlinearity=nonlinearity, a=a, b=b, w_rho=w_rho, w_v=w_v)


def _closed_form_n2(coupling: StructuredCoupling, bg: Background, branch: int):
    g1, g2 = coupling.g
    r1, r2 = bg.rho0
    h = coupling.h
    a_sum = g1 * r1 + g2 * r2
    c_diff = g1 * r1 - g2 * r2
    b_disc = float(np.sqrt(
        g1**2 * r1**2 - 2 * g1 * g2 * r1 * r2 + 4 * h**2 * r1 * r2 + g2**2 * r2**2
    ))
    record = ClosedFormN2(a_sum, c_diff, b_disc)
    hbar = bg.hbar
    j = abs(branch)
    if j == 1:
        lam = float(np.sqrt((a_sum + b_disc) / 2.0))
        disp = -hbar**2 / (4.0 * np.sqrt(2.0) * np.sqrt(a_sum + b_disc))
        nonlin = 3.0 / (8.0 * h * b_disc * r1) * (
            (c_diff + b_disc) ** 2 + 2.0 * h * (b_disc - c_diff) * r1
        )
    else:
        lam = float(np.sqrt((a_sum - b_disc) / 2.0))
        disp = -hbar**2 / (4.0 * np.sqrt(2.0) * np.sqrt(a_sum - b_disc))
        nonlin = -3.0 / (8.0 * h * b_disc * r1) * (
            (c_diff - b_disc) ** 2 - 2.0 * h * (c_diff + b_disc) * r1
        )
    return lam, float(disp), float(nonlin), record


def _closed_form_n3(coupling: StructuredCoupling, bg: Background, branch: int):
    g1, g2, g3 = coupling.g
    r1, r2, r3 = bg.rho0
    h = coupling.h
    if abs(g1 - g2) > 1e-12 * max(g1, g2) or abs(r1 - r2) > 1e-12 * max(r1, r2):
        raise ValueError(
            "three-component closed forms require the degenerate-pair "
            "structure g1 == g2, rho01 == rho02"
        )
    x = g1 * r1 + h * r1 + g3 * r3
    y = float(np.sqrt(
        (g1 + h) ** 2 * r1**2
        - 2.0 * (g1 * g3 + h * (g3 - 4.0 * h)) * r1 * r3
        + g3**2 * r3**2
    ))
    z = (g1 + h) * r1 - g3 * r3 + 2.0 * h * r3
    w = g1 * r1 - 3.0 * h * r1 - g3 * r3
    record = ClosedFormN3(float(x), y, float(z), float(w))
    hbar = bg.hbar
    j = abs(branch)
    if j == 1:
        lam2 = (g1 - h) * r1
        if lam2 <= 0:
            raise ValueError("degenerate branch is unstable (g1 <= h)")
        lam = float(np.sqrt(lam2))
        disp = -hbar**2 / (8.0 * lam)
        nonlin = 0.0
    elif j == 2:
        lam = float(np.sqrt((x - y) / 2.0))
        disp = -hbar**2 / (4.0 * np.sqrt(2.0) * np.sqrt(x - y))
        nonlin = (
            3.0 * (2.0 * (y - z) ** 3 * r1 + (w + y) ** 3 * r3)
            / (4.0 * (w + y) * (y - z) ** 2 * r1 + 2.0 * (w + y) ** 3 * r3)
        )
    else:
        lam = float(np.sqrt((x + y) / 2.0))
        disp = -hbar**2 / (4.0 * np.sqrt(2.0) * np.sqrt(x + y))
        nonlin = (
            3.0 * (-2.0 * (y + z) ** 3 * r1 + (w - y) ** 3 * r3)
            / (4.0 * (w - y) * (y + z) ** 2 * r1 + 2.0 * (w - y) ** 3 * r3)
        )
    return lam, float(disp), float(nonlin), record


def kdv_coefficients_closed_form(coupling: StructuredCoupling, bg: Background,
                                 branch: int):
    """Printed closed-form coefficients for N = 2 or the degenerate N = 3 case.

    Returns (lam, A, B, record).  Branch indices follow the respective
    printed case: for N = 2, branch 1 is the faster speed sqrt((A+B)/2); for
    N = 3 (which requires g1 == g2, rho01 == rho02), branch 1 is the
    zero-nonlinearity speed sqrt((g1-h) rho01), branch 2 is sqrt((X-Y)/2) and
    branch 3 is sqrt((X+Y)/2).  Negative branch indices mirror lam -> -lam,
    A -> -A with B unchanged.  Serves as an independent check on the
    projection route.
    """
    if not isinstance(coupling, StructuredCoupling):
        raise TypeError("closed forms require the structured g/h coupling")
    if coupling.n != bg.n:
        raise ValueError("coupling/background dimension mismatch")
    j = abs(branch)
    if coupling.n == 2 and 1 <= j <= 2:
        lam, disp, nonlin, record = _closed_form_n2(coupling, bg, branch)
    elif coupling.n == 3 and 1 <= j <= 3:
        lam, disp, nonlin, record = _closed_form_n3(coupling, bg, branch)
    else:
        raise ValueError(
            "closed forms cover N = 2 and the degenerate-pair N = 3 case only"
        )
    if branch < 0:
        lam, disp = -lam, -disp
    return lam, disp, nonlin, record


def soliton_profile(model: KdvModel, scaling: ScalingParams) -> SolitonProfile:
    """Right-moving solitary wave of the branch KdV equation.

        f(xi, tau) = (3 V A / B) sech^2( (sqrt(V)/2) (xi - A V tau) )
    """
    if model.is_linear:
        raise ZeroNonlinearityError(
            f"branch {model.branch} has B = {model.nonlinearity:.3e}; the "
            "linear KdV has no soliton (use kdvref.linear_kdv_evolve)"
        )
    v = scaling.soliton_speed
    return SolitonProfile(
        amplitude=3.0 * v * model.dispersion / model.nonlinearity,
        kappa=float(np.sqrt(v)) / 2.0,
        speed=model.dispersion * v,
    )


def lab_frame_speed(model: KdvModel, scaling: ScalingParams) -> float:
    """Soliton speed in unscaled coordinates: Lambda = lam + A V eps^2."""
    return model.lam + model.dispersion * scaling.soliton_speed * scaling.epsilon**2


def reconstruct_fields(model: KdvModel, profile: Callable, scaling: ScalingParams,
                       bg: Background, x, t: float = 0.0):
    """Physical density/velocity fields carried by a branch profile.

        rho_k(x,t) = rho0_k + eps^2 a[k] f(eps(x - lam t), eps^3 t)
        v_k(x,t)   =          eps^2 b[k] f(eps(x - lam t), eps^3 t)
    """
    x = np.asarray(x, dtype=float)
    eps = scaling.epsilon
    xi = eps * (x - model.lam * t)
    tau = eps**3 * t
    f = profile(xi, tau)
    rho = bg.rho0[:, None] + eps**2 * model.a[:, None] * f[None, :]
    v = eps**2 * model.b[:, None] * f[None, :]
    return rho, v


def soliton_phases(model: KdvModel, scaling: ScalingParams, bg: Background,
                   x, t: float = 0.0) -> np.ndarray:
    """Exact phase integrals Phi_k(x) = int_0^x v_k dx' for the soliton.

    The sech^2 antiderivative is a tanh:

        Phi_k = eps b[k] (6 A sqrt(V) / B) tanh( (sqrt(V)/2)(xi - A V tau) )

    reproducing the closed-form initial-data exponents.
    """
    if model.is_linear:
        raise ZeroNonlinearityError("no closed-form soliton phase for B = 0")
    x = np.asarray(x, dtype=float)
    eps = scaling.epsilon
    v = scaling.soliton_speed
    xi = eps * (x - model.lam * t)
    tau = eps**3 * t
    kappa = np.sqrt(v) / 2.0
    amp = eps * 6.0 * model.dispersion * np.sqrt(v) / model.nonlinearity
    return model.b[:, None] * amp * np.tanh(kappa * (xi - model.dispersion * v * tau))[None, :]


def madelung_synthesize(grid: Grid, rho, v, bg: Background,
                        phases=None, t: float = 0.0) -> FieldState:
    """Wavefunctions psi_k = sqrt(rho_k) exp(i (m/hbar) Phi_k) from fields.

    When a closed-form phase array is supplied it is used directly (the
    preferred path); otherwise Phi_k comes from cumulative trapezoidal
    integration of v_k from the grid's left edge with Phi(x0) = 0.
    """
    rho = np.atleast_2d(np.asarray(rho, dtype=float))
    if rho.shape[1] != grid.n:
        raise ValueError("field sample count does not match the grid")
    if np.any(rho <= 0.0):
        raise ValueError("densities must be strictly positive for the amplitude")
    if phases is None:
        v = np.atleast_2d(np.asarray(v, dtype=float))
        increments = 0.5 * (v[:, 1:] + v[:, :-1]) * grid.dx
        phases = np.concatenate(
            [np.zeros((v.shape[0], 1)), np.cumsum(increments, axis=1)], axis=1
        )
    else:
        phases = np.atleast_2d(np.asarray(phases, dtype=float))
    psi = np.sqrt(rho) * np.exp(1j * (bg.mass / bg.hbar) * phases)
    return FieldState(grid, t, psi)


def simple_branch_models(coupling, bg: Background, scaling=None):
    """KdvModel for every simple (non-repeated) right-moving branch.

    Convenience for reports: returns a list over branches 1..N, with None in
    place of branches rejected for degeneracy.
    """
    spectrum = eigensystem(coupling, bg)
    out = []
    for j in range(1, spectrum.n + 1):
        try:
            out.append(kdv_coefficients(spectrum, bg, j))
        except DegenerateBranchError:
            out.append(None)
    return out
