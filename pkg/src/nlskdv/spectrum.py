"""Spectral analysis of the linearized multi-component condensate.

Small perturbations (delta_rho, delta_v) of a uniform background evolve, to
leading order, under d_t u = -A d_x u with the 2N x 2N block matrix

    A = [[0, rho], [alpha, 0]],

where rho = diag(rho0) holds the background densities and alpha is the
symmetric coupling matrix.  The eigenvalues of A are the sound speeds, which
are real and come in +/- pairs exactly when alpha is positive definite.  The
module provides:

  * positivity gates on alpha (exact test plus the cheap necessary and
    sufficient thresholds on the cross coupling h),
  * the closed-form characteristic polynomial of alpha @ rho for the
    structured coupling (equal off-diagonal h), written in terms of
    elementary symmetric polynomials,
  * detection of permanently repeated sound speeds, which occur exactly when
    several (rho0*g, rho0) pairs coincide, together with their explicit
    eigenvectors,
  * the full eigen-decomposition of A via the symmetric congruence
    sqrt(rho) alpha sqrt(rho), and
  * continuation of an individual eigenpair of alpha @ rho in the cross
    coupling h, starting from the decoupled (diagonal) limit.
"""

from dataclasses import dataclass

import numpy as np

from .symprod import elem_sym_all

__all__ = [
    "StructuredCoupling",
    "SymmetricCoupling",
    "Background",
    "PositivityReport",
    "CharPolyEvaluation",
    "RepeatedRoot",
    "DegeneracyReport",
    "LinearSpectrum",
    "ContinuationSample",
    "NotPositiveDefiniteError",
    "BranchTrackingError",
    "assemble_block_matrix",
    "positivity_report",
    "char_poly",
    "degeneracy_report",
    "eigensystem",
    "branch_column",
    "degenerate_eigenvectors",
    "continue_eigenpair",
    "eigenvalue_h2_series",
]

# (rho*g, rho) pairs agreeing to this relative tolerance count as one group;
# exact rational inputs compare exactly, anything else needs a declared cut.
PAIR_RTOL = 1e-12

# branches whose lambda^2 agree to this relative tolerance share a group
EIGENVALUE_RTOL = 1e-10


class NotPositiveDefiniteError(ValueError):
    """Coupling matrix is not positive definite: unstable background.

    Carries the positivity report; some sound speeds would be imaginary and
    the corresponding perturbations grow exponentially instead of traveling.
    """

    def __init__(self, report):
        self.report = report
        super().__init__(
            "coupling matrix is not positive definite; the uniform background "
            "is unstable (imaginary sound speeds)"
        )


class BranchTrackingError(RuntimeError):
    """Eigenpair continuation lost its branch (step size collapsed)."""

    def __init__(self, h: float, message: str):
        self.h = h
        super().__init__(f"{message} (at h = {h:.6g})")


def _check_rho_vector(rho0) -> np.ndarray:
    rho0 = np.atleast_1d(np.asarray(rho0, dtype=float))
    if rho0.ndim != 1 or rho0.size == 0:
        raise ValueError("rho0 must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(rho0)) or np.any(rho0 <= 0.0):
        raise ValueError("background densities must be finite and positive")
    return rho0


@dataclass(frozen=True, eq=False)
class StructuredCoupling:
    """Coupling with common off-diagonal: alpha_ij = g_i (i == j), h (i != j).

    h = 0 is admitted as the decoupled limit used by the continuation scheme.
    """

    g: np.ndarray
    h: float

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        if g.ndim != 1 or g.size == 0:
            raise ValueError("g must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(g)) or np.any(g <= 0.0):
            raise ValueError("intra-species couplings g must be positive")
        h = float(self.h)
        if not np.isfinite(h) or h < 0.0:
            raise ValueError("cross coupling h must be finite and >= 0")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.g.size

    def matrix(self) -> np.ndarray:
        """Dense symmetric coupling matrix alpha."""
        a = np.full((self.n, self.n), self.h)
        np.fill_diagonal(a, self.g)
        return a

    def with_h(self, h: float) -> "StructuredCoupling":
        return StructuredCoupling(self.g, h)


@dataclass(frozen=True, eq=False)
class SymmetricCoupling:
    """General symmetric coupling matrix."""

    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError("alpha must be a square matrix")
        if not np.all(np.isfinite(a)):
            raise ValueError("alpha entries must be finite")
        scale = np.max(np.abs(a))
        if scale > 0 and np.max(np.abs(a - a.T)) > 1e-14 * scale:
            raise ValueError("alpha must be symmetric (to 1e-14 relative)")
        object.__setattr__(self, "alpha", 0.5 * (a + a.T))

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    def matrix(self) -> np.ndarray:
        return self.alpha.copy()


@dataclass(frozen=True, eq=False)
class Background:
    """Uniform background densities plus particle mass and hbar."""

    rho0: np.ndarray
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rho0", _check_rho_vector(self.rho0))
        if not (np.isfinite(self.mass) and self.mass > 0):
            raise ValueError("mass must be positive")
        if not (np.isfinite(self.hbar) and self.hbar > 0):
            raise ValueError("hbar must be positive")

    @property
    def n(self) -> int:
        return self.rho0.size


@dataclass(frozen=True)
class PositivityReport:
    """Definiteness of the coupling matrix plus the cheap h thresholds.

    necessary_pass / sufficient_pass refer to h < sqrt(g(1)*g(2)) (the two
    smallest g) and h < min(g); they are None for general symmetric couplings
    where the structured thresholds do not apply.
    """

    is_positive_definite: bool
    necessary_pass: bool | None
    sufficient_pass: bool | None


@dataclass(frozen=True, eq=False)
class CharPolyEvaluation:
    """One evaluation of the structured-coupling characteristic polynomial."""

    mu: float
    gammas: np.ndarray
    value: float


@dataclass(frozen=True)
class RepeatedRoot:
    """A permanently repeated sound speed from a coincident-pair group.

    lambda^2 = rho*(g*-h) can be non-positive when g* <= h, in which case the
    degenerate branch is unstable; that is reported via is_real rather than
    raised.
    """

    indices: tuple
    multiplicity: int
    lambda_squared: float
    is_real: bool
    value: float | None


@dataclass(frozen=True)
class DegeneracyReport:
    groups: tuple          # full partition of component indices (0-based)
    repeated: tuple        # RepeatedRoot per group of size >= 2


@dataclass(frozen=True, eq=False)
class LinearSpectrum:
    """Eigen-decomposition of the 2N x 2N linearization matrix A.

    lam holds the N positive sound speeds in ascending order.  Q has the
    eigenvectors of alpha @ rho as columns (alpha rho Q = Q diag(lam^2)),
    scaled so each column's largest-magnitude entry is +1.  L is the diagonal
    of Q^T rho Q.  V holds the 2N eigenvectors of A, columns 0..N-1 for the
    right movers (+lam, ascending) and N..2N-1 for the left movers (-lam);
    W = (V^{-1})^T is the dual basis, so W^T V = I.
    """

    lam: np.ndarray
    Q: np.ndarray
    L: np.ndarray
    V: np.ndarray
    W: np.ndarray
    degeneracy: tuple

    @property
    def n(self) -> int:
        return self.lam.size


@dataclass(frozen=True, eq=False)
class ContinuationSample:
    """Eigenpair of alpha @ rho at one cross-coupling value.

    q is the full eigenvector, normalized so q[k] = 1 exactly for the tracked
    component k (equivalently the correction away from e_k stays orthogonal
    to e_k).
    """

    h: float
    lambda_squared: float
    q: np.ndarray


def _dimension_match(coupling, bg: Background) -> int:
    if coupling.n != bg.n:
        raise ValueError(
            f"coupling has {coupling.n} components but background has {bg.n}"
        )
    return coupling.n


def assemble_block_matrix(coupling, bg: Background) -> np.ndarray:
    """The 2N x 2N linearization matrix [[0, rho], [alpha, 0]]."""
    n = _dimension_match(coupling, bg)
    a = np.zeros((2 * n, 2 * n))
    a[:n, n:] = np.diag(bg.rho0)
    a[n:, :n] = coupling.matrix()
    return a


def _is_positive_definite(alpha: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(alpha)
        return True
    except np.linalg.LinAlgError:
        return False


def positivity_report(coupling) -> PositivityReport:
    """Definiteness of alpha plus the structured h thresholds.

    The exact answer comes from a Cholesky factorization (equivalent to all
    leading principal minors being positive).  For the structured coupling,
    h < sqrt(g(1)*g(2)) with g(1) <= g(2) the two smallest diagonals is
    necessary for definiteness and h < min(g) is sufficient.
    """
    pd = _is_positive_definite(coupling.matrix())
    if not isinstance(coupling, StructuredCoupling):
        return PositivityReport(pd, None, None)
    g_sorted = np.sort(coupling.g)
    if g_sorted.size < 2:
        # a single component is positive definite iff g > 0, which the type
        # guarantees; the h thresholds are vacuous
        return PositivityReport(pd, True, True)
    necessary = coupling.h < float(np.sqrt(g_sorted[0] * g_sorted[1]))
    sufficient = coupling.h < float(g_sorted[0])
    return PositivityReport(pd, necessary, sufficient)


def char_poly(coupling: StructuredCoupling, bg: Background, mu: float) -> CharPolyEvaluation:
    """Characteristic polynomial of alpha @ rho at candidate eigenvalue mu.

    With gamma_i = (rho0_i g_i - mu) / (rho0_i h) the value is

        e_N(gamma) + sum_{k=2..N} (-1)^(k-1) (k-1) e_{N-k}(gamma),

    which vanishes exactly when mu = lambda^2 is an eigenvalue of alpha @ rho.
    Multiplying by prod_i(rho0_i h) recovers det(alpha rho - mu I).  The
    gammas are undefined at h = 0; callers use the diagonal limit separately.
    """
    if not isinstance(coupling, StructuredCoupling):
        raise TypeError("char_poly requires the structured g/h coupling")
    n = _dimension_match(coupling, bg)
    if coupling.h == 0.0:
        raise ValueError("characteristic polynomial form requires h != 0")
    gammas = (bg.rho0 * coupling.g - mu) / (bg.rho0 * coupling.h)
    e = elem_sym_all(gammas)
    value = e[n]
    for k in range(2, n + 1):
        value += (-1) ** (k - 1) * (k - 1) * e[n - k]
    return CharPolyEvaluation(mu=float(mu), gammas=gammas, value=float(value))


def _pairs_equal(pa, pb) -> bool:
    # both components of the (rho*g, rho) pair to relative PAIR_RTOL
    for a, b in zip(pa, pb):
        if abs(a - b) > PAIR_RTOL * max(abs(a), abs(b)):
            return False
    return True


def degeneracy_report(coupling: StructuredCoupling, bg: Background) -> DegeneracyReport:
    """Partition components by equal (rho0*g, rho0) pairs.

    A group of m >= 2 coincident pairs forces the sound speed
    sqrt(rho0*(g*-h)) with multiplicity m - 1 for every h.  Accidental
    degeneracies at isolated h values are not detected here.
    """
    if not isinstance(coupling, StructuredCoupling):
        raise TypeError("degeneracy_report requires the structured g/h coupling")
    n = _dimension_match(coupling, bg)
    pairs = [(bg.rho0[i] * coupling.g[i], bg.rho0[i]) for i in range(n)]
    groups: list[list[int]] = []
    for i in range(n):
        for grp in groups:
            if _pairs_equal(pairs[grp[0]], pairs[i]):
                grp.append(i)
                break
        else:
            groups.append([i])
    repeated = []
    for grp in groups:
        if len(grp) < 2:
            continue
        i0 = grp[0]
        lam2 = bg.rho0[i0] * (coupling.g[i0] - coupling.h)
        is_real = lam2 > 0.0
        repeated.append(
            RepeatedRoot(
                indices=tuple(grp),
                multiplicity=len(grp) - 1,
                lambda_squared=float(lam2),
                is_real=is_real,
                value=float(np.sqrt(lam2)) if is_real else None,
            )
        )
    return DegeneracyReport(
        groups=tuple(tuple(grp) for grp in groups),
        repeated=tuple(repeated),
    )


def _group_equal_values(vals: np.ndarray, rtol: float) -> tuple:
    groups = []
    for i, v in enumerate(vals):
        if groups and abs(v - vals[groups[-1][0]]) <= rtol * max(abs(v), 1e-300):
            groups[-1].append(i)
        else:
            groups.append([i])
    return tuple(tuple(g) for g in groups)


def eigensystem(coupling, bg: Background) -> LinearSpectrum:
    """Full spectral decomposition of the linearization matrix A.

    Goes through the symmetric congruence S = sqrt(rho) alpha sqrt(rho):
    S u_i = lam_i^2 u_i with orthonormal u_i, and q_i = rho^{-1/2} u_i is an
    eigenvector of alpha @ rho.  This keeps the spectrum real by construction
    and never touches a nonsymmetric solver.  Raises NotPositiveDefiniteError
    (carrying the positivity report) when alpha is not positive definite.
    """
    n = _dimension_match(coupling, bg)
    report = positivity_report(coupling)
    if not report.is_positive_definite:
        raise NotPositiveDefiniteError(report)
    alpha = coupling.matrix()
    sq = np.sqrt(bg.rho0)
    s = sq[:, None] * alpha * sq[None, :]
    lam2, u = np.linalg.eigh(s)  # ascending
    if lam2[0] <= 0.0:
        raise NotPositiveDefiniteError(report)
    lam = np.sqrt(lam2)
    q = u / sq[:, None]
    # deterministic column scaling: largest-magnitude entry -> +1
    for i in range(n):
        q[:, i] /= q[np.argmax(np.abs(q[:, i])), i]
    big_l = np.sum(bg.rho0[:, None] * q * q, axis=0)
    rho_q = bg.rho0[:, None] * q
    v = np.block([[rho_q / lam, -rho_q / lam], [q, q]])
    w = 0.5 * np.block(
        [[q / big_l * lam, -q / big_l * lam], [rho_q / big_l, rho_q / big_l]]
    )
    spec = LinearSpectrum(
        lam=lam,
        Q=q,
        L=big_l,
        V=v,
        W=w,
        degeneracy=_group_equal_values(lam2, EIGENVALUE_RTOL),
    )
    # defining properties, asserted as postconditions
    ar = alpha * bg.rho0[None, :]
    res = np.max(np.abs(ar @ q - q * lam2[None, :]))
    if res > 1e-10 * np.linalg.norm(ar):
        raise RuntimeError("eigen-decomposition residual exceeds tolerance")
    if np.max(np.abs(w.T @ v - np.eye(2 * n))) > 1e-10:
        raise RuntimeError("dual basis W^T V deviates from identity")
    return spec


def branch_column(n: int, branch: int) -> int:
    """Column of V/W for a signed branch index.

    Branch +j is the j-th largest positive sound speed (so +1 is the fastest
    right mover); -j is its left-moving mirror.  Columns of V store right
    movers in ascending-lam order first, then left movers.
    """
    j = abs(branch)
    if branch == 0 or j > n:
        raise ValueError(f"branch must be in 1..{n} with sign, got {branch}")
    col = n - j
    return col if branch > 0 else n + col


def degenerate_eigenvectors(coupling: StructuredCoupling, bg: Background,
                            group_indices, lambda_sign: int):
    """Explicit eigenvectors of A for a permanently repeated sound speed.

    group_indices are the m+1 components sharing one (rho0*g, rho0) pair; the
    k-th of the m returned vectors uses q with +1 at the first index, -1 at
    the (k+1)-th and 0 elsewhere, stacked as (sign * rho q / lam; q).
    Returns (lam, [v_1..v_m]).
    """
    n = _dimension_match(coupling, bg)
    idx = [int(i) for i in group_indices]
    if len(idx) < 2 or len(set(idx)) != len(idx) or not all(0 <= i < n for i in idx):
        raise ValueError("group_indices must be >= 2 distinct component indices")
    if lambda_sign not in (+1, -1):
        raise ValueError("lambda_sign must be +1 or -1")
    pairs = [(bg.rho0[i] * coupling.g[i], bg.rho0[i]) for i in idx]
    if not all(_pairs_equal(pairs[0], p) for p in pairs[1:]):
        raise ValueError("indices do not share a common (rho0*g, rho0) pair")
    lam2 = bg.rho0[idx[0]] * (coupling.g[idx[0]] - coupling.h)
    if lam2 <= 0.0:
        raise ValueError(
            "degenerate branch has non-real sound speed (g* <= h): unstable"
        )
    lam = float(np.sqrt(lam2))
    vectors = []
    for k in range(1, len(idx)):
        q = np.zeros(n)
        q[idx[0]] = 1.0
        q[idx[k]] = -1.0
        vectors.append(np.concatenate([lambda_sign * bg.rho0 * q / lam, q]))
    return lam, vectors


def _alpha1_rho_dot(rho0: np.ndarray, x: np.ndarray) -> np.ndarray:
    # (alpha1 rho) x with alpha1 the hollow all-ones matrix:
    # (alpha1 rho x)_i = sum_{j != i} rho_j x_j
    return np.sum(rho0 * x) - rho0 * x


def _first_stage_correction(g_rho: np.ndarray, rho0: np.ndarray, k: int,
                            h: float, tol: float, max_iter: int):
    """Solve the decoupled-limit fixed point for the eigenvector correction.

    Finds q_h with q_h[k] = 0 satisfying
        (diag(g_rho) - g_rho[k]) q_h = (h*(a1r q_h)_k - a1r)(e_k + h q_h),
    where a1r x = alpha1 rho x.  Returns (q_h, mu) with the eigenvalue
    correction mu = h * (a1r q_h)_k, or None if the iteration does not
    contract.
    """
    n = g_rho.size
    denom = g_rho - g_rho[k]
    denom[k] = 1.0  # never used; component k is pinned to zero
    e_k = np.zeros(n)
    e_k[k] = 1.0
    q = np.zeros(n)
    for _ in range(max_iter):
        mu = h * _alpha1_rho_dot(rho0, q)[k]
        vec = e_k + h * q
        rhs = mu * vec - _alpha1_rho_dot(rho0, vec)
        q_new = rhs / denom
        q_new[k] = 0.0
        delta = np.max(np.abs(q_new - q))
        q = q_new
        if delta < tol * max(1.0, np.max(np.abs(q))):
            mu = h * _alpha1_rho_dot(rho0, q)[k]
            return q, mu
    return None


def _restart_correction(alpha_rho_h: np.ndarray, rho0: np.ndarray, k: int,
                        q0: np.ndarray, lam2: float, dh: float,
                        tol: float, max_iter: int):
    """One continuation restart: correct (q0, lam2) at coupling h to h + dh.

    Writes q = q0 + dh*p, lam2' = lam2 + dh*nu and solves the singular system
        (alpha(h) rho - lam2) p = (nu - alpha1 rho)(q0 + dh p)
    by a bordered solve: the Fredholm condition against the left null vector
    rho*q0 fixes nu, and p[k] = 0 pins the free component along q0 (so the
    tracked eigenvector keeps q[k] = 1 exactly).  Returns (p, nu) or None.
    """
    n = q0.size
    m = alpha_rho_h - lam2 * np.eye(n)
    left_null = rho0 * q0
    bordered = np.zeros((n + 1, n + 1))
    bordered[:n, :n] = m
    bordered[:n, n] = left_null
    bordered[n, k] = 1.0
    rhs_ext = np.zeros(n + 1)
    p = np.zeros(n)
    for _ in range(max_iter):
        z = q0 + dh * p
        denom = left_null @ z
        if abs(denom) < 1e-300:
            return None
        nu = (left_null @ _alpha1_rho_dot(rho0, z)) / denom
        rhs_ext[:n] = nu * z - _alpha1_rho_dot(rho0, z)
        try:
            sol = np.linalg.solve(bordered, rhs_ext)
        except np.linalg.LinAlgError:
            return None
        p_new = sol[:n]
        delta = np.max(np.abs(p_new - p))
        p = p_new
        if delta < tol * max(1.0, np.max(np.abs(p))):
            z = q0 + dh * p
            nu = (left_null @ _alpha1_rho_dot(rho0, z)) / (left_null @ z)
            return p, nu
    return None


def continue_eigenpair(coupling: StructuredCoupling, bg: Background, k: int,
                       h_target: float, n_steps: int,
                       tol: float = 1e-12, max_iter: int = 200):
    """Track the eigenpair of alpha @ rho rooted at component k from h = 0.

    At h = 0 the pair is (g_k rho0_k, e_k).  The coupling is advanced in
    n_steps increments; each increment solves the fixed-point iteration to
    the requested residual, with the eigenvector correction kept orthogonal
    to e_k (the first stage anchors at h = 0, later increments restart the
    expansion around the current h).  An increment that fails to contract is
    halved; if the step collapses below 2^-40 of the increment, the branch is
    reported lost.  Returns the list of grid samples (h, lambda^2, q).
    """
    n = _dimension_match(coupling, bg)
    if not 0 <= k < n:
        raise ValueError(f"component index k must be in 0..{n - 1}")
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    if h_target < 0:
        raise ValueError("h_target must be >= 0")
    g_sorted = np.sort(coupling.g)
    if n >= 2 and h_target > float(np.sqrt(g_sorted[0] * g_sorted[1])):
        raise ValueError("h_target lies beyond the positivity region")
    report = degeneracy_report(coupling.with_h(0.0), bg)
    for grp in report.groups:
        if k in grp and len(grp) >= 2:
            raise ValueError(
                "component k belongs to a repeated (rho0*g, rho0) pair; "
                "the branch is permanently degenerate and cannot be tracked"
            )
    g_rho = bg.rho0 * coupling.g
    others = np.delete(g_rho, k)
    if others.size and np.min(np.abs(others - g_rho[k])) <= PAIR_RTOL * max(
        1.0, abs(g_rho[k])
    ):
        raise ValueError(
            "another component shares the decoupled eigenvalue rho0*g; "
            "the branch is degenerate at h = 0 and cannot be tracked from there"
        )

    e_k = np.zeros(n)
    e_k[k] = 1.0
    samples = [ContinuationSample(h=0.0, lambda_squared=float(g_rho[k]), q=e_k.copy())]
    if h_target == 0.0 or n == 1:
        return samples

    h_grid = np.linspace(0.0, h_target, n_steps + 1)
    h_cur = 0.0
    q_cur = e_k.copy()
    lam2_cur = float(g_rho[k])
    min_step = h_target / n_steps / 2**40

    def attempt(dh: float):
        """Try one substep of size dh from the current point; None on failure."""
        h_new = h_cur + dh
        if h_cur == 0.0:
            got = _first_stage_correction(g_rho, bg.rho0, k, h_new, tol, max_iter)
            if got is None:
                return None
            q_h, mu = got
            q_new = e_k + h_new * q_h
            lam2_new = float(g_rho[k] + h_new * mu)
        else:
            ar_h = coupling.with_h(h_cur).matrix() * bg.rho0[None, :]
            got = _restart_correction(ar_h, bg.rho0, k, q_cur, lam2_cur,
                                      dh, tol, max_iter)
            if got is None:
                return None
            p, nu = got
            q_new = q_cur + dh * p
            lam2_new = float(lam2_cur + dh * nu)
        # accept only if the converged pair actually is an eigenpair
        ar_new = coupling.with_h(h_new).matrix() * bg.rho0[None, :]
        res = np.max(np.abs(ar_new @ q_new - lam2_new * q_new))
        if res > 1e-9 * max(1.0, abs(lam2_new)) * max(1.0, np.max(np.abs(q_new))):
            return None
        return h_new, q_new, lam2_new

    def advance(h_to: float) -> None:
        nonlocal h_cur, q_cur, lam2_cur
        while h_cur < h_to:
            dh = h_to - h_cur
            result = attempt(dh)
            while result is None:
                dh *= 0.5
                if dh < min_step:
                    raise BranchTrackingError(
                        h_cur, f"branch tracking lost for component {k}: "
                        "continuation step collapsed"
                    )
                result = attempt(dh)
            h_cur, q_cur, lam2_cur = result

    for h_next in h_grid[1:]:
        advance(h_next)
        samples.append(
            ContinuationSample(h=float(h_cur), lambda_squared=lam2_cur, q=q_cur.copy())
        )
    return samples


def eigenvalue_h2_series(coupling: StructuredCoupling, bg: Background, k: int,
                         h: float) -> float:
    """Quadratic-in-h estimate of the eigenvalue rooted at component k:

        lambda^2 = rho0_k g_k - h^2 sum'_j rho0_j rho0_k / (rho0_j g_j - rho0_k g_k)

    with the k-th term skipped.  The remainder is O(h^3).
    """
    n = _dimension_match(coupling, bg)
    g_rho = bg.rho0 * coupling.g
    total = 0.0
    for j in range(n):
        if j == k:
            continue
        total += bg.rho0[j] * bg.rho0[k] / (g_rho[j] - g_rho[k])
    return float(g_rho[k] - h * h * total)
