"""Convolution operators on L^2(K, m) for finite K and the alternating
limit ``Q = lim P*^n P^n``.

Numerics run in the symmetric frame ``T = D^(1/2) M D^(-1/2)`` with
``D = diag(m)``; there the m-adjoint is the plain transpose, so ``Q`` is a
symmetric matrix and standard symmetric eigensolvers apply.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import DiscreteHypergroup, FiniteHypergroup
from .measure import (DEFAULT_TOL, DEFAULT_WINDOW, Measure, alternating_limit, convolve,
                      involute, is_idempotent)

__all__ = [
    "ConvOperator",
    "DecompositionResult",
    "MonotonicityError",
    "NonConverged",
    "bilateral_shift_check",
    "decompose",
    "decompose_report",
    "is_normal",
    "operator_of",
    "q_limit",
    "windowed_partition",
]

KL_TOL = 1e-8
N_MAX = 100_000
MERGE_TOL = 1e-6
MONOTONE_SLACK = 1e-12


class NonConverged(RuntimeError):
    def __init__(self, gap, iterations):
        self.gap = gap
        self.iterations = iterations
        super().__init__(f"alternating limit not reached after {iterations} iterations "
                         f"(last gap {gap:.3e})")


class MonotonicityError(AssertionError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class ConvOperator:
    """``(P f)(x) = sum_z matrix[x, z] f(z)`` with
    ``matrix[x, z] = sum_y lam(y) c[x][y][z]``."""

    matrix: np.ndarray
    host: FiniteHypergroup
    measure: Measure
    exact: bool = False

    def __len__(self):
        return self.matrix.shape[0]

    @property
    def float_matrix(self) -> np.ndarray:
        return self.matrix.astype(float) if self.exact else self.matrix

    def adjoint(self) -> np.ndarray:
        """Matrix of the m-adjoint ``D^-1 M^T D``."""
        if self.exact:
            m = self.host.haar
            n = len(m)
            out = np.empty((n, n), dtype=object)
            for x in range(n):
                for z in range(n):
                    out[x, z] = self.matrix[z, x] * m[z] / m[x]
            return out
        m = self.host.float_haar
        return (self.matrix.T * m[None, :]) / m[:, None]

    def symmetric_frame(self) -> np.ndarray:
        r = np.sqrt(self.host.float_haar)
        return self.float_matrix * r[:, None] / r[None, :]

    def __matmul__(self, other):
        return self.matrix @ (other.matrix if isinstance(other, ConvOperator) else other)


def operator_of(lam: Measure, allow_subprobability: bool = False,
                exact: bool | None = None) -> ConvOperator:
    H = lam.host
    if not isinstance(H, FiniteHypergroup):
        raise TypeError("operator_of needs a finite hypergroup")
    mass = lam.mass()
    if allow_subprobability:
        if mass > 1 + 1e-12:
            raise ValueError(f"mass {mass} exceeds 1")
    elif (lam.exact and mass != 1) or abs(float(mass) - 1) > 1e-12:
        raise ValueError(f"operator_of needs a probability measure (mass {mass}); "
                         "pass allow_subprobability=True for M1 experiments")
    exact = lam.exact if exact is None else exact
    n = len(H)
    if exact:
        if not lam.exact:
            raise TypeError("exact operator needs an exact measure")
        M = np.full((n, n), Fraction(0), dtype=object)
        for y, w in lam.atoms.items():
            for x in range(n):
                for z, c in H.point_convolve(x, y).items():
                    M[x, z] += w * c
        return ConvOperator(M, H, lam, exact=True)
    M = np.einsum("y,xyz->xz", lam.vector(), H.float_structure)
    return ConvOperator(M, H, lam, exact=False)


def m_norm(A: np.ndarray, H: FiniteHypergroup) -> float:
    """Operator norm on L^2(K, m) of the matrix ``A``."""
    r = np.sqrt(H.float_haar)
    return float(np.linalg.norm(A * r[:, None] / r[None, :], 2))


@dataclass
class QLimit:
    Q: np.ndarray  # original coordinates
    Q_sym: np.ndarray  # symmetric frame
    iterations: int
    gap: float
    min_decrease: float  # min eigenvalue of A_n - A_{n+1} over all steps


def q_limit(P: ConvOperator, tol: float = DEFAULT_TOL, n_max: int = N_MAX,
            polish: bool = True) -> QLimit:
    """Iterate ``A_{n+1} = P* A_n P`` from ``A_0 = I`` until the spectral gap
    between consecutive iterates is at most ``tol``.

    Each step checks ``A_{n+1} <= A_n`` (smallest eigenvalue of the
    difference above ``-1e-12``). With ``polish`` a few doubling steps
    ``A_2n = P*^n A_n P^n`` follow to shrink the remaining geometric tail.
    """
    T = P.symmetric_frame()
    n = T.shape[0]
    A = np.eye(n)
    min_dec = np.inf
    gap = np.inf
    it = 0
    while it < n_max:
        nxt = T.T @ A @ T
        nxt = (nxt + nxt.T) / 2
        ev = np.linalg.eigvalsh(A - nxt)
        it += 1
        min_dec = min(min_dec, float(ev[0]))
        if ev[0] < -MONOTONE_SLACK:
            raise MonotonicityError(f"A_{it} - A_{it - 1} has eigenvalue {ev[0]:.3e} < 0")
        gap = float(max(abs(ev[0]), abs(ev[-1])))
        A = nxt
        if gap <= tol:
            break
    else:
        raise NonConverged(gap, it)
    if polish:
        Tp = np.linalg.matrix_power(T, it)
        for _ in range(60):
            nxt = Tp.T @ A @ Tp
            nxt = (nxt + nxt.T) / 2
            ev = np.linalg.eigvalsh(A - nxt)
            if ev[0] < -MONOTONE_SLACK:
                raise MonotonicityError(f"doubling step increased A: {ev[0]:.3e}")
            A = nxt
            Tp = Tp @ Tp
            if max(abs(ev[0]), abs(ev[-1])) <= 1e-3 * tol:
                break
    r = np.sqrt(P.host.float_haar)
    Q = A / r[:, None] * r[None, :]
    return QLimit(Q, A, it, gap, min_dec)


@dataclass
class DecompositionResult:
    Q: np.ndarray
    e0_basis: np.ndarray  # columns, orthonormal in L^2(m)
    sigma_d_basis: np.ndarray  # columns, orthonormal in L^2(m)
    partition: list
    kl_holds: bool
    residual: float
    iterations: int
    eigenvalues: np.ndarray = field(repr=False, default=None)
    min_decrease: float = 0.0

    @property
    def dim_e0(self) -> int:
        return self.e0_basis.shape[1]

    @property
    def dim_sigma_d(self) -> int:
        return self.sigma_d_basis.shape[1]


def _partition(values: np.ndarray, tol: float) -> list:
    """Blocks of row indices whose rows agree entrywise within ``tol``,
    closed transitively."""
    n = values.shape[0]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if np.all(np.abs(values[i] - values[j]) <= tol):
                parent[find(j)] = find(i)
    blocks: dict = {}
    for i in range(n):
        blocks.setdefault(find(i), []).append(i)
    return sorted(blocks.values())


def decompose(lam: Measure, tol: float = DEFAULT_TOL, kl_tol: float = KL_TOL,
              n_max: int = N_MAX) -> DecompositionResult:
    """Split L^2(K) into ``ker Q`` and the eigenvalue-1 space of ``Q``."""
    P = operator_of(lam.to_float() if lam.exact else lam)
    lim = q_limit(P, tol, n_max)
    B = lim.Q_sym
    w, V = np.linalg.eigh(B)
    residual = float(np.linalg.norm(B @ B - B, 2))
    r = np.sqrt(P.host.float_haar)
    one = w >= 1 - 10 * tol
    zero = w <= max(10 * tol, kl_tol)
    fixed = V[:, one] / r[:, None]
    kernel = V[:, zero] / r[:, None]
    n = len(P)
    part = _partition(fixed, MERGE_TOL) if fixed.shape[1] else [list(range(n))]
    return DecompositionResult(
        Q=lim.Q, e0_basis=kernel, sigma_d_basis=fixed, partition=part,
        kl_holds=residual <= kl_tol, residual=residual, iterations=lim.iterations,
        eigenvalues=w, min_decrease=lim.min_decrease)


def is_normal(P: ConvOperator, tol: float = DEFAULT_TOL) -> bool:
    """``P* P == P P*`` within ``tol``; cross-checked exactly against
    ``inv(lam) * lam == lam * inv(lam)`` for exact measures."""
    T = P.symmetric_frame()
    verdict = float(np.linalg.norm(T.T @ T - T @ T.T, 2)) <= tol
    lam = P.measure
    if lam.exact:
        lc = involute(lam)
        exact = convolve(lc, lam) == convolve(lam, lc)
        if exact != verdict:
            raise AssertionError(f"operator normality ({verdict}) disagrees with the "
                                 f"measure-level identity ({exact})")
    return verdict


def decompose_report(lam: Measure, tol: float = DEFAULT_TOL, kl_tol: float = KL_TOL,
                     n_max: int = N_MAX, window: int = DEFAULT_WINDOW) -> dict:
    """Both criteria side by side, as the JSON report of ``decompose``."""
    from .fileio import atoms_to_json

    res = decompose(lam, tol, kl_tol, n_max)
    flam = lam.to_float()
    verdict, _ = alternating_limit(flam, tol=tol, window=window, n_max=n_max)
    rho = verdict.limit if verdict.converged else None
    measure_side = False
    q_gap = None
    if rho is not None:
        measure_side = is_idempotent(rho, tol=kl_tol).idempotent
        Prho = operator_of(rho, allow_subprobability=True).matrix
        q_gap = m_norm(res.Q - Prho, lam.host)
    return {
        "kl_holds": bool(res.kl_holds),
        "dim_e0": res.dim_e0,
        "dim_sigma_d": res.dim_sigma_d,
        "partition": res.partition,
        "residual": res.residual,
        "iterations": res.iterations,
        "rho": atoms_to_json(rho) if rho is not None else None,
        "criteria_agree": bool(res.kl_holds) == measure_side,
        "measure_verdict": str(verdict),
        "q_minus_p_rho": q_gap,
    }


# -- Z x F windows ------------------------------------------------------------

def _fibre_support(lam: Measure) -> int:
    fibres = {k[0] for k in lam.atoms}
    if len(fibres) != 1 or 0 in fibres:
        raise PreconditionError(
            f"measure must live on a single coset {{k}} x F with k != 0, found fibres "
            f"{sorted(fibres)}: the hypothesis needs a coset of the compact normal "
            "subgroup containing the support")
    return fibres.pop()


def bilateral_shift_check(H: DiscreteHypergroup, lam: Measure, m_range=range(-8, 9),
                          n_range=range(1, 9), points: range | None = None) -> bool:
    """Check ``P^n(chi of coset x^m F) = chi of coset x^(m-n) F`` pointwise.

    ``H`` is a ``Z x F`` hypergroup (keys ``(n, i)``) and ``lam`` sits in
    one fibre ``k != 0``, so ``x^m F`` is the fibre ``k m``. The functions
    are evaluated at every ``(j, i)`` with ``j`` in ``points`` (default: all
    fibres the window can reach, padded by one coset on each side).
    """
    if not isinstance(H, DiscreteHypergroup) or H.spec.get("kind") != "zcross":
        raise PreconditionError("bilateral_shift_check needs a Z x F hypergroup from z_cross_f")
    k = _fibre_support(lam)
    base = len(H.spec["base"]["elements"])
    if points is None:
        reach = [k * m for m in m_range] + [k * (m - n) for m in m_range for n in n_range]
        points = range(min(reach) - abs(k), max(reach) + abs(k) + 1)
    ok = True
    power = None
    for n in range(1, max(n_range) + 1):
        power = lam if power is None else convolve(power, lam)
        if n not in n_range:
            continue
        # (P^n f)(x) = sum_z (d_x * lam^n)(z) f(z) with f a fibre indicator
        for j in points:
            for i in range(base):
                pushed = convolve(Measure.point(H, (j, i), exact=power.exact), power)
                fibre_mass: dict = {}
                for z, w in pushed.atoms.items():
                    fibre_mass[z[0]] = fibre_mass.get(z[0], 0) + w
                for m in m_range:
                    lhs = fibre_mass.get(k * m, 0)
                    rhs = 1 if j == k * (m - n) else 0
                    if lhs != rhs if power.exact else abs(lhs - rhs) > 1e-12:
                        ok = False
    return ok


def windowed_partition(H, rho: Measure, points) -> list:
    """Atoms of the deterministic sigma-algebra seen through a finite window.

    With ``rho`` the idempotent alternating limit, the invariant functions
    are the ``P_rho``-fixed ones, which are constant on each
    ``supp(d_x * rho)``. Overlapping supports are merged and the blocks are
    cut down to ``points``.
    """
    points = list(points)
    parent: dict = {}

    def find(a):
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for x in points:
        for z in convolve(Measure.point(H, x, exact=rho.exact), rho).atoms:
            parent[find(z)] = find(x)
    blocks: dict = {}
    for x in points:
        blocks.setdefault(find(x), []).append(x)
    return sorted(sorted(b) for b in blocks.values())
