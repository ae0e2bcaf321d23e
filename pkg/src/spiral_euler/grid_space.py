"""Radial grids, cutoff functions, mode profiles and their layered norms.

The radial coordinate beta lives on [0, inf).  We discretize it with
Chebyshev-Lobatto points in the compactified variable s in [0, 1],

    beta = scale * s / (1 - s),

keeping the s = 1 endpoint as an explicit "point at infinity" slot rather
than a grid node.  A scalar radial function is represented by its values at
the finite nodes together with three structured coefficients: the cutoff
xi_near (equal to 1 near the origin), the cutoff xi_far (equal to 1 near
infinity) and the constant function.  Constants therefore split exactly into
xi_near + xi_far, which mirrors the layered function spaces the solver and
the certifier measure against:

    C_b          bounded continuous functions, sup norm
    C_b^delta    sup of max(beta^delta, beta^-delta) |f|
    W_-          C_b^delta (+ C xi_near at mode 0)
    W_0          C_b^delta + C xi_near (+ constants at mode 0)
    W_+          C_b^delta + C xi_near + C xi_far

Direct-sum norms add the component norms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ParameterError, StructureError

__all__ = [
    "SolverParams",
    "RadialGrid",
    "CutoffSamples",
    "ModeProfile",
    "SpectralField",
    "AngularSignal",
    "bracket",
    "build_grid",
    "sample_cutoffs",
    "cutoff_normalization",
    "mollifier_bump",
    "mollifier_bump_derivative",
    "xi_far",
    "xi_near",
    "mode_norm",
    "spectral_norm",
    "field_to_json",
    "field_from_json",
]


def bracket(n) -> np.ndarray | float:
    """Japanese bracket <n> = (1 + n^2)^(1/2)."""
    return np.hypot(np.asarray(n, dtype=float), 1.0)


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverParams:
    """Scalar parameters of the self-similar spiral problem.

    mu          similarity exponent, mu > 2/3
    N           angular periodicity (profiles live on the mode lattice N*Z)
    p           integrability exponent, 1 <= p < 2*mu
    harmonics   number of retained harmonics K; modes n = N*k, |k| <= K
    grid_points number of finite radial nodes M
    grid_scale  scale of the algebraic map beta = scale*s/(1-s)
    """

    mu: float
    N: int
    p: float = 1.0
    harmonics: int = 3
    grid_points: int = 257
    grid_scale: float = 1.0
    delta: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not self.mu > 2.0 / 3.0:
            raise ParameterError(f"mu must exceed 2/3, got {self.mu}")
        if self.N < 2:
            raise ParameterError(f"N must be at least 2, got {self.N}")
        if not (1.0 <= self.p < 2.0 * self.mu):
            raise ParameterError(f"p must lie in [1, 2*mu), got {self.p}")
        if self.harmonics < 1:
            raise ParameterError("harmonics must be positive")
        if self.grid_points < 16:
            raise ParameterError("grid_points must be at least 16")
        if not self.grid_scale > 0:
            raise ParameterError("grid_scale must be positive")
        derived = 0.5 * min(2.0 * self.mu - 1.0, 1.0)
        if self.delta is None:
            object.__setattr__(self, "delta", derived)
        elif abs(self.delta - derived) > 1e-15:
            raise ParameterError(
                f"delta must equal 0.5*min(2*mu-1, 1) = {derived}, got {self.delta}"
            )

    @property
    def mode_indices(self) -> np.ndarray:
        """Retained mode indices n = N*k for k = -K..K."""
        k = np.arange(-self.harmonics, self.harmonics + 1)
        return self.N * k

    @property
    def base_omega(self) -> float:
        """Constant angular factor of the radial base solution, 2 - 1/mu."""
        return 2.0 - 1.0 / self.mu

    @property
    def base_stream_constant(self) -> float:
        """Constant value of the rescaled base stream profile, 1/(2*mu - 1)."""
        return 1.0 / (2.0 * self.mu - 1.0)


# ---------------------------------------------------------------------------
# Radial grid
# ---------------------------------------------------------------------------


def _clenshaw_curtis_weights(M: int) -> np.ndarray:
    """Clenshaw-Curtis weights for the M+1 Lobatto points on [-1, 1]."""
    n = M
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2.0 * k * theta[1:-1]) / (4 * k * k - 1)
        v -= np.cos(n * theta[1:-1]) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2.0 * k * theta[1:-1]) / (4 * k * k - 1)
    w[1:-1] = 2.0 * v / n
    return w


@dataclass(frozen=True)
class RadialGrid:
    """Chebyshev-Lobatto grid for [0, inf) under beta = scale*s/(1-s).

    nodes       finite beta nodes, ascending, nodes[0] = 0
    weights     quadrature weights for integrals over (0, inf)
    map_scale   the scale of the algebraic map
    s           all M+1 Lobatto points in [0, 1]; s[-1] = 1 is the infinity slot
    diff_s      (M+1)^2 differentiation matrix in s
    radial      (M+1)^2 matrix of beta*d/dbeta = s(1-s) d/ds
    """

    nodes: np.ndarray
    weights: np.ndarray
    map_scale: float
    s: np.ndarray
    diff_s: np.ndarray
    radial: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    def s_of_beta(self, beta):
        beta = np.asarray(beta, dtype=float)
        return beta / (self.map_scale + beta)

    def extend(self, values: np.ndarray, value_at_inf: complex = 0.0) -> np.ndarray:
        """Append the infinity-slot value to a finite-node vector."""
        out = np.empty(self.size + 1, dtype=np.result_type(values, complex))
        out[:-1] = values
        out[-1] = value_at_inf
        return out

    def apply_radial(self, ext: np.ndarray) -> np.ndarray:
        """Apply beta*d/dbeta to an extended vector.

        The infinity-slot value is subtracted first; beta*d/dbeta kills
        constants, and the shift keeps the annihilation exact in floats.
        """
        return self.radial @ (ext - ext[-1])

    def limit_beta_times(self, ext: np.ndarray) -> complex:
        """lim beta*f(beta) as beta -> inf for a function with f(inf) = 0.

        Equals -scale * f'(s) at s = 1 by l'Hopital on the algebraic map.
        """
        return -self.map_scale * (self.diff_s[-1, :] @ (ext - ext[-1]))

    def chebyshev_coefficients(self, ext: np.ndarray) -> np.ndarray:
        """Chebyshev coefficients of the interpolant through the M+1 points."""
        from scipy.fft import dct

        # values ordered by s ascending correspond to y = 1 - 2s descending,
        # i.e. y_j = cos(pi j / M); DCT-I gives T_k(y) coefficients directly
        M = self.size
        c = dct(ext, type=1, axis=-1) / M
        c = np.asarray(c)
        c[..., 0] *= 0.5
        c[..., -1] *= 0.5
        return c

    def interpolate(self, ext: np.ndarray, beta_targets) -> np.ndarray:
        """Evaluate the spectral interpolant at arbitrary beta >= 0."""
        coeffs = self.chebyshev_coefficients(ext)
        s = self.s_of_beta(beta_targets)
        return self.evaluate_coefficients(coeffs, s)

    def evaluate_coefficients(self, coeffs: np.ndarray, s) -> np.ndarray:
        """Clenshaw evaluation at s in [0, 1] of DCT coefficients.

        coeffs may carry leading batch axes; the result has shape
        coeffs.shape[:-1] + s.shape.
        """
        y = 1.0 - 2.0 * np.asarray(s, dtype=float)
        lead = coeffs.shape[:-1]
        yb = y[(None,) * len(lead) + (...,)]
        shape = lead + y.shape
        b1 = np.zeros(shape, dtype=coeffs.dtype)
        b2 = np.zeros(shape, dtype=coeffs.dtype)
        for k in range(coeffs.shape[-1] - 1, 0, -1):
            ck = coeffs[..., k][(...,) + (None,) * y.ndim]
            b1, b2 = ck + 2.0 * yb * b1 - b2, b1
        c0 = coeffs[..., 0][(...,) + (None,) * y.ndim]
        return c0 + yb * b1 - b2


def build_grid(points: int, scale: float) -> RadialGrid:
    """Build the radial grid with `points` finite nodes under the given scale."""
    if points < 16:
        raise ParameterError(f"need at least 16 radial nodes, got {points}")
    if not scale > 0:
        raise ParameterError(f"grid scale must be positive, got {scale}")
    M = points
    j = np.arange(M + 1)
    s = 0.5 * (1.0 - np.cos(np.pi * j / M))
    # pairwise differences via the product identity keeps corner entries exact
    ii, kk = np.meshgrid(j, j, indexing="ij")
    diff = np.sin((ii + kk) * (np.pi / (2 * M))) * np.sin((ii - kk) * (np.pi / (2 * M)))
    w = np.ones(M + 1)
    w[0] = w[-1] = 0.5
    w *= (-1.0) ** j
    with np.errstate(divide="ignore", invalid="ignore"):
        D = np.where(ii != kk, (w[None, :] / w[:, None]) / np.where(ii != kk, diff, 1.0), 0.0)
    D[j, j] = 0.0
    D[j, j] = -D.sum(axis=1)
    for _ in range(3):  # pin row sums to zero under matmul as well
        D[j, j] -= D @ np.ones(M + 1)
    radial = (s * (1.0 - s))[:, None] * D
    for _ in range(3):
        radial[j, j] -= radial @ np.ones(M + 1)
    nodes = scale * s[:-1] / (1.0 - s[:-1])
    wcc = 0.5 * _clenshaw_curtis_weights(M)  # mapped to [0, 1]
    weights = wcc[:-1] * scale / (1.0 - s[:-1]) ** 2
    return RadialGrid(
        nodes=nodes, weights=weights, map_scale=float(scale), s=s, diff_s=D, radial=radial
    )


# ---------------------------------------------------------------------------
# Cutoff functions
# ---------------------------------------------------------------------------


def mollifier_bump(beta) -> np.ndarray:
    """Unnormalized bump exp(1/((beta-3/2)^2 - 1/4)) on (1, 2), zero elsewhere."""
    beta = np.asarray(beta, dtype=float)
    out = np.zeros_like(beta)
    m = (beta > 1.0) & (beta < 2.0)
    q = (beta[m] - 1.5) ** 2 - 0.25
    out[m] = np.exp(1.0 / q)
    return out


def mollifier_bump_derivative(beta) -> np.ndarray:
    """d/dbeta of the unnormalized bump."""
    beta = np.asarray(beta, dtype=float)
    out = np.zeros_like(beta)
    m = (beta > 1.0) & (beta < 2.0)
    x = beta[m] - 1.5
    q = x * x - 0.25
    out[m] = np.exp(1.0 / q) * (-2.0 * x / (q * q))
    return out


@lru_cache(maxsize=1)
def cutoff_normalization() -> float:
    """Constant C making the bump integrate to one over (1, 2)."""
    from scipy.integrate import quad

    total, _ = quad(lambda b: float(mollifier_bump(b)), 1.0, 2.0, epsabs=1e-15, epsrel=1e-14)
    return 1.0 / total


@lru_cache(maxsize=1)
def _bump_cumulative_table():
    """Cumulative integral of the normalized bump on a fine grid over [1, 2]."""
    n_cells = 4096
    gx, gw = leggauss(16)
    edges = 1.0 + np.arange(n_cells + 1) / n_cells
    half = 0.5 / n_cells
    mid = edges[:-1] + half
    x = mid[:, None] + half * gx[None, :]
    cell = half * np.sum(mollifier_bump(x) * gw[None, :], axis=1)
    cum = np.concatenate([[0.0], np.cumsum(cell)])
    return edges, cum * cutoff_normalization()


def xi_far(beta) -> np.ndarray:
    """Cutoff equal to 0 on [0, 1] and 1 on [2, inf); integral of the bump."""
    beta = np.asarray(beta, dtype=float)
    edges, cum = _bump_cumulative_table()
    out = np.zeros_like(beta)
    out[beta >= 2.0] = 1.0
    m = (beta > 1.0) & (beta < 2.0)
    if np.any(m):
        b = beta[m]
        idx = np.minimum(((b - 1.0) * 4096).astype(int), 4095)
        lo = edges[idx]
        gx, gw = leggauss(16)
        half = 0.5 * (b - lo)
        x = (lo + half)[:, None] + half[:, None] * gx[None, :]
        rest = half * np.sum(mollifier_bump(x) * gw[None, :], axis=1)
        out[m] = cum[idx] + rest * cutoff_normalization()
    return out


def xi_near(beta) -> np.ndarray:
    """Cutoff equal to 1 near the origin: 1 - xi_far."""
    return 1.0 - xi_far(beta)


@dataclass(frozen=True)
class CutoffSamples:
    """Cutoffs and their weighted derivatives sampled at the grid nodes."""

    grid: RadialGrid
    xi0: np.ndarray  # xi_near
    xiinf: np.ndarray  # xi_far
    eta: np.ndarray  # d/dbeta xi_far, the normalized bump
    beta_xi0: np.ndarray
    beta_dbeta_xi0: np.ndarray
    beta2_dbeta_xi0: np.ndarray
    beta2_dbeta2_xi0: np.ndarray
    dbeta_xiinf: np.ndarray
    xiinf_over_beta: np.ndarray
    normalization: float


def sample_cutoffs(grid: RadialGrid) -> CutoffSamples:
    """Sample the cutoff pair and its derivative combinations at the nodes."""
    b = grid.nodes
    C = cutoff_normalization()
    eta = C * mollifier_bump(b)
    eta_p = C * mollifier_bump_derivative(b)
    x0 = xi_near(b)
    xf = xi_far(b)
    over = np.zeros_like(b)
    pos = b > 0
    over[pos] = xf[pos] / b[pos]
    return CutoffSamples(
        grid=grid,
        xi0=x0,
        xiinf=xf,
        eta=eta,
        beta_xi0=b * x0,
        beta_dbeta_xi0=-b * eta,
        beta2_dbeta_xi0=-b * b * eta,
        beta2_dbeta2_xi0=-b * b * eta_p,
        dbeta_xiinf=eta,
        xiinf_over_beta=over,
        normalization=C,
    )


# ---------------------------------------------------------------------------
# Mode profiles and fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModeProfile:
    """One Fourier mode of a radial function in structured form.

    The represented function is

        f(beta) = core(beta) + c0*xi_near(beta) + cinf*xi_far(beta) + cconst.

    The constant slot is reserved for mode zero.
    """

    n: int
    core: np.ndarray
    c0: complex = 0.0
    cinf: complex = 0.0
    cconst: complex = 0.0

    def __post_init__(self):
        if self.n != 0 and self.cconst != 0.0:
            raise StructureError(f"constant component forbidden at mode n={self.n}")
        object.__setattr__(self, "core", np.asarray(self.core, dtype=complex))

    @classmethod
    def from_values(
        cls, n: int, values: np.ndarray, value_at_inf: complex, cuts: CutoffSamples
    ) -> "ModeProfile":
        """Canonical split of node values plus an infinity value.

        The far value goes to the constant slot at mode zero and to the
        xi_far slot otherwise; the remaining value at beta = 0 goes to the
        xi_near slot, leaving a core that vanishes at both ends.
        """
        values = np.asarray(values, dtype=complex)
        cconst = complex(value_at_inf) if n == 0 else 0.0
        cinf = 0.0 if n == 0 else complex(value_at_inf)
        c0 = complex(values[0]) - cconst
        core = values - c0 * cuts.xi0 - cinf * cuts.xiinf - cconst
        core[0] = 0.0  # exact by construction; kill the rounding residue
        return cls(n=n, core=core, c0=c0, cinf=cinf, cconst=cconst)

    def values(self, cuts: CutoffSamples) -> np.ndarray:
        return self.core + self.c0 * cuts.xi0 + self.cinf * cuts.xiinf + self.cconst

    @property
    def value_at_inf(self) -> complex:
        return self.cinf + self.cconst

    def extended(self, cuts: CutoffSamples) -> np.ndarray:
        return cuts.grid.extend(self.values(cuts), self.value_at_inf)

    def conjugated(self) -> "ModeProfile":
        return ModeProfile(
            n=-self.n,
            core=np.conj(self.core),
            c0=np.conj(self.c0),
            cinf=np.conj(self.cinf),
            cconst=np.conj(self.cconst),
        )

    def scaled(self, a: complex) -> "ModeProfile":
        return ModeProfile(self.n, a * self.core, a * self.c0, a * self.cinf, a * self.cconst)

    def plus(self, other: "ModeProfile") -> "ModeProfile":
        if other.n != self.n:
            raise StructureError("cannot add profiles of different modes")
        return ModeProfile(
            self.n,
            self.core + other.core,
            self.c0 + other.c0,
            self.cinf + other.cinf,
            self.cconst + other.cconst,
        )


def _refined_s(grid: RadialGrid, factor: int) -> np.ndarray:
    """Cosine-uniform refinement of the s-points, endpoints excluded."""
    M = grid.size
    t = np.arange(1, factor * M) / (factor * M)
    return 0.5 * (1.0 - np.cos(np.pi * t))


_VARIANT_SLOTS = {
    # variant: (c0 allowed, cinf allowed, cconst allowed at mode 0)
    "Cb": (True, True, True),
    "Cbdelta": (False, False, False),
    "Wminus": (False, False, False),  # c0 allowed only at n = 0, handled below
    "Wzero": (True, False, True),
    "Wplus": (True, True, False),
}


def mode_norm(
    f: ModeProfile,
    variant: str,
    delta: float,
    cuts: CutoffSamples,
    refine: int = 4,
) -> float:
    """Norm of a mode profile in one of the layered spaces.

    Sup norms are estimated on a `refine`-times denser sample of the
    interpolant.  Direct-sum variants add the moduli of the admitted
    structured coefficients; a component the variant forbids raises
    StructureError.  The Cb variant measures the whole function; Wplus
    folds a constant into its two cutoff slots.
    """
    if variant not in _VARIANT_SLOTS:
        raise ParameterError(f"unknown norm variant {variant!r}")
    grid = cuts.grid
    if variant == "Cb":
        ext = f.extended(cuts)
        sref = _refined_s(grid, refine)
        vals = grid.evaluate_coefficients(grid.chebyshev_coefficients(ext), sref)
        return float(max(np.max(np.abs(vals)), np.max(np.abs(ext))))

    c0, cinf, cconst = f.c0, f.cinf, f.cconst
    if variant == "Wplus" and cconst != 0.0:
        c0 = c0 + cconst
        cinf = cinf + cconst
        cconst = 0.0
    allow_c0, allow_cinf, allow_cconst = _VARIANT_SLOTS[variant]
    if variant == "Wminus" and f.n == 0:
        allow_c0 = True
    if not allow_c0 and c0 != 0.0:
        raise StructureError(f"variant {variant} forbids a xi_near component")
    if not allow_cinf and cinf != 0.0:
        raise StructureError(f"variant {variant} forbids a xi_far component")
    if not allow_cconst and cconst != 0.0:
        raise StructureError(f"variant {variant} forbids a constant component")

    ext = grid.extend(f.core, 0.0)
    sref = _refined_s(grid, refine)
    core_ref = grid.evaluate_coefficients(grid.chebyshev_coefficients(ext), sref)
    beta_ref = grid.map_scale * sref / (1.0 - sref)
    wgt = np.maximum(beta_ref**delta, beta_ref**-delta)
    sup = float(np.max(wgt * np.abs(core_ref)))
    # node values participate too; beta = 0 contributes only through a
    # nonzero core value there, which means the weighted norm is infinite
    b = grid.nodes[1:]
    wnode = np.maximum(b**delta, b**-delta)
    sup = max(sup, float(np.max(wnode * np.abs(f.core[1:]))))
    if abs(f.core[0]) > 0.0:
        return math.inf
    return sup + abs(c0) + abs(cinf) + abs(cconst)


@dataclass(frozen=True)
class SpectralField:
    """A real scalar field on the chart, stored as radial mode profiles.

    Modes live on the lattice n = N*k with |k| <= harmonics, and satisfy the
    conjugate symmetry of a real field: mode(-n) = conj(mode(n)).
    """

    params: SolverParams
    grid: RadialGrid
    modes: Mapping[int, ModeProfile]

    def __post_init__(self):
        want = set(int(n) for n in self.params.mode_indices)
        have = set(int(n) for n in self.modes)
        if have != want:
            raise StructureError(f"mode set {sorted(have)} != lattice {sorted(want)}")
        for n, prof in self.modes.items():
            if prof.n != n:
                raise StructureError(f"profile at key {n} has index {prof.n}")

    @classmethod
    def base_state(cls, params: SolverParams, grid: RadialGrid) -> "SpectralField":
        """The radial power-law base solution: constant profile at mode zero."""
        M = grid.size
        modes = {}
        for n in params.mode_indices:
            cconst = params.base_stream_constant if n == 0 else 0.0
            modes[int(n)] = ModeProfile(int(n), np.zeros(M, dtype=complex), 0.0, 0.0, cconst)
        return cls(params=params, grid=grid, modes=modes)

    def mode(self, n: int) -> ModeProfile:
        return self.modes[int(n)]

    def map_modes(self, fn: Callable[[ModeProfile], ModeProfile]) -> "SpectralField":
        return replace(self, modes={n: fn(p) for n, p in self.modes.items()})

    def plus(self, other: "SpectralField") -> "SpectralField":
        return replace(
            self, modes={n: p.plus(other.modes[n]) for n, p in self.modes.items()}
        )

    def scaled(self, a: complex) -> "SpectralField":
        return self.map_modes(lambda p: p.scaled(a))

    def symmetry_defect(self, cuts: CutoffSamples) -> float:
        """Largest deviation from mode(-n) == conj(mode(n))."""
        worst = 0.0
        for n in self.params.mode_indices:
            a = self.modes[int(n)].extended(cuts)
            b = self.modes[int(-n)].conjugated().extended(cuts)
            worst = max(worst, float(np.max(np.abs(a - b))))
        return worst


@dataclass(frozen=True)
class AngularSignal:
    """Angular function on the mode lattice N*Z, e.g. the vorticity factor."""

    params: SolverParams
    coeffs: Mapping[int, complex]

    def __post_init__(self):
        lattice = set(int(n) for n in self.params.mode_indices)
        extra = set(int(n) for n in self.coeffs) - lattice
        if extra:
            raise StructureError(f"coefficients off the mode lattice: {sorted(extra)}")

    @classmethod
    def base(cls, params: SolverParams) -> "AngularSignal":
        return cls(params, {0: complex(params.base_omega)})

    @classmethod
    def constant_plus_cosine(
        cls, params: SolverParams, amplitude: float, harmonic: int | None = None
    ) -> "AngularSignal":
        """base constant + amplitude*cos(harmonic*phi)."""
        h = params.N if harmonic is None else int(harmonic)
        if h % params.N != 0 or h == 0:
            raise ParameterError(f"harmonic {h} is not a nonzero multiple of N={params.N}")
        coeffs = {0: complex(params.base_omega), h: amplitude / 2.0, -h: amplitude / 2.0}
        return cls(params, coeffs)

    def coeff(self, n: int) -> complex:
        return complex(self.coeffs.get(int(n), 0.0))

    def values(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        out = np.zeros(phi.shape, dtype=complex)
        for n, c in self.coeffs.items():
            out += c * np.exp(1j * n * phi)
        return out.real

    def seminorm(self) -> float:
        """A^(-1/2) sum excluding the mean mode."""
        return float(
            sum(abs(c) / math.sqrt(bracket(n)) for n, c in self.coeffs.items() if n != 0)
        )

    def a_norm(self, s: float) -> float:
        return float(sum(bracket(n) ** s * abs(c) for n, c in self.coeffs.items()))

    def lp_norm(self, p: float, samples: int = 4096) -> float:
        """L^p norm over the circle by dense quadrature on one period."""
        period = 2.0 * np.pi / self.params.N
        phi = period * np.arange(samples) / samples
        vals = np.abs(self.values(phi)) ** p
        return float((2.0 * np.pi * np.mean(vals)) ** (1.0 / p))

    def plus(self, other: "AngularSignal") -> "AngularSignal":
        keys = set(self.coeffs) | set(other.coeffs)
        return AngularSignal(
            self.params, {n: self.coeff(n) + other.coeff(n) for n in keys}
        )

    def scaled(self, a: complex) -> "AngularSignal":
        return AngularSignal(self.params, {n: a * c for n, c in self.coeffs.items()})


def spectral_norm(obj, s: float, cuts: CutoffSamples | None = None) -> float:
    """Weighted l1 norm over modes: sum of <n>^s times the mode norm.

    For an AngularSignal the mode norm is the coefficient modulus.  For a
    SpectralField it is the direct-sum norm of the structured decomposition,
    with the core measured in C_b^delta.
    """
    if isinstance(obj, AngularSignal):
        return obj.a_norm(s)
    if not isinstance(obj, SpectralField):
        raise ParameterError(f"cannot take a spectral norm of {type(obj)!r}")
    if cuts is None:
        cuts = sample_cutoffs(obj.grid)
    delta = obj.params.delta
    total = 0.0
    for n in obj.params.mode_indices:
        prof = obj.modes[int(n)]
        core_norm = mode_norm(
            ModeProfile(prof.n, prof.core), "Cbdelta", delta, cuts
        )
        part = core_norm + abs(prof.c0) + abs(prof.cinf) + abs(prof.cconst)
        total += bracket(int(n)) ** s * part
    return float(total)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _c(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def field_to_json(field_: SpectralField) -> dict:
    """JSON document for a spectral field, grid nodes included."""
    return {
        "mu": field_.params.mu,
        "N": field_.params.N,
        "p": field_.params.p,
        "harmonics": field_.params.harmonics,
        "grid_points": field_.params.grid_points,
        "grid_scale": field_.params.grid_scale,
        "grid_nodes": [float(b) for b in field_.grid.nodes],
        "modes": [
            {
                "n": int(n),
                "core": [_c(z) for z in field_.modes[int(n)].core],
                "c0": _c(field_.modes[int(n)].c0),
                "cinf": _c(field_.modes[int(n)].cinf),
                "cconst": _c(field_.modes[int(n)].cconst),
            }
            for n in sorted(int(m) for m in field_.modes)
        ],
    }


def field_from_json(doc: dict) -> SpectralField:
    params = SolverParams(
        mu=doc["mu"],
        N=doc["N"],
        p=doc.get("p", 1.0),
        harmonics=doc["harmonics"],
        grid_points=doc["grid_points"],
        grid_scale=doc["grid_scale"],
    )
    grid = build_grid(params.grid_points, params.grid_scale)
    modes = {}
    for entry in doc["modes"]:
        n = int(entry["n"])
        core = np.array([complex(re, im) for re, im in entry["core"]])
        modes[n] = ModeProfile(
            n=n,
            core=core,
            c0=complex(*entry["c0"]),
            cinf=complex(*entry["cinf"]),
            cconst=complex(*entry["cconst"]),
        )
    return SpectralField(params=params, grid=grid, modes=modes)


def dump_field(field_: SpectralField, path) -> None:
    with open(path, "w") as fh:
        json.dump(field_to_json(field_), fh, sort_keys=True)


def load_field(path) -> SpectralField:
    with open(path) as fh:
        return field_from_json(json.load(fh))
