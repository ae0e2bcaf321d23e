"""Chart maps and reconstruction of the physical vorticity, velocity, stream.

The chart (beta, phi) covers the punctured plane through

    z = e^a (cos theta, sin theta),   theta = beta + phi,
    a = (1/2) log(-psi_beta / mu),    psi_beta = beta^(-2 mu) dbeta_bar psi,

and the self-similar fields at time t > 0 follow from the profile values at
the preimage of z = x * t^(-mu):

    w(x, t)   = (beta/t) * (dvarphi_bar psi)^(-1/(2 mu)) * Omega(phi)
    psi(x, t) = (beta/t)^(1-2 mu) * psi(beta, phi)
    u(x, t)   = |x|^(1-1/mu) (-dbeta_bar psi/mu)^(1/(2 mu)-1)
                * (2 dbeta_bar psi / ((dvarphi_bar+1) dbeta_bar psi))
                * ( (dphi dbeta_bar psi * dvarphi_bar psi
                     - (dvarphi_bar+1) dbeta_bar psi * dphi psi)
                    / (2 dbeta_bar psi) * e_r  +  dvarphi_bar psi * e_theta )

Inversion of the chart runs along the lines theta = const, where the map's
radius is strictly monotone in beta, so a bracketed Newton iteration is
safe.  The vanishing set of the vorticity organizes into the curves
t^mu * T(line phi = phi0) over the zeros phi0 of Omega; each is squeezed
between algebraic spirals with radii sqrt(1/(2 mu)) and sqrt(3/(2 mu)) times
(t/beta)^mu, and an explicit one-dimensional ODE integration provides an
independent oracle for the spiral exponent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import InversionError, ParameterError
from .grid_space import (
    AngularSignal,
    SolverParams,
    SpectralField,
    sample_cutoffs,
)
from .operators import apply_beta_mult

__all__ = [
    "PhysicalSample",
    "SpiralCurve",
    "SpiralFit",
    "FieldEvaluator",
    "to_plane",
    "to_chart",
    "eval_fields",
    "eval_fields_batch",
    "initial_data",
    "spiral_extract",
    "spiral_ode_oracle",
    "verify",
    "export_samples_csv",
    "export_spirals_csv",
    "render_spirals_svg",
]


@dataclass(frozen=True)
class PhysicalSample:
    """One reconstructed space-time sample with its chart preimage."""

    x: tuple
    t: float
    w: float
    u: tuple
    psi: float
    chart: tuple


@dataclass(frozen=True)
class SpiralCurve:
    """Zero-set curve of the vorticity at one time."""

    phi0: float
    beta: np.ndarray
    points: np.ndarray  # (len(beta), 2)
    t: float


@dataclass(frozen=True)
class SpiralFit:
    theta: np.ndarray
    radius: np.ndarray
    a: float
    b: float
    max_rel_error: float


class FieldEvaluator:
    """Vectorized evaluation of the derived profile fields at chart points."""

    def __init__(self, stream: SpectralField, omega: AngularSignal | None = None):
        self.stream = stream
        self.omega = omega
        self.params = stream.params
        self.grid = stream.grid
        self.cuts = sample_cutoffs(stream.grid)
        self.mu = self.params.mu
        K = self.params.harmonics
        self.kvec = np.arange(-K, K + 1)
        self.nvec = self.kvec * self.params.N
        grid, cuts, mu = self.grid, self.cuts, self.mu

        exts = np.array([stream.modes[int(n)].extended(cuts) for n in self.nvec])
        q = np.array([grid.apply_radial(e) for e in exts])
        bmul = np.array([apply_beta_mult(grid, int(n), e) for n, e in zip(self.nvec, exts)])
        db = q + (1.0 - 2.0 * mu) * exts
        dv = -(q - bmul) + (2.0 * mu - 1.0) * exts
        dp = 1j * self.nvec[:, None] * exts
        dpdb = 1j * self.nvec[:, None] * db
        qb = np.array([grid.apply_radial(e) for e in db])
        bmul_b = np.array([apply_beta_mult(grid, int(n), e) for n, e in zip(self.nvec, db)])
        lg = -(qb - bmul_b) + (2.0 * mu - 1.0) * db + db
        self._coef = {
            name: grid.chebyshev_coefficients(arr)
            for name, arr in (
                ("psi", exts),
                ("db", db),
                ("dv", dv),
                ("dp", dp),
                ("dpdb", dpdb),
                ("lg", lg),
            )
        }

    def field(self, name: str, beta, phi) -> np.ndarray:
        """Synthesize one derived field at chart points (arrays broadcast)."""
        beta = np.asarray(beta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        s = self.grid.s_of_beta(beta)
        vals = self.grid.evaluate_coefficients(self._coef[name], s)  # (2K+1, ...)
        phases = np.exp(1j * self.nvec.reshape((-1,) + (1,) * beta.ndim) * phi[None, ...])
        return np.sum(vals * phases, axis=0).real

    def log_radius(self, beta, phi):
        """a(beta, phi) = 0.5 log(-beta^(-2 mu) dbeta_bar psi / mu)."""
        db = self.field("db", beta, phi)
        if np.any(db >= 0):
            raise InversionError("the radial derivative lost its sign; run bounds_check")
        return 0.5 * np.log(-db / self.mu) - self.mu * np.log(beta)

    def omega_values(self, phi) -> np.ndarray:
        if self.omega is None:
            raise ParameterError("this evaluator was built without an angular factor")
        return self.omega.values(phi)


def to_plane(stream: SpectralField, beta, phi, ev: FieldEvaluator | None = None) -> np.ndarray:
    """Chart map: (beta, phi) with beta > 0 to the self-similar plane."""
    if ev is None:
        ev = FieldEvaluator(stream)
    beta = np.asarray(beta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(beta <= 0):
        raise ParameterError("the chart map needs beta > 0")
    a = ev.log_radius(beta, phi)
    theta = beta + phi
    r = np.exp(a)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def to_chart(
    stream: SpectralField,
    z: np.ndarray,
    ev: FieldEvaluator | None = None,
    tol: float = 1e-13,
    max_iter: int = 80,
) -> tuple[np.ndarray, np.ndarray]:
    """Invert the chart map at nonzero plane points.

    Along the line beta + phi = arg(z) the log-radius is strictly decreasing
    in beta, so a bracketed Newton iteration converges for every admissible
    profile.  Returns (beta, phi) arrays matching z[..., 2].
    """
    if ev is None:
        ev = FieldEvaluator(stream)
    z = np.asarray(z, dtype=float)
    r = np.hypot(z[..., 0], z[..., 1])
    if np.any(r == 0.0):
        raise ParameterError("the chart does not cover the origin")
    theta = np.arctan2(z[..., 1], z[..., 0])
    target = np.log(r)
    mu = ev.mu
    # bracket from the admissibility envelope, widened
    base = r ** (-1.0 / mu)
    lo = 0.5 * (1.0 / (2.0 * mu)) ** (1.0 / (2.0 * mu)) * base
    hi = 2.0 * (3.0 / (2.0 * mu)) ** (1.0 / (2.0 * mu)) * base
    flo = ev.log_radius(lo, theta - lo) - target
    fhi = ev.log_radius(hi, theta - hi) - target
    for _ in range(8):
        bad = flo < 0
        if not np.any(bad):
            break
        lo = np.where(bad, 0.5 * lo, lo)
        flo = np.where(bad, ev.log_radius(lo, theta - lo) - target, flo)
    for _ in range(8):
        bad = fhi > 0
        if not np.any(bad):
            break
        hi = np.where(bad, 2.0 * hi, hi)
        fhi = np.where(bad, ev.log_radius(hi, theta - hi) - target, fhi)
    if np.any(flo < 0) or np.any(fhi > 0):
        raise InversionError("failed to bracket the chart inversion")

    beta = np.sqrt(lo * hi)
    for _ in range(max_iter):
        F = ev.log_radius(beta, theta - beta) - target
        lo = np.where(F > 0, beta, lo)
        hi = np.where(F <= 0, beta, hi)
        db = ev.field("db", beta, theta - beta)
        lg = ev.field("lg", beta, theta - beta)
        deriv = -lg / (2.0 * beta * db)  # strictly negative on the window
        step = F / deriv
        cand = beta - step
        inside = (cand > lo) & (cand < hi)
        cand = np.where(inside, cand, 0.5 * (lo + hi))
        done = np.abs(F) < tol
        beta = np.where(done, beta, cand)
        if np.all(done):
            break
    else:
        F = ev.log_radius(beta, theta - beta) - target
        if np.max(np.abs(F)) > 1e3 * tol:
            raise InversionError(f"chart inversion stalled at |F| = {np.max(np.abs(F)):.2e}")
    phi = np.mod(theta - beta, 2.0 * np.pi)
    return beta, phi


def eval_fields_batch(
    stream: SpectralField,
    omega: AngularSignal,
    x: np.ndarray,
    t: np.ndarray,
    ev: FieldEvaluator | None = None,
) -> dict:
    """Reconstruct w, u, psi at arrays of space-time points (t > 0)."""
    if ev is None:
        ev = FieldEvaluator(stream, omega)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    mu = ev.mu
    z = x * (t ** (-mu))[..., None]
    beta, phi = to_chart(stream, z, ev)
    db = ev.field("db", beta, phi)
    dv = ev.field("dv", beta, phi)
    lg = ev.field("lg", beta, phi)
    dp = ev.field("dp", beta, phi)
    dpdb = ev.field("dpdb", beta, phi)
    psiv = ev.field("psi", beta, phi)
    om = ev.omega_values(phi)

    w = (beta / t) * dv ** (-1.0 / (2.0 * mu)) * om
    psi = (beta / t) ** (1.0 - 2.0 * mu) * psiv
    theta = beta + phi
    rmag = np.hypot(x[..., 0], x[..., 1])
    radial_part = (dpdb * dv - lg * dp) / (2.0 * db)
    pref = rmag ** (1.0 - 1.0 / mu) * (-db / mu) ** (1.0 / (2.0 * mu) - 1.0) * (2.0 * db / lg)
    u1 = pref * (radial_part * np.cos(theta) - dv * np.sin(theta))
    u2 = pref * (radial_part * np.sin(theta) + dv * np.cos(theta))
    return {
        "w": w,
        "u1": u1,
        "u2": u2,
        "psi": psi,
        "beta": beta,
        "phi": phi,
    }


def eval_fields(stream: SpectralField, omega: AngularSignal, x, t: float) -> PhysicalSample:
    """Reconstruct one space-time sample (t > 0, x != 0)."""
    out = eval_fields_batch(stream, omega, np.asarray(x, float)[None, :], np.array([t]))
    return PhysicalSample(
        x=(float(x[0]), float(x[1])),
        t=float(t),
        w=float(out["w"][0]),
        u=(float(out["u1"][0]), float(out["u2"][0])),
        psi=float(out["psi"][0]),
        chart=(float(out["beta"][0]), float(out["phi"][0])),
    )


def initial_data(
    stream: SpectralField, omega: AngularSignal, theta, ev: FieldEvaluator | None = None
) -> dict:
    """Angular factors of the time-zero limits.

    w(x, 0)   = |x|^(-1/mu) * w0(theta)
    u(x, 0)   = |x|^(1-1/mu) * u0(theta)           (2-vector factor)
    psi(x, 0) = |x|^(2-1/mu) * psi0(theta)

    The boundary values at beta = 0 come straight from the structured
    decomposition (the origin is the first grid node).
    """
    if ev is None:
        ev = FieldEvaluator(stream, omega)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    mu = ev.mu
    zero = np.zeros_like(theta)
    db0 = ev.field("db", zero, theta)
    dv0 = ev.field("dv", zero, theta)
    lg0 = ev.field("lg", zero, theta)
    dp0 = ev.field("dp", zero, theta)
    dpdb0 = ev.field("dpdb", zero, theta)
    psi0 = ev.field("psi", zero, theta)
    om = ev.omega_values(theta)

    w0 = (db0 / (-mu * dv0)) ** (1.0 / (2.0 * mu)) * om
    psi0_factor = (-db0 / mu) ** (1.0 / (2.0 * mu) - 1.0) * psi0
    radial_part = (dpdb0 * dv0 - lg0 * dp0) / (2.0 * db0)
    pref = (-db0 / mu) ** (1.0 / (2.0 * mu) - 1.0) * (2.0 * db0 / lg0)
    u0 = np.stack(
        [
            pref * (radial_part * np.cos(theta) - dv0 * np.sin(theta)),
            pref * (radial_part * np.sin(theta) + dv0 * np.cos(theta)),
        ],
        axis=-1,
    )
    return {"w0": w0, "u0": u0, "psi0": psi0_factor}


def _omega_zeros(omega: AngularSignal, params: SolverParams, n_scan: int = 16384) -> np.ndarray:
    """All zeros of the angular factor on [0, 2 pi), by scan and bisection."""
    period = 2.0 * np.pi / params.N
    phis = period * np.arange(n_scan) / n_scan
    vals = omega.values(phis)
    zeros = []
    for i in range(n_scan):
        a, b = phis[i], phis[(i + 1) % n_scan] if i + 1 < n_scan else period
        fa, fb = vals[i], vals[(i + 1) % n_scan]
        if fa == 0.0:
            zeros.append(a)
            continue
        if fa * fb < 0.0:
            for _ in range(60):
                m = 0.5 * (a + b)
                fm = float(omega.values(np.array([m]))[0])
                if fa * fm <= 0.0:
                    b, fb = m, fm
                else:
                    a, fa = m, fm
            zeros.append(0.5 * (a + b))
    if not zeros:
        return np.array([])
    base = np.array(zeros)
    all_zeros = np.concatenate([base + j * period for j in range(params.N)])
    return np.sort(np.mod(all_zeros, 2.0 * np.pi))


def spiral_extract(
    stream: SpectralField,
    omega: AngularSignal,
    t: float,
    n_beta: int = 160,
    beta_range: tuple = (0.05, 40.0),
    ev: FieldEvaluator | None = None,
) -> list[SpiralCurve]:
    """Zero-set curves of the vorticity at time t.

    One curve per zero of the angular factor; an angular factor without
    zeros gives an empty list.
    """
    if ev is None:
        ev = FieldEvaluator(stream, omega)
    zeros = _omega_zeros(omega, stream.params)
    if len(zeros) == 0:
        return []
    mu = ev.mu
    beta = np.geomspace(beta_range[0], beta_range[1], n_beta)
    curves = []
    B, P = np.meshgrid(beta, zeros, indexing="ij")
    db = ev.field("db", B, P)
    radii = (-db / mu) ** 0.5 * (t / B) ** mu
    theta = B + P
    X = radii * np.cos(theta)
    Y = radii * np.sin(theta)
    for j, phi0 in enumerate(zeros):
        pts = np.stack([X[:, j], Y[:, j]], axis=-1)
        curves.append(SpiralCurve(phi0=float(phi0), beta=beta.copy(), points=pts, t=float(t)))
    return curves


def spiral_ode_oracle(mu: float, C: float, z0, theta_span) -> SpiralFit:
    """Integrate the base-flow streamline ODE and fit an algebraic spiral.

    d|z|/dtheta = -(mu/C) (2 - 1/mu) |z|^(1 + 1/mu); the solution must fit
    |z| = (a theta + b)^(-mu) and the returned max_rel_error measures how
    well it does over the span.
    """
    from scipy.integrate import solve_ivp

    if C == 0.0:
        raise ParameterError("the circulation constant must be nonzero")
    r0 = float(np.hypot(z0[0], z0[1]))
    if r0 == 0.0:
        raise ParameterError("the starting point must be away from the origin")
    t0, t1 = float(theta_span[0]), float(theta_span[1])
    if t0 == t1:
        a = (2.0 - 1.0 / mu) / C
        b = r0 ** (-1.0 / mu) - a * t0
        return SpiralFit(
            theta=np.array([t0]), radius=np.array([r0]), a=a, b=b, max_rel_error=0.0
        )

    rate = -(mu / C) * (2.0 - 1.0 / mu)

    def rhs(theta, y):
        return rate * y ** (1.0 + 1.0 / mu)

    thetas = np.linspace(t0, t1, 400)
    sol = solve_ivp(
        rhs, (t0, t1), [r0], t_eval=thetas, method="DOP853", rtol=1e-12, atol=1e-14
    )
    if not sol.success:
        raise ParameterError(f"streamline integration failed: {sol.message}")
    radius = sol.y[0]
    # |z|^{-1/mu} is affine in theta; fit by linear least squares
    g = radius ** (-1.0 / mu)
    Amat = np.stack([thetas, np.ones_like(thetas)], axis=-1)
    (a, b), *_ = np.linalg.lstsq(Amat, g, rcond=None)
    fit = (a * thetas + b) ** (-mu)
    max_rel = float(np.max(np.abs(fit - radius) / radius))
    return SpiralFit(theta=thetas, radius=radius, a=float(a), b=float(b), max_rel_error=max_rel)


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------


def _bump(x, lo, hi):
    y = np.zeros_like(x)
    m = (x > lo) & (x < hi)
    q = (x[m] - lo) / (hi - lo)
    y[m] = np.exp(-1.0 / (q * (1.0 - q)))
    return y


def _bump_prime(x, lo, hi):
    y = np.zeros_like(x)
    m = (x > lo) & (x < hi)
    q = (x[m] - lo) / (hi - lo)
    y[m] = np.exp(-1.0 / (q * (1.0 - q))) * ((1.0 - 2.0 * q) / (q * (1.0 - q)) ** 2) / (hi - lo)
    return y


def _gauss(n, a, b):
    x, w = leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def _lp_chart_norm(ev: FieldEvaluator, omega, p: float, R: float, t: float,
                   n_phi: int = 512, n_rad: int = 64) -> float:
    """L^p norm of w(., t) over the centered ball of radius R via the chart.

    Pulls the integral back to the chart, where the ball becomes the region
    beta >= beta*(phi); the radial integral substitutes beta = beta*/v to
    land on a finite interval.
    """
    mu = ev.mu
    zr = R * t ** (-mu)
    # the chart fields are 2 pi / N periodic; sampling one period makes the
    # trapezoid sum exact and immune to aliasing at high periodicity
    period = 2.0 * np.pi / ev.params.N
    phis = period * np.arange(n_phi) / n_phi
    # solve |z(beta, phi)| = zr per angle: log radius strictly decreasing
    beta = np.full(n_phi, (1.0 / np.sqrt(mu)) ** (1.0 / mu) * zr ** (-1.0 / mu))
    target = np.log(zr)
    for _ in range(60):
        db = ev.field("db", beta, phis)
        F = 0.5 * np.log(-db / mu) - mu * np.log(beta) - target
        lg = ev.field("lg", beta, phis)
        # quasi-Newton slope; exact up to an angular-derivative term that
        # vanishes at the base state
        deriv = -lg / (2.0 * beta * db)
        step = F / deriv
        beta = np.maximum(beta - step, 1e-3 * beta)
        if np.max(np.abs(F)) < 1e-12:
            break
    om = ev.omega_values(phis)
    v, wv = _gauss(n_rad, 0.0, 1.0)
    Bgrid = beta[None, :] / v[:, None]
    Pgrid = np.broadcast_to(phis[None, :], Bgrid.shape)
    lg = ev.field("lg", Bgrid, Pgrid)
    dv = ev.field("dv", Bgrid, Pgrid)
    # chart Jacobian: dz = -beta^(-2 mu - 1) lg / (2 mu) dbeta dphi
    integ = (lg / (-2.0 * mu)) * dv ** (-p / (2.0 * mu)) * np.abs(om[None, :]) ** p
    radial = np.sum(wv[:, None] * v[:, None] ** (2.0 * mu - p - 1.0) * integ, axis=0)
    total = float(np.sum(radial * beta ** (p - 2.0 * mu)) * (2.0 * np.pi / n_phi))
    total *= t ** (2.0 * mu - p)
    return total ** (1.0 / p)


def verify(
    stream: SpectralField,
    omega: AngularSignal,
    params: SolverParams,
    suite: Sequence[str] = ("selfsim", "lp", "weak", "divfree", "poisson"),
    seed: int = 42,
) -> dict:
    """Run the physical-space verification suites; returns a value report.

    selfsim  scaling identity w(lambda^mu x, lambda t) = w(x, t)/lambda
    lp       time-independent L^p bound over centered balls
    weak     weak form of the vorticity transport, initial term included
    divfree  weak divergence-freeness of the velocity
    poisson  weak form of the vorticity-stream coupling
    """
    known = {"selfsim", "lp", "weak", "divfree", "poisson"}
    unknown = set(suite) - known
    if unknown:
        raise ParameterError(f"unknown verification suites: {sorted(unknown)}")
    ev = FieldEvaluator(stream, omega)
    mu = params.mu
    rng = np.random.default_rng(seed)
    report: dict = {"suite": list(suite), "seed": seed}

    if "selfsim" in suite:
        P = 1000
        r = rng.uniform(0.5, 2.0, P)
        ang = rng.uniform(0.0, 2.0 * np.pi, P)
        x = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1)
        t = rng.uniform(0.2, 1.0, P)
        lam = rng.uniform(0.5, 2.0, P)
        f1 = eval_fields_batch(stream, omega, x, t, ev)
        xs = x * (lam**mu)[:, None]
        f2 = eval_fields_batch(stream, omega, xs, lam * t, ev)
        scale = np.max(np.abs(f1["w"]))
        defect = np.max(np.abs(lam * f2["w"] - f1["w"])) / scale
        report["selfsim"] = {"samples": P, "max_rel_defect": float(defect)}

    if "lp" in suite:
        rows = []
        pmax = 2.0 * mu
        for p in (1.0, 1.5):
            if p >= pmax:
                continue
            for t in (0.01, 0.1, 1.0):
                for R in (0.5, 1.0, 2.0):
                    left = _lp_chart_norm(ev, omega, p, R, t)
                    bound = (
                        (6.0 * mu / (2.0 * mu - p)) ** (1.0 / p)
                        * mu ** (-1.0 / (2.0 * mu))
                        * omega.lp_norm(p)
                        * R ** (2.0 / p - 1.0 / mu)
                    )
                    rows.append(
                        {"p": p, "t": t, "R": R, "norm": left, "bound": bound,
                         "ok": bool(left <= bound * (1.0 + 1e-9))}
                    )
        report["lp"] = rows

    if "weak" in suite or "divfree" in suite or "poisson" in suite:
        # bump test functions on annuli x time windows, seeded
        tests = []
        for i in range(5):
            r0 = rng.uniform(0.5, 0.9)
            r1 = r0 + rng.uniform(0.8, 1.6)
            if i < 2:
                # window open at t = 0: half of a bump centered there
                b = rng.uniform(0.8, 1.4)
                tests.append((r0, r1, -b, b))
            else:
                a = rng.uniform(0.1, 0.3)
                b = a + rng.uniform(0.6, 1.2)
                tests.append((r0, r1, a, b))

    if "weak" in suite:
        rows = []
        for r0, r1, a, b in tests:
            nr, nth, nt = 32, 80, 20
            rq, wr = _gauss(nr, r0, r1)
            tq, wt = _gauss(nt, max(a, 0.0), b)
            # radial test functions and 2 pi / N periodic fields: the full
            # angular integral is N times the one-period integral
            period = 2.0 * np.pi / params.N
            th = period * np.arange(nth) / nth
            wth = 2.0 * np.pi / nth
            Rg, Tg, Hg = np.meshgrid(rq, tq, th, indexing="ij")
            X = np.stack([Rg * np.cos(Hg), Rg * np.sin(Hg)], axis=-1)
            flat_x = X.reshape(-1, 2)
            flat_t = Tg.reshape(-1)
            f = eval_fields_batch(stream, omega, flat_x, flat_t, ev)
            g = _bump(Rg, r0, r1)
            gp = _bump_prime(Rg, r0, r1)
            h = _bump(Tg, a, b)
            hp = _bump_prime(Tg, a, b)
            W = f["w"].reshape(Rg.shape)
            U1 = f["u1"].reshape(Rg.shape)
            U2 = f["u2"].reshape(Rg.shape)
            wq = wr[:, None, None] * wt[None, :, None] * wth * Rg
            grad1 = gp * np.cos(Hg) * h
            grad2 = gp * np.sin(Hg) * h
            term_t = float(np.sum(W * g * hp * wq))
            term_adv = float(np.sum(W * (U1 * grad1 + U2 * grad2) * wq))
            mass_t = float(np.sum(np.abs(W * g * hp) * wq))
            mass_adv = float(np.sum(np.abs(W * (U1 * grad1 + U2 * grad2)) * wq))
            # initial term: w(., 0) = |x|^(-1/mu) w0(theta)
            if a < 0.0:
                h0 = float(_bump(np.array([0.0]), a, b)[0])
                w0 = initial_data(stream, omega, th, ev)["w0"]
                rad = float(np.sum(wr * rq ** (1.0 - 1.0 / mu) * g[:, 0, 0]))
                term_init = h0 * rad * float(np.sum(w0) * wth)
            else:
                term_init = 0.0
            resid = term_init + term_t + term_adv
            scale = max(mass_t, mass_adv, abs(term_init), 1e-300)
            rows.append(
                {"support": (r0, r1, max(a, 0.0), b), "residual": resid,
                 "scale": scale, "rel": abs(resid) / scale}
            )
        report["weak"] = rows

    if "divfree" in suite:
        rows = []
        for r0, r1, a, b in tests[:3]:
            nr, nth = 48, 128
            rq, wr = _gauss(nr, r0, r1)
            period = 2.0 * np.pi / params.N
            th = period * np.arange(nth) / nth
            wth = 2.0 * np.pi / nth
            Rg, Hg = np.meshgrid(rq, th, indexing="ij")
            X = np.stack([Rg * np.cos(Hg), Rg * np.sin(Hg)], axis=-1)
            tval = 0.5 * (max(a, 0.05) + b)
            f = eval_fields_batch(
                stream, omega, X.reshape(-1, 2), np.full(Rg.size, tval), ev
            )
            gp = _bump_prime(Rg, r0, r1)
            U1 = f["u1"].reshape(Rg.shape)
            U2 = f["u2"].reshape(Rg.shape)
            wq = wr[:, None] * wth * Rg
            val = float(np.sum((U1 * gp * np.cos(Hg) + U2 * gp * np.sin(Hg)) * wq))
            scale = float(np.sum(np.hypot(U1, U2) * np.abs(gp) * wq)) or 1.0
            rows.append({"t": tval, "integral": val, "scale": scale, "rel": abs(val) / scale})
        report["divfree"] = rows

    if "poisson" in suite:
        rows = []
        for r0, r1, a, b in tests[:3]:
            nr, nth = 48, 128
            rq, wr = _gauss(nr, r0, r1)
            period = 2.0 * np.pi / params.N
            th = period * np.arange(nth) / nth
            wth = 2.0 * np.pi / nth
            Rg, Hg = np.meshgrid(rq, th, indexing="ij")
            X = np.stack([Rg * np.cos(Hg), Rg * np.sin(Hg)], axis=-1)
            tval = 0.5 * (max(a, 0.05) + b)
            f = eval_fields_batch(
                stream, omega, X.reshape(-1, 2), np.full(Rg.size, tval), ev
            )
            gp = _bump_prime(Rg, r0, r1)
            W = f["w"].reshape(Rg.shape)
            U1 = f["u1"].reshape(Rg.shape)
            U2 = f["u2"].reshape(Rg.shape)
            g = _bump(Rg, r0, r1)
            wq = wr[:, None] * wth * Rg
            # grad psi = (u2, -u1)
            lhs = -float(np.sum((U2 * gp * np.cos(Hg) - U1 * gp * np.sin(Hg)) * wq))
            rhs = float(np.sum(W * g * wq))
            scale = max(abs(lhs), abs(rhs), 1e-300)
            rows.append({"t": tval, "lhs": lhs, "rhs": rhs, "rel": abs(lhs - rhs) / scale})
        report["poisson"] = rows

    return report


# ---------------------------------------------------------------------------
# Artifact export
# ---------------------------------------------------------------------------


def export_samples_csv(path, samples: Iterable[PhysicalSample]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2", "t", "w", "u1", "u2", "psi"])
        for s in samples:
            writer.writerow(
                [f"{v!r}" for v in (s.x[0], s.x[1], s.t, s.w, s.u[0], s.u[1], s.psi)]
            )


def export_spirals_csv(path, curves: Sequence[SpiralCurve]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phi0", "t", "beta", "x1", "x2"])
        for c in curves:
            for beta, (x1, x2) in zip(c.beta, c.points):
                writer.writerow([f"{v!r}" for v in (c.phi0, c.t, beta, x1, x2)])


def render_spirals_svg(path, curves: Sequence[SpiralCurve], size: int = 640) -> None:
    """Standalone SVG with the sampled zero-set curves and annotated axes."""
    if curves:
        all_pts = np.concatenate([c.points for c in curves], axis=0)
        lim = float(np.max(np.abs(all_pts))) * 1.05
    else:
        lim = 1.0
    half = size / 2.0

    def px(p):
        return (half + p[0] / lim * (half - 10), half - p[1] / lim * (half - 10))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<line x1="0" y1="{half}" x2="{size}" y2="{half}" stroke="#999" stroke-width="1"/>',
        f'<line x1="{half}" y1="0" x2="{half}" y2="{size}" stroke="#999" stroke-width="1"/>',
        f'<text x="{size - 60}" y="{half - 6}" font-size="12" fill="#555">x1={lim:.3g}</text>',
        f'<text x="{half + 6}" y="14" font-size="12" fill="#555">x2={lim:.3g}</text>',
    ]
    for i, c in enumerate(curves):
        pts = " ".join(f"{px(p)[0]:.2f},{px(p)[1]:.2f}" for p in c.points)
        hue = (137 * i) % 360
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="hsl({hue},60%,40%)" '
            f'stroke-width="1.2"/>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
