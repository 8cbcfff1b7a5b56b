"""Harper-type difference operators per Landau band.

Quantizing the averaged symbol at a fixed Landau level turns the slow
coordinate pair into a one-dimensional shift operator of step h; for the
cosine example this is the classical Harper equation
A' (w(y+h) + w(y-h))/2 + B' cos(beta y) w(y) = lambda w(y) with the damped
amplitudes A', B'.  At commensurate flux (beta h / 2 pi = M/N) the operator
reduces by Floquet substitution to N x N Hermitian Bloch matrices whose
sweep yields the band/gap table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .numerics import DomainError, HermitianMatrix, hermitian_eigenvalues
from .potential import FourierPotential, FluxRatio, bessel_j0

TWO_PI = 2.0 * math.pi


class CommensurabilityError(DomainError):
    pass


@dataclass(frozen=True)
class HarperModel:
    hop: float            # shift-average coefficient A'
    pot: float            # cosine coefficient B'
    beta: float
    h_step: float
    i1_mu: float          # Landau action of the reduced band
    eps: float

    def __post_init__(self):
        if not self.h_step > 0.0:
            raise DomainError("h_step must be positive")

    def flux_fraction(self, denominator_cap: int = 512):
        """beta h / (2 pi) as M/N in lowest terms, or None."""
        x = self.beta * self.h_step / TWO_PI
        frac = Fraction(x).limit_denominator(denominator_cap)
        if abs(x - float(frac)) <= 1e-12 * max(1.0, abs(x)):
            return frac
        return None

    def lambda_to_energy(self, lam):
        return self.i1_mu + self.eps * np.asarray(lam)

    def energy_to_lambda(self, e):
        return (np.asarray(e) - self.i1_mu) / self.eps


def harper_from_landau(p: FourierPotential, mu: int, h: float,
                       eps: float) -> HarperModel:
    """Reduce the cosine example at the mu-th Landau level."""
    keys = set(p.coeffs) - {(0, 0)}
    if keys != {(1, 0), (-1, 0), (0, 1), (0, -1)}:
        raise DomainError("harper_from_landau expects the two-cosine example")
    A = 2.0 * p.coeffs[(1, 0)].real
    B = 2.0 * p.coeffs[(0, 1)].real
    beta = TWO_PI / p.lattice.a22
    i1 = (mu + 0.5) * h
    r = math.sqrt(2.0 * i1)
    return HarperModel(hop=A * bessel_j0(r), pot=B * bessel_j0(beta * r),
                       beta=beta, h_step=h, i1_mu=i1, eps=eps)


def bloch_matrix(model: HarperModel, flux, theta1: float,
                 phi0: float) -> HermitianMatrix:
    """N x N Floquet reduction of the Harper operator.

    Sites phi_j = phi0 + 2 pi M j / N carry the cosine; the hop closes
    around the N-cycle with boundary phase e^(i N theta1).
    """
    m_over_n = _as_fraction(flux)
    check = model.flux_fraction()
    if check is None or check != m_over_n:
        raise CommensurabilityError(
            f"model flux {model.beta * model.h_step / TWO_PI} is not {m_over_n}")
    m, n = m_over_n.numerator, m_over_n.denominator
    a = np.zeros((n, n), dtype=complex)
    for j in range(n):
        a[j, j] = model.pot * math.cos(phi0 + TWO_PI * m * j / n)
    # row j is the difference equation at site j; crossing the cycle end
    # picks up the Bloch phase from w_(j+N) = e^(i N theta1) w_j
    for j in range(n):
        up = np.exp(1j * n * theta1) if j == n - 1 else 1.0
        dn = np.exp(-1j * n * theta1) if j == 0 else 1.0
        a[j, (j + 1) % n] += 0.5 * model.hop * up
        a[j, (j - 1) % n] += 0.5 * model.hop * dn
    return HermitianMatrix(a)


def _as_fraction(flux):
    if isinstance(flux, Fraction):
        return flux
    if isinstance(flux, FluxRatio):
        # main flux eta = N/M corresponds to beta h / 2 pi = M/N
        return Fraction(flux.M, flux.N)
    if isinstance(flux, tuple):
        return Fraction(flux[0], flux[1])
    raise DomainError(f"cannot interpret flux {flux!r}")


@dataclass
class BandTable:
    bands: list                  # ascending (lam_lo, lam_hi)
    e_bands: list                # same intervals mapped to energies
    grid_resolution: tuple
    gap_floor: float
    touching: list = field(default_factory=list)

    @property
    def count(self):
        return len(self.bands)

    def gaps(self):
        out = []
        for (_, hi), (lo, _) in zip(self.bands[:-1], self.bands[1:]):
            out.append(lo - hi)
        return out

    @property
    def lambda_extent(self):
        return self.bands[-1][1] - self.bands[0][0]


def band_table(model: HarperModel, flux, grid=(64, 64),
               gap_floor: float = 1e-9, refine: int = 4) -> BandTable:
    """Sweep the Bloch parameters and collect per-index eigenvalue ranges."""
    m_over_n = _as_fraction(flux)
    n = m_over_n.denominator
    g1, g2 = grid
    thetas = np.linspace(0.0, TWO_PI / n, g1, endpoint=False)
    phis = np.linspace(0.0, TWO_PI, g2, endpoint=False)
    mins = np.full(n, np.inf)
    maxs = np.full(n, -np.inf)
    argmin = [None] * n
    argmax = [None] * n
    for th in thetas:
        for ph in phis:
            lam = hermitian_eigenvalues(bloch_matrix(model, m_over_n, th, ph))
            for b in range(n):
                if lam[b] < mins[b]:
                    mins[b] = lam[b]
                    argmin[b] = (th, ph)
                if lam[b] > maxs[b]:
                    maxs[b] = lam[b]
                    argmax[b] = (th, ph)
    # local refinement around the winning grid points
    dth = TWO_PI / n / g1
    dph = TWO_PI / g2
    for b in range(n if refine > 0 else 0):
        for which, anchor in (("min", argmin[b]), ("max", argmax[b])):
            th0, ph0 = anchor
            for th in np.linspace(th0 - dth, th0 + dth, 2 * refine + 1):
                for ph in np.linspace(ph0 - dph, ph0 + dph, 2 * refine + 1):
                    lam = hermitian_eigenvalues(
                        bloch_matrix(model, m_over_n, th, ph))
                    if which == "min" and lam[b] < mins[b]:
                        mins[b] = lam[b]
                    if which == "max" and lam[b] > maxs[b]:
                        maxs[b] = lam[b]
    bands = [(float(mins[b]), float(maxs[b])) for b in range(n)]
    touching = [idx for idx in range(n - 1)
                if bands[idx + 1][0] - bands[idx][1] < gap_floor]
    e_bands = [(float(model.lambda_to_energy(lo)),
                float(model.lambda_to_energy(hi))) for lo, hi in bands]
    return BandTable(bands=bands, e_bands=e_bands, grid_resolution=(g1, g2),
                     gap_floor=gap_floor, touching=touching)


def general_symbol_matrix(p: FourierPotential, mu: int, h: float, eps: float,
                          flux, theta) -> HermitianMatrix:
    """Bloch matrix of the averaged symbol for any trigonometric potential.

    Mode (k1, k2) of the averaged potential acts as a k1-site hop times an
    on-site wave, Weyl-symmetrized: the entry at column j carries the phase
    of the wave evaluated midway along the hop.  Coefficients come damped
    by the cyclotron average at the mu-th Landau action.
    """
    m_over_n = _as_fraction(flux)
    m, n = m_over_n.numerator, m_over_n.denominator
    theta1, phi0 = theta
    beta = TWO_PI / p.lattice.a22
    if abs(beta * h / TWO_PI - m / n) > 1e-9:
        raise CommensurabilityError("h and the lattice are incommensurate")
    i1 = (mu + 0.5) * h
    damped = p.damped(i1)
    y0 = phi0 / beta
    ys = y0 + h * np.arange(n)
    a = np.zeros((n, n), dtype=complex)
    for (k1, k2), c in damped.coeffs.items():
        if (k1, k2) == (0, 0):
            a += np.eye(n) * c.real
            continue
        _, kappa = p.lattice.dual_vector(k1, k2)
        # the wave must close around the N-cycle
        closure = kappa * n * h / TWO_PI
        if abs(closure - round(closure)) > 1e-9:
            raise CommensurabilityError(
                f"mode {(k1, k2)} does not close on the Bloch cycle")
        for j in range(n):
            col_raw = j + k1
            wrap = col_raw // n
            col = col_raw % n
            # Weyl symmetrization: the wave is evaluated midway of the hop
            phase = np.exp(1j * kappa * (ys[j] + 0.5 * k1 * h))
            bloch = np.exp(1j * n * theta1 * wrap)
            a[j, col] += c * phase * bloch
    return HermitianMatrix(a)
