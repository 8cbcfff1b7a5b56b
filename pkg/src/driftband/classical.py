"""Averaged guiding-center dynamics on the torus.

At fixed cyclotron action the averaged Hamiltonian I1 + eps*vbar(I1, y) is a
function on the torus R^2/lattice; its level-set topology (Reeb graph)
classifies the slow drift of the cyclotron-circle centers.  This module
finds critical points, traces level sets with integer winding vectors,
classifies single trajectories by direct integration, locates the critical
cyclotron actions where the topology changes, and assembles the regime
decomposition of the (I1, E) half-plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import (DomainError, NumericsError, Tolerance, bessel_j0,
                       bessel_j0_zero, find_root, integrate_ode)
from .potential import FourierPotential

TWO_PI = 2.0 * math.pi


class UnsupportedTopologyError(NumericsError):
    """More structure than a minimal Morse function; carries the points."""

    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = points or []


class SeparatrixProximityError(NumericsError):
    pass


# ----------------------------------------------------------------------
# Fast scalar model of the averaged Hamiltonian at fixed I1
# ----------------------------------------------------------------------

class DriftModel:
    """Averaged Hamiltonian at fixed cyclotron action, with fast scalar
    evaluation of value/gradient/Hessian used by the integrators."""

    def __init__(self, p: FourierPotential, eps: float, i1: float):
        if eps < 0.0:
            raise DomainError("eps must be non-negative")
        self.potential = p
        self.eps = float(eps)
        self.i1 = float(i1)
        self.lattice = p.lattice
        self.averaged = p.damped(i1)
        self.mean = self.averaged.mean
        self.modes = self.averaged._half  # (g1, g2, re, im) per conjugate pair
        self.l1 = self.averaged.coeff_l1
        self.grad_scale = sum(2.0 * math.hypot(m[0], m[1])
                              * math.hypot(m[2], m[3]) for m in self.modes)
        self.hess_scale = sum(2.0 * (m[0] ** 2 + m[1] ** 2)
                              * math.hypot(m[2], m[3]) for m in self.modes)

    # -- scalar fast paths -------------------------------------------------

    def vbar(self, y1, y2):
        total = self.mean
        for g1, g2, re, im in self.modes:
            ph = g1 * y1 + g2 * y2
            total += 2.0 * (re * math.cos(ph) - im * math.sin(ph))
        return total

    def grad(self, y1, y2):
        d1 = d2 = 0.0
        for g1, g2, re, im in self.modes:
            ph = g1 * y1 + g2 * y2
            w = -2.0 * (re * math.sin(ph) + im * math.cos(ph))
            d1 += g1 * w
            d2 += g2 * w
        return d1, d2

    def hessian(self, y1, y2):
        h11 = h12 = h22 = 0.0
        for g1, g2, re, im in self.modes:
            ph = g1 * y1 + g2 * y2
            w = -2.0 * (re * math.cos(ph) - im * math.sin(ph))
            h11 += g1 * g1 * w
            h12 += g1 * g2 * w
            h22 += g2 * g2 * w
        return h11, h12, h22

    def energy(self, y):
        """Averaged Hamiltonian I1 + eps*vbar at a point."""
        return self.i1 + self.eps * self.vbar(float(y[0]), float(y[1]))

    def level_of(self, g):
        """vbar level corresponding to an averaged energy g."""
        if self.eps == 0.0:
            raise DomainError("level sets are undefined at eps = 0")
        return (g - self.i1) / self.eps

    def grid_vbar(self, n):
        """vbar on an n x n grid over the unit cell in lattice coordinates."""
        s = np.arange(n) / n
        st = np.stack(np.meshgrid(s, s, indexing="ij"), axis=-1)
        return self.averaged.value(self.lattice.to_cartesian(st))

    def is_flat(self, rel_tol=1e-12):
        """True when the averaged potential is constant to working precision
        (for the cosine example with beta = 1 this happens at every J0 zero,
        where both damping factors vanish together)."""
        return self.l1 <= rel_tol * max(self.potential.coeff_l1, 1e-300)

    def one_dimensional_direction(self, rel_tol=1e-9):
        """Primitive winding direction if vbar depends on one coordinate only.

        Returns the lattice-integer direction of the level lines, or None.
        Happens for the cosine example whenever a J0 factor vanishes.
        """
        ks = [k for k, c in self.averaged.coeffs.items()
              if k != (0, 0) and abs(c) > rel_tol * max(self.l1, 1e-300)]
        if not ks:
            return None  # constant: fully degenerate
        k0 = ks[0]
        for k in ks[1:]:
            if k[0] * k0[1] - k[1] * k0[0] != 0:
                return None
        g = math.gcd(abs(k0[0]), abs(k0[1]))
        k0 = (k0[0] // g, k0[1] // g)
        d = (-k0[1], k0[0])
        if d[0] < 0 or (d[0] == 0 and d[1] < 0):
            d = (-d[0], -d[1])
        return d


def drift_field(p: FourierPotential, eps: float, i1: float, y):
    """Slow drift velocity J grad_y of the averaged Hamiltonian."""
    model = DriftModel(p, eps, i1)
    d1, d2 = model.grad(float(y[0]), float(y[1]))
    return np.array([-eps * d2, eps * d1])


# ----------------------------------------------------------------------
# Critical points
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalPoint:
    y: tuple
    kind: str            # "minimum" | "maximum" | "saddle"
    value: float         # averaged energy I1 + eps*vbar
    level: float         # vbar value
    hess_det: float
    degenerate: bool


@dataclass
class CriticalPointSet:
    points: list
    complete: bool

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def by_kind(self, kind):
        return [c for c in self.points if c.kind == kind]


def find_critical_points(p: FourierPotential, eps: float, i1: float,
                         seeds: int = 32) -> CriticalPointSet:
    """All critical points of the averaged Hamiltonian in one cell.

    Newton iteration on grad(vbar) from a seeds x seeds lattice grid,
    deduplicated modulo the lattice and classified by the Hessian.
    """
    model = DriftModel(p, eps, i1)
    return _critical_points_of_model(model, seeds)


def _critical_points_of_model(model: DriftModel, seeds: int = 32):
    lat = model.lattice
    gscale = max(model.grad_scale, 1e-300)
    hscale = max(model.hess_scale, 1e-300)
    found = {}
    converged = 0
    attempts = 0
    for i in range(seeds):
        for j in range(seeds):
            attempts += 1
            st = np.array([(i + 0.5) / seeds, (j + 0.5) / seeds])
            y = lat.to_cartesian(st)
            y1, y2 = float(y[0]), float(y[1])
            ok = False
            for _ in range(40):
                d1, d2 = model.grad(y1, y2)
                if math.hypot(d1, d2) <= 1e-12 * gscale:
                    ok = True
                    break
                h11, h12, h22 = model.hessian(y1, y2)
                det = h11 * h22 - h12 * h12
                if abs(det) < 1e-13 * hscale * hscale:
                    break
                dy1 = (h22 * d1 - h12 * d2) / det
                dy2 = (h11 * d2 - h12 * d1) / det
                step = math.hypot(dy1, dy2)
                cap = 0.35 * min(TWO_PI, lat.a22)
                if step > cap:
                    dy1 *= cap / step
                    dy2 *= cap / step
                y1 -= dy1
                y2 -= dy2
            if not ok:
                continue
            converged += 1
            st = lat.to_lattice((y1, y2)) % 1.0
            key = (round(st[0] * 1e7) % int(1e7), round(st[1] * 1e7) % int(1e7))
            # collapse near-duplicates that straddle the rounding boundary
            dup = False
            for k2 in found:
                ds = min(abs(key[0] - k2[0]), 1e7 - abs(key[0] - k2[0]))
                dt = min(abs(key[1] - k2[1]), 1e7 - abs(key[1] - k2[1]))
                if ds < 1e3 and dt < 1e3:
                    dup = True
                    break
            if dup:
                continue
            yy = lat.to_cartesian(st)
            h11, h12, h22 = model.hessian(yy[0], yy[1])
            det = h11 * h22 - h12 * h12
            if det > 0.0:
                kind = "minimum" if h11 + h22 > 0.0 else "maximum"
            else:
                kind = "saddle"
            lev = model.vbar(yy[0], yy[1])
            found[key] = CriticalPoint(
                y=(float(yy[0]), float(yy[1])), kind=kind,
                value=model.i1 + model.eps * lev, level=lev,
                hess_det=det, degenerate=abs(det) < 1e-8 * hscale * hscale)
    points = sorted(found.values(), key=lambda c: (c.level, c.y))
    return CriticalPointSet(points=points, complete=converged > attempts // 2)


# ----------------------------------------------------------------------
# Level-set tracing (marching squares on the torus + Newton refinement)
# ----------------------------------------------------------------------

@dataclass
class LevelSetComponent:
    points: np.ndarray       # unwrapped polyline in plane coordinates
    winding: tuple           # integer lattice winding (d1, d2)
    energy: float            # averaged energy of the level
    level: float             # vbar value
    orientation: int = 1

    @property
    def contractible(self):
        return self.winding == (0, 0)

    def closure_defect(self, lattice):
        shift = self.winding[0] * lattice.a1 + self.winding[1] * lattice.a2
        return float(np.max(np.abs(self.points[-1] - self.points[0] - shift)))


_MS_SEGMENTS = {
    # case index from corner signs (bit set when corner > 0), corners
    # ordered (i,j), (i+1,j), (i+1,j+1), (i,j+1); edges 0=bottom 1=right
    # 2=top 3=left; each entry is a list of (edge_in, edge_out) pairs
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)],
    6: [(0, 2)], 7: [(3, 2)], 8: [(2, 3)], 9: [(2, 0)],
    11: [(2, 1)], 12: [(1, 3)], 13: [(1, 0)], 14: [(0, 3)],
}


def _cell_edges(i, j, n):
    """Canonical (wrapped) edge keys of cell (i, j): bottom right top left."""
    return (("h", i, j), ("v", (i + 1) % n, j), ("h", i, (j + 1) % n),
            ("v", i, j))


def trace_level_set(p: FourierPotential, eps: float, i1: float, g: float,
                    grid: int = 256, guard: float | None = None):
    """Connected components of {averaged energy = g} on the torus.

    Each component is an oriented polyline (oriented along the Hamiltonian
    drift flow) with an integer winding vector; winding (0, 0) iff the
    component is contractible.
    """
    model = DriftModel(p, eps, i1)
    lev = model.level_of(g)
    cps = _critical_points_of_model(model)
    levels = [c.level for c in cps]
    if levels:
        spread = max(levels) - min(levels)
        if guard is None:
            guard = max(1e-12, 1e-9 * max(spread, 1e-12))
        if lev <= min(levels) or lev >= max(levels):
            raise DomainError("level outside the classical range")
        if any(abs(lev - lv) < guard for lv in levels):
            raise SeparatrixProximityError(
                f"level {lev} is within {guard} of a critical level")
    return _trace_components(model, lev, grid)


def _trace_components(model: DriftModel, lev: float, grid: int):
    n = grid
    lat = model.lattice
    v = model.grid_vbar(n) - lev
    if np.any(v == 0.0):
        v = v + 1e-13 * max(model.l1, 1.0)
    pos = v > 0.0

    # crossing fraction per edge, indexed by the canonical edge key
    cross = {}
    for i in range(n):
        for j in range(n):
            a = v[i, j]
            b = v[(i + 1) % n, j]
            if (a > 0.0) != (b > 0.0):
                cross[("h", i, j)] = a / (a - b)
            b = v[i, (j + 1) % n]
            if (a > 0.0) != (b > 0.0):
                cross[("v", i, j)] = a / (a - b)

    def cell_edge_points(i, j, edges):
        """Crossing positions of the cell's edges in cell-local (unwrapped)
        grid coordinates; the canonical keys stay wrapped."""
        pts = {}
        for side, key in enumerate(edges):
            if key not in cross:
                continue
            t = cross[key]
            if side == 0:
                pts[side] = np.array([i + t, j])
            elif side == 1:
                pts[side] = np.array([i + 1.0, j + t])
            elif side == 2:
                pts[side] = np.array([i + t, j + 1.0])
            else:
                pts[side] = np.array([i, j + t])
        return pts

    # per-cell segments as (key_in, key_out, local_pt_in, local_pt_out)
    seg_by_edge = {}
    segments = []
    for i in range(n):
        for j in range(n):
            idx = (int(pos[i, j]) | int(pos[(i + 1) % n, j]) << 1
                   | int(pos[(i + 1) % n, (j + 1) % n]) << 2
                   | int(pos[i, (j + 1) % n]) << 3)
            if idx in (0, 15):
                continue
            edges = _cell_edges(i, j, n)
            if idx in (5, 10):
                # saddle cell: split against the center sample
                center = lat.to_cartesian(np.array([(i + 0.5) / n,
                                                    (j + 0.5) / n]))
                cpos = model.vbar(center[0], center[1]) - lev > 0.0
                if idx == 5:
                    pairs = [(3, 0), (1, 2)] if cpos else [(3, 2), (1, 0)]
                else:
                    pairs = [(0, 1), (2, 3)] if cpos else [(0, 3), (2, 1)]
            else:
                pairs = _MS_SEGMENTS[idx]
            local = cell_edge_points(i, j, edges)
            for ein, eout in pairs:
                if ein not in local or eout not in local:
                    continue
                sid = len(segments)
                segments.append((edges[ein], edges[eout],
                                 local[ein] / n, local[eout] / n))
                seg_by_edge.setdefault(edges[ein], []).append(sid)
                seg_by_edge.setdefault(edges[eout], []).append(sid)

    used = [False] * len(segments)
    components = []
    for start in range(len(segments)):
        if used[start]:
            continue
        chain = []
        sid = start
        enter = segments[start][0]
        # unwrapped coordinates: keep a running integer offset so the chain
        # lives on the covering plane
        offset = np.zeros(2)
        prev_pt = None
        while True:
            used[sid] = True
            e_in, e_out, pt_in, pt_out = segments[sid]
            if prev_pt is not None:
                # align this segment's entry point with the previous exit;
                # cell-local coordinates differ from the running unwrapped
                # chain by integer lattice shifts only
                delta = prev_pt - (pt_in + offset)
                offset = offset + np.round(delta)
            chain.append(pt_in + offset)
            prev_pt = pt_out + offset
            # continue through the exit edge into the adjacent cell
            nxt = [s for s in seg_by_edge.get(e_out, []) if s != sid]
            nxt = [s for s in nxt if not used[s] or s == start]
            if not nxt:
                chain.append(prev_pt)
                break
            sid = nxt[0]
            if segments[sid][0] != e_out:
                # flip the neighbor so that it is entered through e_out
                e0, e1, p0, p1 = segments[sid]
                segments[sid] = (e1, e0, p1, p0)
            if sid == start:
                chain.append(prev_pt)
                break
        if len(chain) < 4:
            continue
        st = np.array(chain)
        winding = np.round(st[-1] - st[0]).astype(int)
        ys = lat.to_cartesian(st)
        ys = _refine_polyline(model, ys, lev)
        comp = LevelSetComponent(points=ys, winding=(int(winding[0]),
                                                     int(winding[1])),
                                 energy=model.i1 + model.eps * lev, level=lev)
        _orient_along_flow(model, comp)
        components.append(comp)
    components.sort(key=lambda c: (c.winding, float(c.points[0, 0])))
    return components


def _refine_polyline(model, ys, lev, iterations=4):
    out = ys.copy()
    for _ in range(iterations):
        for idx in range(len(out)):
            y1, y2 = out[idx]
            d1, d2 = model.grad(y1, y2)
            n2 = d1 * d1 + d2 * d2
            if n2 < 1e-30:
                continue
            r = model.vbar(y1, y2) - lev
            out[idx, 0] -= r * d1 / n2
            out[idx, 1] -= r * d2 / n2
    return out


def _orient_along_flow(model, comp):
    mid = len(comp.points) // 2
    y1, y2 = comp.points[mid]
    d1, d2 = model.grad(y1, y2)
    flow = np.array([-d2, d1])
    tangent = comp.points[mid + 1] - comp.points[mid]
    if float(flow @ tangent) < 0.0:
        comp.points = comp.points[::-1].copy()
        comp.winding = (-comp.winding[0], -comp.winding[1])
    comp.orientation = 1


# ----------------------------------------------------------------------
# Single-orbit integration (closure, winding, period, swept area)
# ----------------------------------------------------------------------

@dataclass
class OrbitResult:
    closed: bool
    period: float = math.nan      # in reduced time (field J grad vbar)
    winding: tuple = (0, 0)
    area: float = math.nan        # int y1 dy2 over one period
    end_point: tuple | None = None


def _orbit_once(model: DriftModel, y0, tol: Tolerance = None,
                t_cap: float | None = None) -> OrbitResult:
    """Integrate the reduced drift field through one closure on the torus.

    Candidate closures (section crossings near a wrapped copy of y0) are
    refined by bisection and accepted only when the torus distance really
    vanishes, so near-misses of other lattice copies do not truncate the
    orbit early.
    """
    tol = tol or Tolerance(1e-12, 1e-12, 400)
    lat = model.lattice
    y0 = (float(y0[0]), float(y0[1]))

    def field(t, state):
        y1, y2, _ = state
        d1, d2 = model.grad(y1, y2)
        return (-d2, d1, y1 * d1)  # dA = y1 * dy2/dt

    z0 = lat.to_lattice(np.array(y0))
    f0 = field(0.0, (*y0, 0.0))
    speed = math.hypot(f0[0], f0[1])
    if speed == 0.0:
        return OrbitResult(closed=False)
    n_lat = np.array([(f0[0] - lat.a21 * f0[1] / lat.a22) / TWO_PI,
                      f0[1] / lat.a22])
    n_lat /= np.linalg.norm(n_lat)

    cell_diam = math.hypot(TWO_PI + abs(lat.a21), lat.a22)
    if t_cap is None:
        t_cap = 400.0 * cell_diam / speed
    h0 = 0.01 * cell_diam / speed

    def sigma(y):
        z = lat.to_lattice(np.asarray(y[:2]))
        dz = z - z0
        w = dz - np.round(dz)
        return float(n_lat @ w), float(np.max(np.abs(w)))

    t_base = 0.0
    state = (*y0, 0.0)
    for _attempt in range(64):
        hit = {}

        def observer(ta, sa, tb, sb):
            if t_base + tb <= 0.0:
                return None
            sg0, w0 = sigma(sa)
            sg1, w1 = sigma(sb)
            if (t_base + ta) > 0.0 and sg0 < 0.0 <= sg1 and min(w0, w1) < 0.2:
                hit["bracket"] = (ta, sa, tb, sb)
                return tb
            return None

        try:
            traj = integrate_ode(field, state, t_cap - t_base, tol,
                                 step_observer=observer, first_step=h0)
        except NumericsError:
            return OrbitResult(closed=False)
        if "bracket" not in hit:
            return OrbitResult(closed=False)
        ta, sa, tb, sb = hit["bracket"]

        def state_at(dt, _sa=sa):
            if dt <= 0.0:
                return _sa
            sub = integrate_ode(field, _sa, dt, tol, first_step=dt)
            return tuple(sub.ys[-1])

        lo, hi = 0.0, tb - ta
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            sg, _ = sigma(state_at(mid))
            if sg < 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15 * max(tb, 1.0):
                break
        s_end = state_at(hi)
        _, w_end = sigma(s_end)
        if w_end < 1e-6:
            period = t_base + ta + hi
            z_end = lat.to_lattice(np.array(s_end[:2]))
            winding = np.round(z_end - z0).astype(int)
            return OrbitResult(closed=True, period=period,
                               winding=(int(winding[0]), int(winding[1])),
                               area=s_end[2],
                               end_point=(s_end[0], s_end[1]))
        # false alarm: resume from the end of the triggering step
        t_base += tb
        state = sb
        if t_base >= t_cap:
            return OrbitResult(closed=False)
    return OrbitResult(closed=False)


@dataclass
class TrajectoryClass:
    kind: str                    # "fixed_point" | "closed" | "near_separatrix"
    winding: tuple | None = None
    period: float | None = None


def classify_trajectory(p: FourierPotential, eps: float, i1: float, y0,
                        tol: Tolerance = None,
                        t_cap: float | None = None) -> TrajectoryClass:
    """Integrate the drift system from y0 and classify the motion."""
    tol = tol or Tolerance(1e-10, 1e-10, 400)
    model = DriftModel(p, eps, i1)
    d1, d2 = model.grad(float(y0[0]), float(y0[1]))
    if eps == 0.0 or math.hypot(d1, d2) * eps <= tol.abs_tol:
        return TrajectoryClass(kind="fixed_point")
    orbit = _orbit_once(model, y0, Tolerance(1e-12, 1e-12, 400),
                        t_cap=None if t_cap is None else t_cap * eps)
    if not orbit.closed:
        return TrajectoryClass(kind="near_separatrix")
    return TrajectoryClass(kind="closed", winding=orbit.winding,
                           period=orbit.period / eps)


# ----------------------------------------------------------------------
# Reeb graph
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DriftData:
    d: tuple
    f: tuple | None = None

    def __post_init__(self):
        if self.d != (0, 0):
            if self.f is None:
                object.__setattr__(self, "f", conjugate_vector(self.d))
            di, fi = self.d, self.f
            if di[0] * fi[0] + di[1] * fi[1] != 1:
                raise DomainError("f is not conjugate to d")


def conjugate_vector(d):
    """Integer f with d1 f1 + d2 f2 = 1 (extended Euclid)."""
    d1, d2 = d
    g, x, y = _egcd(d1, d2)
    if g != 1:
        raise DomainError("winding vector is not primitive")
    return (x, y)


def _egcd(a, b):
    if b == 0:
        return (abs(a), int(math.copysign(1, a)) if a else 0, 0)
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


def lexicographic_positive(d):
    if d[0] > 0 or (d[0] == 0 and d[1] > 0):
        return d
    return (-d[0], -d[1])


@dataclass
class ReebEdge:
    id: str                      # "i1" | "i2" | "i3" | "i4"
    energy_range: tuple          # (g_lo, g_hi) in averaged-energy units
    contractible: bool
    drift: DriftData


@dataclass
class ReebGraph:
    kind: str                    # "simple" | "equal_saddles" | "one_dimensional"
    i1: float
    eps: float
    vertices: list               # (kind, averaged energy) pairs
    edges: list                  # ReebEdge
    critical_points: CriticalPointSet | None = None

    def edge(self, edge_id):
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)

    @property
    def g_min(self):
        return min(v[1] for v in self.vertices)

    @property
    def g_max(self):
        return max(v[1] for v in self.vertices)

    def saddle_energies(self):
        vals = sorted(v[1] for v in self.vertices if v[0] == "saddle")
        return tuple(vals)


def build_reeb_graph(p: FourierPotential, eps: float, i1: float,
                     delta: float = 0.0, seeds: int = 32,
                     grid: int = 192) -> ReebGraph:
    """Level-set topology of the averaged Hamiltonian at fixed I1."""
    model = DriftModel(p, eps, i1)
    if model.is_flat():
        g0 = i1 + eps * model.mean
        return ReebGraph("flat", i1, eps,
                         [("minimum", g0), ("maximum", g0)], [], None)
    one_dim = model.one_dimensional_direction()
    if one_dim is not None:
        return _one_dimensional_graph(model, one_dim)
    cps = _critical_points_of_model(model, seeds)
    mins = cps.by_kind("minimum")
    maxs = cps.by_kind("maximum")
    sads = cps.by_kind("saddle")
    if len(cps) != 4 or len(mins) != 1 or len(maxs) != 1 or len(sads) != 2:
        extras = [c for c in cps]
        raise UnsupportedTopologyError(
            f"not a minimal Morse function: {len(mins)} minima, "
            f"{len(maxs)} maxima, {len(sads)} saddles", points=extras)
    g_min = mins[0].value
    g_max = maxs[0].value
    g_lo, g_hi = sorted(s.value for s in sads)
    vertices = [("minimum", g_min), ("saddle", g_lo), ("saddle", g_hi),
                ("maximum", g_max)]
    spread = max(g_max - g_min, 1e-300)
    deg_tol = max(1e-9 * spread, 1e-14)
    if g_hi - g_lo < deg_tol:
        edges = [
            ReebEdge("i1", (g_min, g_lo), True, DriftData((0, 0))),
            ReebEdge("i4", (g_hi, g_max), True, DriftData((0, 0))),
        ]
        return ReebGraph("equal_saddles", i1, eps, vertices, edges, cps)
    # sample one level per edge for contractibility and drift
    probe = {
        "i1": g_min + 0.5 * (g_lo - g_min),
        "i4": g_hi + 0.5 * (g_max - g_hi),
        "mid": 0.5 * (g_lo + g_hi),
    }
    comps_mid = _trace_components(model, model.level_of(probe["mid"]), grid)
    open_comps = [c for c in comps_mid if not c.contractible]
    if len(open_comps) != 2:
        raise UnsupportedTopologyError(
            f"expected two open components between the saddles, "
            f"got {len(open_comps)}")
    d_plus = lexicographic_positive(open_comps[0].winding)
    drift = DriftData(d_plus)
    drift_neg = DriftData((-d_plus[0], -d_plus[1]),
                          (-drift.f[0], -drift.f[1]))
    edges = [
        ReebEdge("i1", (g_min, g_lo), True, DriftData((0, 0))),
        ReebEdge("i2", (g_lo, g_hi), False, drift),
        ReebEdge("i3", (g_lo, g_hi), False, drift_neg),
        ReebEdge("i4", (g_hi, g_max), True, DriftData((0, 0))),
    ]
    for eid in ("i1", "i4"):
        comps = _trace_components(model, model.level_of(probe[eid]), grid)
        if len(comps) != 1 or not comps[0].contractible:
            raise UnsupportedTopologyError(
                f"edge {eid} level has unexpected structure")
    return ReebGraph("simple", i1, eps, vertices, edges, cps)


def _one_dimensional_graph(model: DriftModel, direction):
    # vbar is a 1D trig polynomial along the transversal phase
    samples = model.grid_vbar(512)
    lev_min = float(samples.min())
    lev_max = float(samples.max())
    g_min = model.i1 + model.eps * lev_min
    g_max = model.i1 + model.eps * lev_max
    d = lexicographic_positive(direction)
    drift = DriftData(d)
    drift_neg = DriftData((-d[0], -d[1]), (-drift.f[0], -drift.f[1]))
    vertices = [("minimum", g_min), ("maximum", g_max)]
    edges = [ReebEdge("i2", (g_min, g_max), False, drift),
             ReebEdge("i3", (g_min, g_max), False, drift_neg)]
    return ReebGraph("one_dimensional", model.i1, model.eps, vertices, edges,
                     None)


# ----------------------------------------------------------------------
# Critical cyclotron actions and the regime decomposition
# ----------------------------------------------------------------------

@dataclass
class CriticalSeries:
    saddle_collision: list       # equal saddle values (complex Morse)
    separable: list              # averaged potential collapses to 1D
    merged: list                 # values present in both series
    continuum: bool = False      # every I1 degenerate (e.g. A=B, beta=1)


def _is_cosine_like(p: FourierPotential):
    keys = set(p.coeffs) - {(0, 0)}
    if keys == {(1, 0), (-1, 0), (0, 1), (0, -1)}:
        A = 2.0 * p.coeffs[(1, 0)].real
        B = 2.0 * p.coeffs[(0, 1)].real
        if (abs(p.coeffs[(1, 0)].imag) < 1e-14
                and abs(p.coeffs[(0, 1)].imag) < 1e-14 and A > 0 and B > 0):
            beta = TWO_PI / p.lattice.a22
            return A, B, beta
    return None


def critical_i1_series(p: FourierPotential, eps: float, i1_max: float,
                       grid: int = 200) -> CriticalSeries:
    """Cyclotron actions where the drift topology degenerates."""
    if i1_max <= 0.0:
        raise DomainError("i1_max must be positive")
    cos_like = _is_cosine_like(p)
    if cos_like is not None:
        return _cosine_series(*cos_like, i1_max, grid)
    return _generic_series(p, eps, i1_max, grid)


def _cosine_series(A, B, beta, i1_max, grid):
    separable = []
    k = 1
    while True:
        z = bessel_j0_zero(k)
        i1 = 0.5 * z * z
        if i1 > i1_max and (0.5 * (z / beta) ** 2) > i1_max:
            break
        if i1 <= i1_max:
            separable.append(i1)
        i1b = 0.5 * (z / beta) ** 2
        if i1b <= i1_max:
            separable.append(i1b)
        k += 1
        if k > 400:
            break
    separable = sorted(set(round(v, 14) for v in separable))

    def diff(i1):
        r = math.sqrt(2.0 * i1)
        return A * abs(bessel_j0(r)) - B * abs(bessel_j0(beta * r))

    xs = np.linspace(0.0, i1_max, grid + 1)
    vals = [diff(float(x)) for x in xs]
    if max(abs(v) for v in vals) < 1e-12 * (A + B):
        return CriticalSeries([], separable, [], continuum=True)
    collisions = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            collisions.append(float(a))
        elif fa * fb < 0.0:
            collisions.append(find_root(diff, float(a), float(b),
                                        Tolerance(1e-13, 1e-13, 200)))
    # touching zeros (no sign change) happen when both Bessel factors
    # vanish together, i.e. exactly at the separable series
    for s in separable:
        if abs(diff(s)) < 1e-9 * (A + B):
            collisions.append(s)
    collisions = sorted(set(round(v, 12) for v in collisions))
    merged = [v for v in collisions
              if any(abs(v - s) < 1e-8 * (1 + abs(v)) for s in separable)]
    return CriticalSeries(saddle_collision=collisions, separable=separable,
                          merged=merged)


def _generic_series(p, eps, i1_max, grid):
    xs = np.linspace(0.0, i1_max, grid + 1)
    gaps = []
    for x in xs:
        model = DriftModel(p, max(eps, 1.0), float(x))
        if model.is_flat() or model.one_dimensional_direction() is not None:
            gaps.append(0.0)
            continue
        cps = _critical_points_of_model(model, seeds=16)
        sads = sorted(c.level for c in cps.by_kind("saddle"))
        gaps.append(sads[-1] - sads[0] if len(sads) >= 2 else math.nan)
    collisions = []
    tol = 1e-9 * max(p.coeff_l1, 1e-300)
    for idx in range(1, grid):
        g0, g1, g2 = gaps[idx - 1], gaps[idx], gaps[idx + 1]
        if math.isnan(g1):
            continue
        if g1 <= tol or (g1 < g0 and g1 < g2 and g1 < 1e-4 * p.coeff_l1):
            collisions.append(float(xs[idx]))
    return CriticalSeries(saddle_collision=sorted(collisions), separable=[],
                          merged=[])


@dataclass
class Regime:
    id: str
    kind: str                    # "boundary" | "interior"
    reeb_edge: str
    i1_interval: tuple
    drift: DriftData
    delta: float = 0.0


@dataclass
class RegimeChart:
    regimes: list
    i1_grid: np.ndarray
    curves: dict                 # name -> energy samples over i1_grid
    series: CriticalSeries | None
    delta: float
    collapsed: bool = False      # eps == 0


def build_regimes(p: FourierPotential, eps: float, i1_max: float,
                  delta: float = 0.0, grid: int = 161) -> RegimeChart:
    """Decompose the (I1, E) half-plane into topologically uniform regimes."""
    if delta < 0.0:
        raise DomainError("delta must be non-negative")
    i1s = np.linspace(0.0, i1_max, grid)
    if eps == 0.0:
        curves = {name: i1s.copy() for name in
                  ("E_min", "E_lower_saddle", "E_upper_saddle", "E_max")}
        return RegimeChart([], i1s, curves, None, delta, collapsed=True)
    series = critical_i1_series(p, eps, i1_max)
    curves = {"E_min": [], "E_lower_saddle": [], "E_upper_saddle": [],
              "E_max": []}
    for x in i1s:
        model = DriftModel(p, eps, float(x))
        if model.is_flat():
            g0 = float(x) + eps * model.mean
            for name in curves:
                curves[name].append(g0)
            continue
        if model.one_dimensional_direction() is not None:
            samples = model.grid_vbar(256)
            lo = model.i1 + eps * float(samples.min())
            hi = model.i1 + eps * float(samples.max())
            curves["E_min"].append(lo)
            curves["E_lower_saddle"].append(lo)
            curves["E_upper_saddle"].append(hi)
            curves["E_max"].append(hi)
            continue
        cps = _critical_points_of_model(model, seeds=16)
        mins = cps.by_kind("minimum")
        maxs = cps.by_kind("maximum")
        sads = sorted(c.value for c in cps.by_kind("saddle"))
        curves["E_min"].append(min(c.value for c in mins))
        curves["E_max"].append(max(c.value for c in maxs))
        if len(sads) >= 2:
            curves["E_lower_saddle"].append(sads[0])
            curves["E_upper_saddle"].append(sads[-1])
        else:
            curves["E_lower_saddle"].append(math.nan)
            curves["E_upper_saddle"].append(math.nan)
    curves = {k: np.array(v) for k, v in curves.items()}

    points = sorted(set(series.saddle_collision) | set(series.separable))
    points = [v for v in points if 0.0 < v < i1_max]
    bounds = [0.0] + points + [i1_max]
    regimes = []
    for idx in range(len(bounds) - 1):
        a, b = bounds[idx], bounds[idx + 1]
        mid = 0.5 * (a + b)
        try:
            graph = build_reeb_graph(p, eps, mid)
        except UnsupportedTopologyError:
            continue
        for e in graph.edges:
            kind = "boundary" if e.contractible else "interior"
            regimes.append(Regime(
                id=f"{e.id}[{idx}]", kind=kind, reeb_edge=e.id,
                i1_interval=(a, b), drift=e.drift, delta=delta))
    return RegimeChart(regimes, i1s, curves, series, delta)


# ----------------------------------------------------------------------
# Almost-invariance diagnostic for the first-order average
# ----------------------------------------------------------------------

def lifted_hamiltonian_range(p: FourierPotential, eps: float, i1: float,
                             y_samples, phi1_samples=None):
    """Oscillation of the original Hamiltonian along a lifted drift orbit.

    Lifting a guiding-center path back to phase space turns the original
    Hamiltonian into I1 + eps * v at the ring point, for any fast phase; a
    correct first-order average keeps the swing below 2 eps sum|v_k|.
    """
    if phi1_samples is None:
        phi1_samples = np.linspace(0.0, TWO_PI, 8, endpoint=False)
    r = math.sqrt(2.0 * i1)
    ys = np.asarray(y_samples, dtype=float)
    vals = []
    for phi in phi1_samples:
        x = np.stack([r * math.sin(phi) + ys[:, 0],
                      r * math.cos(phi) + ys[:, 1]], axis=-1)
        vals.append(i1 + eps * p.value(x))
    vals = np.concatenate(vals)
    return float(vals.min()), float(vals.max())
