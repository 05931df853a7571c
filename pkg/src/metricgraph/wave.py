"""Finite-difference solution of the wave equation on a metric graph.

Each arc is cut into ``N_j`` cells of width ``h_j``.  Vertices own a single
unknown shared by all incident arcs, so continuity holds by construction.
With lumped masses (``h_j`` at arc nodes, ``sum h_j / 2`` at vertices) the
semi-discrete system reads ``M u'' = -K u`` where ``K`` sums the cell
differences ``(u_{i+1} - u_i)^2 / h``; at a vertex this is the flux balance
``u''(v) = 2 / sum(h_j) * sum (u_{j,1} - u_v) / h_j``.  Time stepping is
leapfrog.  Leaves default to Neumann (the same stencil with one arc);
a leaf tagged ``("radiation", eps)`` instead obeys ``eps u_t = du/dn``,
``n`` pointing into the arc, with a first-order upwind update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import MetricGraphError
from .graph import MetricGraph
from .spectral import Eigenpair, ModeCoefficients


@dataclass(frozen=True)
class Mesh:
    graph: MetricGraph
    N: np.ndarray
    h: np.ndarray
    dt: float
    cfl: float
    arc_nodes: tuple[np.ndarray, ...]  # global index of nodes 0..N_j on each arc
    vertex_index: dict
    mass: np.ndarray = field(repr=False)
    stiffness: sp.csr_matrix = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.mass)

    def arc_x(self, pos: int) -> np.ndarray:
        return np.arange(self.N[pos] + 1) * self.h[pos]

    def with_dt(self, dt: float) -> "Mesh":
        if dt > self.cfl * self.h.min() * (1 + 1e-12):
            raise MetricGraphError("CFL_VIOLATION", f"dt={dt} exceeds cfl*min(h)")
        return Mesh(self.graph, self.N, self.h, dt, self.cfl, self.arc_nodes,
                    self.vertex_index, self.mass, self.stiffness)


def discretize(graph: MetricGraph, dx_target: float, cfl: float = 0.9) -> Mesh:
    """Build the mesh: ``N_j = max(4, round(l_j / dx_target))`` and ``dt = cfl * min h``."""
    if not dx_target > 0:
        raise MetricGraphError("INVALID_DX", f"dx_target must be positive, got {dx_target}")
    if not 0 < cfl < 1:
        raise MetricGraphError("CFL_VIOLATION", f"cfl must lie in (0, 1), got {cfl}")
    L = graph.lengths
    N = np.maximum(4, np.rint(L / dx_target).astype(int))
    h = L / N
    vertex_index = {v: i for i, v in enumerate(graph.vertex_ids)}
    nxt = len(vertex_index)
    arc_nodes = []
    for pos, arc in enumerate(graph.arcs):
        idx = np.empty(N[pos] + 1, dtype=int)
        idx[0] = vertex_index[arc.origin]
        idx[-1] = vertex_index[arc.terminal]
        idx[1:-1] = np.arange(nxt, nxt + N[pos] - 1)
        nxt += N[pos] - 1
        arc_nodes.append(idx)

    mass = np.zeros(nxt)
    rows, cols, vals = [], [], []
    for pos, idx in enumerate(arc_nodes):
        hj = h[pos]
        mass[idx[1:-1]] += hj
        mass[idx[0]] += hj / 2
        mass[idx[-1]] += hj / 2
        a, b = idx[:-1], idx[1:]
        w = np.full(len(a), 1.0 / hj)
        rows += [a, b, a, b]
        cols += [a, b, b, a]
        vals += [w, w, -w, -w]
    K = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nxt, nxt)
    )
    return Mesh(graph, N, h, cfl * float(h.min()), cfl, tuple(arc_nodes), vertex_index, mass, K)


@dataclass(frozen=True)
class WaveState:
    u: np.ndarray
    u_prev: np.ndarray
    t: float
    # vertex id -> epsilon for radiating leaves; every other leaf is Neumann
    radiation: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EnergyReport:
    t: float
    per_arc: np.ndarray

    @property
    def total(self) -> float:
        return float(self.per_arc.sum())


def _radiation_nodes(mesh: Mesh, radiation: dict):
    """(vertex index, neighbour index, h, eps) for each radiating leaf."""
    out = []
    for vid, eps in radiation.items():
        if mesh.graph.degree(vid) != 1:
            raise MetricGraphError("INVALID_BOUNDARY", f"vertex {vid} is not a leaf")
        if not eps > 0:
            raise MetricGraphError("INVALID_BOUNDARY", f"epsilon must be positive at vertex {vid}")
        (pos, end), = mesh.graph.ends_at(vid)
        idx = mesh.arc_nodes[pos]
        nbr = idx[1] if end == 0 else idx[-2]
        out.append((mesh.vertex_index[vid], nbr, mesh.h[pos], float(eps)))
    return out


def _operator(mesh: Mesh) -> sp.csr_matrix:
    return sp.diags(-1.0 / mesh.mass) @ mesh.stiffness


class _Stepper:
    """Leapfrog kernel with the operator and boundary data cached."""

    def __init__(self, mesh: Mesh, radiation: dict):
        if mesh.dt > mesh.cfl * mesh.h.min() * (1 + 1e-12) or mesh.cfl >= 1:
            raise MetricGraphError("CFL_VIOLATION", "time step exceeds the stability bound")
        self.mesh = mesh
        self.dt2L = (mesh.dt**2 * _operator(mesh)).tocsr()
        rad = _radiation_nodes(mesh, radiation)
        self.rad_v = np.array([r[0] for r in rad], dtype=int)
        self.rad_n = np.array([r[1] for r in rad], dtype=int)
        self.rad_c = np.array([mesh.dt / (r[3] * r[2]) for r in rad])

    def advance(self, u: np.ndarray, u_prev: np.ndarray) -> np.ndarray:
        u_next = 2.0 * u - u_prev + self.dt2L @ u
        if len(self.rad_v):
            uv = u[self.rad_v]
            u_next[self.rad_v] = uv + self.rad_c * (u[self.rad_n] - uv)
        return u_next


def initial_state(mesh: Mesh, u0: np.ndarray, v0: np.ndarray, radiation: dict | None = None) -> WaveState:
    """Second-order Taylor start: ``u_prev = u0 - dt v0 + dt^2/2 L u0``."""
    L = _operator(mesh)
    dt = mesh.dt
    u_prev = u0 - dt * v0 + 0.5 * dt * dt * (L @ u0)
    return WaveState(np.asarray(u0, float).copy(), u_prev, 0.0, dict(radiation or {}))


_last_stepper: list = []


def step(state: WaveState, mesh: Mesh) -> WaveState:
    """One leapfrog step; the operator is reused across calls on the same mesh."""
    if state.u.shape != (mesh.size,):
        raise MetricGraphError("GRAPH_MISMATCH", "state does not match the mesh")
    key = (id(mesh), tuple(sorted(state.radiation.items())))
    if not _last_stepper or _last_stepper[0][0] != key or _last_stepper[0][1] is not mesh:
        _last_stepper[:] = [(key, mesh, _Stepper(mesh, state.radiation))]
    u_next = _last_stepper[0][2].advance(state.u, state.u_prev)
    return WaveState(u_next, state.u, state.t + mesh.dt, state.radiation)


def edge_energy(state: WaveState, mesh: Mesh) -> EnergyReport:
    """Per-arc energy ``int (u_t^2 + u_x^2) / 2``.

    ``u_t`` is the difference of the two stored levels; the gradient term
    pairs the cell slopes of both levels, which is the quantity leapfrog
    conserves exactly.  Vertex nodes contribute half a cell to each arc.
    """
    vel = (state.u - state.u_prev) / mesh.dt
    out = np.zeros(mesh.graph.m)
    for pos, idx in enumerate(mesh.arc_nodes):
        hj = mesh.h[pos]
        w = np.full(len(idx), hj)
        w[0] = w[-1] = hj / 2
        kin = 0.5 * np.sum(w * vel[idx] ** 2)
        pot = 0.5 * np.sum(np.diff(state.u[idx]) * np.diff(state.u_prev[idx])) / hj
        out[pos] = kin + pot
    return EnergyReport(state.t, out)


# -- modal projection ------------------------------------------------------------------


def sample_mode(mode: ModeCoefficients, mesh: Mesh) -> np.ndarray:
    """Mode values at mesh nodes; vertex values averaged over incident arc ends."""
    if mode.m != mesh.graph.m:
        raise MetricGraphError("GRAPH_MISMATCH", f"mode has {mode.m} arcs, mesh has {mesh.graph.m}")
    out = np.zeros(mesh.size)
    count = np.zeros(mesh.size)
    for pos, idx in enumerate(mesh.arc_nodes):
        vals = mode.evaluate(pos, mesh.arc_x(pos))
        out[idx[1:-1]] = vals[1:-1]
        for node, val in ((idx[0], vals[0]), (idx[-1], vals[-1])):
            out[node] += val
            count[node] += 1
    nv = len(mesh.vertex_index)
    out[:nv] /= np.maximum(count[:nv], 1)
    return out


def project_modes(u: np.ndarray, mesh: Mesh, pairs: list[Eigenpair]) -> np.ndarray:
    """Amplitudes ``a_q = <V^q, u>`` (trapezoid rule per arc), one per mode in ``pairs``."""
    if u.shape != (mesh.size,):
        raise MetricGraphError("GRAPH_MISMATCH", "field does not match the mesh")
    mu = mesh.mass * u
    return np.array([sample_mode(mode, mesh) @ mu for pair in pairs for mode in pair.modes])


def reconstruct(amplitudes, mesh: Mesh, pairs: list[Eigenpair]) -> np.ndarray:
    modes = [mode for pair in pairs for mode in pair.modes]
    return sum(a * sample_mode(mode, mesh) for a, mode in zip(amplitudes, modes))


def discrete_norm(u: np.ndarray, mesh: Mesh) -> float:
    return math.sqrt(float(np.sum(mesh.mass * u * u)))


# -- driver ------------------------------------------------------------------------------


@dataclass
class SimConfig:
    dx: float = 0.05
    cfl: float = 0.9
    t_end: float = 10.0
    snapshot_every: float | None = None
    energy_every: float | None = None
    initial: dict = field(default_factory=dict)
    boundaries: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {"dx", "cfl", "t_end", "snapshot_every", "energy_every", "initial", "boundaries"}
        unknown = set(data) - known
        if unknown:
            raise MetricGraphError("BAD_CONFIG", f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    def radiation(self) -> dict:
        """Vertex id -> epsilon for leaves tagged ``{"radiation": eps}``."""
        out = {}
        for key, tag in self.boundaries.items():
            if tag == "neumann":
                continue
            if isinstance(tag, dict) and "radiation" in tag:
                out[int(key)] = float(tag["radiation"])
            else:
                raise MetricGraphError("BAD_CONFIG", f"bad boundary tag {tag!r} at vertex {key}")
        return out


def initial_fields(mesh: Mesh, initial: dict) -> tuple[np.ndarray, np.ndarray]:
    """Initial displacement and velocity from a config record.

    ``{"type": "gaussian", "edge", "center", "width", "amplitude", "velocity"}``
    puts a Gaussian on one arc (zero elsewhere, including its end vertices)
    with a uniform initial velocity on the whole graph.
    ``{"type": "mode", "k", "amps", "velocity"}`` starts from a standing mode.
    """
    u0 = np.zeros(mesh.size)
    v0 = np.zeros(mesh.size)
    kind = initial.get("type", "gaussian") if initial else None
    if kind is None:
        return u0, v0
    if kind == "gaussian":
        g = mesh.graph
        try:
            pos = g.arc_position(int(initial["edge"]))
        except KeyError as exc:
            raise MetricGraphError("BAD_CONFIG", f"gaussian needs a valid edge: {exc}") from exc
        length = g.arcs[pos].length
        center = float(initial.get("center", length / 2))
        width = float(initial.get("width", length / 10))
        amp = float(initial.get("amplitude", 1.0))
        x = mesh.arc_x(pos)
        bump = amp * np.exp(-(((x - center) / width) ** 2))
        idx = mesh.arc_nodes[pos]
        u0[idx[1:-1]] = bump[1:-1]
        v0[:] = float(initial.get("velocity", 0.0))
    elif kind == "mode":
        mode = ModeCoefficients(float(initial["k"]), np.asarray(initial["amps"], dtype=float))
        u0 = sample_mode(mode, mesh)
        v0[:] = float(initial.get("velocity", 0.0))
    else:
        raise MetricGraphError("BAD_CONFIG", f"unknown initial condition {kind!r}")
    return u0, v0


@dataclass
class SimResult:
    mesh: Mesh
    energies: list[EnergyReport]
    state: WaveState
    snapshots: list[tuple[float, np.ndarray]] = field(default_factory=list)

    def arc_fields(self, u: np.ndarray) -> dict[int, list[float]]:
        return {a.id: u[idx].tolist() for a, idx in zip(self.mesh.graph.arcs, self.mesh.arc_nodes)}


def run(graph: MetricGraph, config: SimConfig, u0=None, v0=None, callback=None) -> SimResult:
    """Integrate to ``config.t_end``.

    The step is shrunk so that a whole number of steps lands on ``t_end``.
    Energies are recorded every ``energy_every`` (default ``t_end / 100``)
    and field snapshots every ``snapshot_every`` time units.  ``callback``
    (if given) is called with each recorded ``WaveState``.
    """
    if isinstance(config, dict):
        config = SimConfig.from_dict(config)
    mesh = discretize(graph, config.dx, config.cfl)
    if u0 is None or v0 is None:
        iu, iv = initial_fields(mesh, config.initial)
        u0 = iu if u0 is None else u0
        v0 = iv if v0 is None else v0
    radiation = config.radiation()
    if config.t_end < 0:
        raise MetricGraphError("BAD_CONFIG", "t_end must be nonnegative")
    if config.t_end == 0:
        state = WaveState(np.asarray(u0, float).copy(), np.asarray(u0, float).copy(), 0.0, radiation)
        return SimResult(mesh, [], state, [(0.0, state.u.copy())] if config.snapshot_every else [])

    nsteps = int(math.ceil(config.t_end / mesh.dt - 1e-9))
    mesh = mesh.with_dt(config.t_end / nsteps)
    state = initial_state(mesh, u0, v0, radiation)
    stepper = _Stepper(mesh, radiation)

    def cadence(every):
        return max(1, int(round(every / mesh.dt))) if every else None

    e_every = cadence(config.energy_every or config.t_end / 100)
    s_every = cadence(config.snapshot_every)
    energies: list[EnergyReport] = []
    snapshots = [(0.0, state.u.copy())] if s_every else []
    u, u_prev = state.u, state.u_prev
    for n in range(1, nsteps + 1):
        u, u_prev = stepper.advance(u, u_prev), u
        if n % e_every == 0 or n == nsteps:
            st = WaveState(u, u_prev, n * mesh.dt, radiation)
            energies.append(edge_energy(st, mesh))
            if callback is not None:
                callback(st)
        if s_every and n % s_every == 0:
            snapshots.append((n * mesh.dt, u.copy()))
    return SimResult(mesh, energies, WaveState(u, u_prev, nsteps * mesh.dt, radiation), snapshots)
