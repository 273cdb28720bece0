"""One-dimensional Maxwell solver in Gaussian units with a Poynting ledger.

Transverse fields ``E = E_y`` and ``B = B_z`` propagate along ``x``::

    dB/dt = -c dE/dx
    dE/dt = -c dB/dx - 4 pi J,      J = sigma E + J_src

with unit permeability (``H = B``).  Energy density is ``(E^2 + B^2) / 8 pi``
and the Poynting flux is ``S = c E B / 4 pi``.

Grid convention
---------------
``cells`` cells of width ``dx``.  ``E`` lives on the ``cells + 1`` nodes
``x_i = i dx``; ``B`` lives on the ``cells`` half nodes ``x_{i+1/2}``, so
``len(E) == len(B) + 1``.  In time, ``E`` is stored at ``t_n = n dt`` and
``B`` at ``t_{n-1/2}``.  The update is the usual leapfrog; Ohmic current is
centred as ``sigma (E^n + E^{n+1}) / 2``.

Ledger collocation
------------------
A region is an inclusive node interval ``[a, b]``.  At ``t_n`` the field
energy integrates ``E^2`` with trapezoid weights over nodes ``a..b`` and
``B^2`` over half nodes ``a+1/2..b-1/2`` with ``B`` averaged to ``t_n``.
Flux at face node ``b`` uses ``E`` averaged over the step and ``B`` averaged
over the two half nodes beside it.  With these rules the balance closes up
to ``(dx / 32 pi) sum (B^{n+1/2} - B^{n-1/2})^2``, a second-order term in
``dt``; the exactly conserved leapfrog energy is :func:`leapfrog_energy`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

FOUR_PI = 4.0 * math.pi
EIGHT_PI = 8.0 * math.pi
BOUNDARIES = ("reflecting", "absorbing", "periodic")
MIN_CELLS = 16


class GridError(ValueError):
    """Invalid grid configuration or region."""


class NumericalBlowupError(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"non-finite field or energy values at step {step}")
        self.step = step


@dataclass(frozen=True)
class AbsorberSpec:
    """Ohmic detector slab on ``[start, stop]`` (fractions of the domain).

    ``sigma(x) = sigma_max * ((x - start) / (stop - start)) ** grading``;
    ``grading = 0`` gives a uniform slab.
    """

    start: float = 0.75
    stop: float = 1.0
    sigma_max: float = 5.0
    grading: float = 2.0


@dataclass(frozen=True)
class PulseSpec:
    """Initial pulse ``amplitude * exp(-(x - center)^2 / (2 width^2)) * cos(k (x - center))``.

    ``k = 2 pi / wavelength``; ``wavelength = 0`` drops the carrier.  A pulse
    with a DC component leaves trapped magnetic flux behind in a closed box,
    so the default carries several cycles under the envelope.

    ``direction`` +1 launches the pulse rightward (``B = E``), -1 leftward,
    0 leaves ``B = 0`` so it splits.  ``shape = "bump"`` uses a compactly supported
    ``cos^2`` of half-width ``width`` instead of the Gaussian.
    """

    center: float = 0.3
    width: float = 0.05
    amplitude: float = 1.0
    wavelength: float = 0.1
    direction: int = 1
    shape: str = "gaussian"


@dataclass(frozen=True)
class SourceSpec:
    """Gaussian-in-time current ``J = amplitude exp(-((t - t0)/duration)^2)`` at one node."""

    position: float = 0.25
    amplitude: float = 1.0
    t0: float = 0.1
    duration: float = 0.03


@dataclass(frozen=True)
class GridConfig:
    cells: int = 800
    length: float = 1.0
    duration: float = 2.5
    courant: float = 0.5
    c: float = 1.0
    boundary: str = "reflecting"
    absorber: AbsorberSpec | None = field(default_factory=AbsorberSpec)
    pulse: PulseSpec | None = field(default_factory=PulseSpec)
    source: SourceSpec | None = None

    @property
    def dx(self) -> float:
        return self.length / self.cells

    @property
    def dt(self) -> float:
        return self.courant * self.dx / self.c

    def refined(self, factor: int = 2) -> "GridConfig":
        """Same physical setup with ``dx`` and ``dt`` divided by ``factor``."""
        return replace(self, cells=self.cells * factor)


@dataclass(frozen=True)
class Region:
    """Inclusive node interval ``[start, stop]``."""

    start: int
    stop: int

    @property
    def nodes(self) -> slice:
        return slice(self.start, self.stop + 1)


@dataclass(frozen=True)
class FieldGrid:
    E: np.ndarray
    B: np.ndarray
    sigma: np.ndarray
    dx: float
    dt: float
    c: float = 1.0
    boundary: str = "reflecting"
    time_index: int = 0
    source: Callable[[float], np.ndarray] | None = field(default=None, repr=False, compare=False)
    config: GridConfig | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.E.ndim != 1 or self.B.ndim != 1 or self.E.size != self.B.size + 1:
            raise GridError("expected len(E) == len(B) + 1")
        if self.sigma.shape != self.E.shape:
            raise GridError("sigma must live on the E nodes")
        if np.any(self.sigma < 0):
            raise GridError("conductivity must be non-negative")
        if self.boundary not in BOUNDARIES:
            raise GridError(f"unknown boundary {self.boundary!r}; expected one of {BOUNDARIES}")
        if not (self.dx > 0 and self.dt > 0 and self.c > 0):
            raise GridError("dx, dt and c must be positive")
        if self.courant > 1.0 + 1e-12:
            raise GridError(f"Courant number {self.courant!r} exceeds 1")

    @property
    def cells(self) -> int:
        return self.B.size

    @property
    def courant(self) -> float:
        return self.c * self.dt / self.dx

    @property
    def time(self) -> float:
        return self.time_index * self.dt

    @property
    def x_e(self) -> np.ndarray:
        return np.arange(self.E.size) * self.dx

    @property
    def x_b(self) -> np.ndarray:
        return (np.arange(self.B.size) + 0.5) * self.dx

    @property
    def full(self) -> Region:
        return Region(0, self.cells)

    @property
    def detector(self) -> np.ndarray:
        return self.sigma > 0

    def with_fields(self, E=None, B=None) -> "FieldGrid":
        return replace(
            self,
            E=self.E if E is None else np.asarray(E, dtype=float),
            B=self.B if B is None else np.asarray(B, dtype=float),
        )

    def scaled(self, factor: float) -> "FieldGrid":
        return replace(self, E=self.E * factor, B=self.B * factor)


def _pulse_profile(spec: PulseSpec, x: np.ndarray) -> np.ndarray:
    u = (x - spec.center) / spec.width
    if spec.shape == "gaussian":
        env = np.exp(-0.5 * u * u)
    elif spec.shape == "bump":
        env = np.where(np.abs(u) < 1.0, np.cos(0.5 * math.pi * u) ** 2, 0.0)
    else:
        raise GridError(f"unknown pulse shape {spec.shape!r}")
    if spec.wavelength > 0:
        env = env * np.cos(2.0 * math.pi * (x - spec.center) / spec.wavelength)
    return spec.amplitude * env


def sigma_profile(config: GridConfig) -> np.ndarray:
    x = np.arange(config.cells + 1) * config.dx / config.length
    sigma = np.zeros_like(x)
    ab = config.absorber
    if ab is None or ab.sigma_max == 0.0:
        return sigma
    if ab.sigma_max < 0:
        raise GridError("conductivity must be non-negative")
    if not 0.0 <= ab.start < ab.stop <= 1.0:
        raise GridError("absorber needs 0 <= start < stop <= 1")
    inside = (x >= ab.start) & (x <= ab.stop)
    u = (x[inside] - ab.start) / (ab.stop - ab.start)
    sigma[inside] = ab.sigma_max * (u**ab.grading if ab.grading > 0 else 1.0)
    return sigma


def _source_fn(config: GridConfig) -> Callable[[float], np.ndarray] | None:
    src = config.source
    if src is None:
        return None
    node = int(round(src.position * config.length / config.dx))
    if not 0 < node < config.cells:
        raise GridError("source must sit on an interior node")
    size = config.cells + 1

    def current(t: float) -> np.ndarray:
        j = np.zeros(size)
        j[node] = src.amplitude * math.exp(-(((t - src.t0) / src.duration) ** 2))
        return j

    return current


def init_grid(config: GridConfig = GridConfig()) -> FieldGrid:
    """Grid with the configured absorber, source and initial pulse installed."""
    if config.cells < MIN_CELLS:
        raise GridError(f"need at least {MIN_CELLS} cells, got {config.cells}")
    if not 0.0 < config.courant <= 1.0:
        raise GridError(f"Courant number must lie in (0, 1], got {config.courant!r}")
    if not (config.length > 0 and config.c > 0):
        raise GridError("length and c must be positive")
    if config.boundary not in BOUNDARIES:
        raise GridError(f"unknown boundary {config.boundary!r}; expected one of {BOUNDARIES}")
    n = config.cells
    E = np.zeros(n + 1)
    B = np.zeros(n)
    if config.pulse is not None:
        p = config.pulse
        if p.direction not in (-1, 0, 1):
            raise GridError("pulse direction must be -1, 0 or +1")
        if not p.width > 0:
            raise GridError("pulse width must be positive")
        x_e = np.arange(n + 1) * config.dx
        x_b = (np.arange(n) + 0.5) * config.dx
        E = _pulse_profile(p, x_e)
        # B is stored half a step behind E: a wave f(x - direction c t) at t = -dt/2
        shift = p.direction * config.c * config.dt / 2.0
        B = p.direction * _pulse_profile(p, x_b + shift)
        if config.boundary == "reflecting":
            E[0] = E[-1] = 0.0
        elif config.boundary == "periodic":
            E[-1] = E[0]
    return FieldGrid(
        E=E,
        B=B,
        sigma=sigma_profile(config),
        dx=config.dx,
        dt=config.dt,
        c=config.c,
        boundary=config.boundary,
        source=_source_fn(config),
        config=config,
    )


def _advance_b(grid: FieldGrid) -> np.ndarray:
    """``B^{n+1/2}`` from ``E^n`` and ``B^{n-1/2}``."""
    return grid.B - grid.courant * np.diff(grid.E)


def _source_current(grid: FieldGrid, t: float) -> np.ndarray:
    if grid.source is None:
        return np.zeros_like(grid.E)
    return grid.source(t)


def step(grid: FieldGrid) -> FieldGrid:
    """Advance ``grid`` by one leapfrog step."""
    r = grid.courant
    E = grid.E
    B_new = _advance_b(grid)
    j_src = _source_current(grid, (grid.time_index + 0.5) * grid.dt)
    beta = 2.0 * math.pi * grid.sigma * grid.dt
    curl = np.zeros_like(E)
    curl[1:-1] = B_new[1:] - B_new[:-1]
    if grid.boundary == "periodic":
        curl[0] = B_new[0] - B_new[-1]
    with np.errstate(over="ignore", invalid="ignore"):
        E_new = ((1.0 - beta) * E - r * curl - FOUR_PI * grid.dt * j_src) / (1.0 + beta)
    if grid.boundary == "reflecting":
        E_new[0] = E_new[-1] = 0.0
    elif grid.boundary == "periodic":
        E_new[-1] = E_new[0]
    else:
        # first-order Mur condition; exact at Courant number 1
        k = (r - 1.0) / (r + 1.0)
        E_new[0] = E[1] + k * (E_new[1] - E[0])
        E_new[-1] = E[-2] + k * (E_new[-2] - E[-1])
    if not (np.all(np.isfinite(E_new)) and np.all(np.isfinite(B_new))):
        raise NumericalBlowupError(grid.time_index + 1)
    return replace(grid, E=E_new, B=B_new, time_index=grid.time_index + 1)


def run(grid: FieldGrid, n_steps: int) -> FieldGrid:
    for _ in range(n_steps):
        grid = step(grid)
    return grid


def check_region(grid: FieldGrid, region: Region) -> Region:
    if not (0 <= region.start < region.stop <= grid.cells):
        raise GridError(
            f"region [{region.start}, {region.stop}] must be a non-empty node interval inside [0, {grid.cells}]"
        )
    return region


def _trapezoid(region: Region) -> np.ndarray:
    w = np.ones(region.stop - region.start + 1)
    w[0] = w[-1] = 0.5
    return w


def _b_at_integer_time(grid: FieldGrid) -> np.ndarray:
    return 0.5 * (grid.B + _advance_b(grid))


def field_energy(grid: FieldGrid, region: Region | None = None) -> float:
    """``(1/8 pi) int (E^2 + B^2) dx`` over ``region`` at ``t_n``."""
    region = check_region(grid, region or grid.full)
    b = _b_at_integer_time(grid)[region.start:region.stop]
    e = grid.E[region.nodes]
    return grid.dx / EIGHT_PI * (float(np.dot(_trapezoid(region), e * e)) + float(np.dot(b, b)))


def leapfrog_energy(grid: FieldGrid) -> float:
    """Whole-grid energy with ``B^2`` replaced by ``B^{n-1/2} B^{n+1/2}``.

    This is the quantity the leapfrog scheme conserves exactly in a lossless,
    source-free, closed domain.
    """
    region = grid.full
    e = grid.E
    bb = float(np.dot(grid.B, _advance_b(grid)))
    return grid.dx / EIGHT_PI * (float(np.dot(_trapezoid(region), e * e)) + bb)


def mech_power(grid: FieldGrid, region: Region | None = None) -> float:
    """``int J.E dx`` over ``region`` at ``t_n``, with ``J = sigma E + J_src``."""
    region = check_region(grid, region or grid.full)
    s = region.nodes
    e = grid.E[s]
    j = grid.sigma[s] * e + _source_current(grid, grid.time)[s]
    return grid.dx * float(np.dot(_trapezoid(region), j * e))


def _face_b(grid: FieldGrid, b: np.ndarray, node: int) -> float:
    """``B`` at an E node: mean of the neighbouring half nodes."""
    left = node - 1
    right = node
    if grid.boundary == "periodic":
        left %= grid.cells
        right %= grid.cells
    else:
        left = max(left, 0)
        right = min(right, grid.cells - 1)
    return 0.5 * (b[left] + b[right])


def _flux_out(grid: FieldGrid, e: np.ndarray, b: np.ndarray, region: Region) -> float:
    k = grid.c / FOUR_PI
    right = k * e[region.stop] * _face_b(grid, b, region.stop)
    left = k * e[region.start] * _face_b(grid, b, region.start)
    return right - left


def poynting_flux(grid: FieldGrid, region: Region | None = None) -> float:
    """Net outward ``(c/4 pi) E B`` through the two faces of ``region`` at ``t_n``."""
    region = check_region(grid, region or grid.full)
    return _flux_out(grid, grid.E, _b_at_integer_time(grid), region)


def face_flux(grid: FieldGrid, node: int) -> float:
    """``(c/4 pi) E B`` at a single node, positive in the +x direction."""
    if not 0 <= node <= grid.cells:
        raise GridError(f"face node {node} outside the grid")
    return grid.c / FOUR_PI * grid.E[node] * _face_b(grid, _b_at_integer_time(grid), node)


@dataclass(frozen=True)
class LedgerIncrement:
    d_field: float
    d_mech: float
    d_absorbed: float
    d_flux: float

    @property
    def residual(self) -> float:
        return self.d_field + self.d_mech + self.d_flux


def audit_step(grid: FieldGrid, region: Region | None = None) -> tuple[FieldGrid, LedgerIncrement]:
    """Advance one step and book the energy balance of ``region`` for it.

    ``d_mech`` and ``d_flux`` integrate over ``[t_n, t_{n+1}]`` with E
    averaged over the step; ``d_absorbed`` is the Ohmic part of ``d_mech``.
    """
    region = check_region(grid, region or grid.full)
    nxt = step(grid)
    s = region.nodes
    w = _trapezoid(region)
    with np.errstate(over="ignore", invalid="ignore"):
        e_mid = 0.5 * (grid.E + nxt.E)
        ohmic = grid.sigma * e_mid
        j_src = _source_current(grid, (grid.time_index + 0.5) * grid.dt)
        d_absorbed = grid.dt * grid.dx * float(np.dot(w, (ohmic * e_mid)[s]))
        d_source = grid.dt * grid.dx * float(np.dot(w, (j_src * e_mid)[s]))
        d_flux = grid.dt * _flux_out(grid, e_mid, nxt.B, region)
        d_field = field_energy(nxt, region) - field_energy(grid, region)
    inc = LedgerIncrement(d_field, d_absorbed + d_source, d_absorbed, d_flux)
    # finite fields can still overflow the quadratic ledger terms
    if not all(map(math.isfinite, (d_field, d_absorbed, d_source, d_flux))):
        raise NumericalBlowupError(nxt.time_index)
    return nxt, inc


@dataclass(frozen=True)
class EnergyLedger:
    """Per-step history of the energy balance of one region.

    ``mech_work``, ``absorbed`` and ``flux_integral`` accumulate from the
    start of the run; ``residual[k] = field_energy[k] - field_energy[0] +
    mech_work[k] + flux_integral[k]``.
    """

    region: Region
    time: np.ndarray
    field_energy: np.ndarray
    mech_work: np.ndarray
    absorbed: np.ndarray
    flux_integral: np.ndarray
    residual: np.ndarray

    @property
    def initial_energy(self) -> float:
        return float(self.field_energy[0])

    @property
    def final_residual(self) -> float:
        return float(self.residual[-1])

    @property
    def total_absorbed(self) -> float:
        return float(self.absorbed[-1])

    @property
    def relative_residual(self) -> float:
        scale = max(float(np.max(np.abs(self.field_energy))), float(np.max(np.abs(self.mech_work))))
        return abs(self.final_residual) / scale if scale > 0 else 0.0

    def rows(self):
        for k in range(self.time.size):
            yield {
                "step": k,
                "time": float(self.time[k]),
                "field_energy": float(self.field_energy[k]),
                "mech_work": float(self.mech_work[k]),
                "absorbed": float(self.absorbed[k]),
                "flux_integral": float(self.flux_integral[k]),
                "residual": float(self.residual[k]),
            }

    def summary(self) -> dict:
        return {
            "region": [self.region.start, self.region.stop],
            "steps": int(self.time.size - 1),
            "initial_field_energy": self.initial_energy,
            "final_field_energy": float(self.field_energy[-1]),
            "mech_work": float(self.mech_work[-1]),
            "absorbed": self.total_absorbed,
            "flux_integral": float(self.flux_integral[-1]),
            "residual": self.final_residual,
            "relative_residual": self.relative_residual,
        }


def run_ledger(grid: FieldGrid, n_steps: int, region: Region | None = None) -> tuple[FieldGrid, EnergyLedger]:
    """Step ``n_steps`` times, booking the balance of ``region`` at every step."""
    region = check_region(grid, region or grid.full)
    t = np.empty(n_steps + 1)
    fe = np.empty(n_steps + 1)
    incs = np.zeros((n_steps + 1, 3))
    t[0] = grid.time
    with np.errstate(over="ignore", invalid="ignore"):
        fe[0] = field_energy(grid, region)
    for k in range(1, n_steps + 1):
        grid, inc = audit_step(grid, region)
        t[k] = grid.time
        fe[k] = fe[k - 1] + inc.d_field
        incs[k] = (inc.d_mech, inc.d_absorbed, inc.d_flux)
    mech, absorbed, flux = np.cumsum(incs, axis=0).T
    residual = fe - fe[0] + mech + flux
    return grid, EnergyLedger(region, t, fe, mech, absorbed, flux, residual)


def steps_for(config: GridConfig, duration: float | None = None) -> int:
    """Number of steps covering ``duration`` (default: the configured one)."""
    duration = config.duration if duration is None else duration
    return int(math.ceil(duration / config.dt - 1e-9))
