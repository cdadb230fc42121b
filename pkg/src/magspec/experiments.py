"""Experiment orchestration: h-sweeps, expansion fits, lower-bound checks,
superlattice gap detection, and persistence.

Everything here is deterministic given a configuration and a seed; sweep
records are sorted by (h, j) before output so re-runs produce byte-identical
artifacts.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .discretize import Grid, assemble, magnetic_form, field_mass
from .eigensolve import smallest_eigenpairs
from .errors import ConfigError, DomainError, MagspecError
from .fieldgeom import FieldSetup, GaugePotential, Rectangle, gauge_from_field, well_data
from .quasimode import (QuasimodeSpec, build_leading_quasimode, clipped_cutoff,
                        residual)
from .wellmodel import WellData, gap_constant_ck, mu_jk2

__all__ = [
    "SweepConfig",
    "SweepRecord",
    "FitResult",
    "standard_well",
    "curved_well",
    "grid_size",
    "run_sweep",
    "fit_expansion",
    "montgomery_check",
    "MontgomeryReport",
    "TiledField",
    "GapReport",
    "detect_gaps",
    "run_gap_experiment",
    "write_records_csv",
    "write_records_json",
]


def standard_well() -> FieldSetup:
    """Unit-depth quadratic well in a flat metric: b = 1 + x^2 + y^2."""
    return FieldSetup("1 + x^2 + y^2", None, Rectangle(-2.0, 2.0, -2.0, 2.0))


def curved_well() -> FieldSetup:
    """Same intensity well on a conformal metric with unit curvature at 0."""
    return FieldSetup("1 + x^2 + y^2", "-(x^2 + y^2)/8",
                      Rectangle(-2.0, 2.0, -2.0, 2.0))


# ---------------------------------------------------------------------------
# sweep configuration and records

@dataclass(frozen=True)
class SweepConfig:
    b: str
    h_list: tuple
    phi: str = None
    domain: tuple = (-2.0, 2.0, -2.0, 2.0)
    m: int = 6
    tol: float = 1e-8
    grid_c: float = 0.5
    n_max: int = 1024
    n_fixed: int = None
    richardson: bool = True
    quasimode: bool = True
    seed: int = 0

    def __post_init__(self):
        hs = tuple(float(h) for h in self.h_list)
        if any(h <= 0 for h in hs):
            raise ConfigError("h_list entries must be positive")
        if any(a <= b for a, b in zip(hs, hs[1:])):
            raise ConfigError("h_list must be strictly descending")
        object.__setattr__(self, "h_list", hs)
        if self.m < 1:
            raise ConfigError("m must be at least 1")
        if self.grid_c <= 0 or self.n_max < 32:
            raise ConfigError("grid policy must satisfy c > 0, n_max >= 32")

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        try:
            fld = doc["field"]
            sw = doc.get("sweep", {})
            grid = sw.get("grid", {})
            return cls(
                b=fld["b"],
                phi=fld.get("phi"),
                domain=tuple(fld.get("domain", (-2.0, 2.0, -2.0, 2.0))),
                h_list=tuple(sw.get("h", (0.1, 0.08, 0.06, 0.05))),
                m=int(sw.get("m", 6)),
                tol=float(sw.get("tol", 1e-8)),
                grid_c=float(grid.get("c", 0.5)),
                n_max=int(grid.get("n_max", 1024)),
                n_fixed=grid.get("n"),
                richardson=bool(sw.get("richardson", True)),
                quasimode=bool(sw.get("quasimode", True)),
                seed=int(doc.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"invalid sweep configuration: {err}") from err


@dataclass
class SweepRecord:
    h: float
    j: int
    lambda_computed: float
    lambda_predicted: float
    solver_residual: float
    quasimode_residual: float
    n: int
    error: str = None

    def __post_init__(self):
        if self.error is None:
            for name in ("lambda_computed", "lambda_predicted", "solver_residual"):
                if not math.isfinite(getattr(self, name)):
                    raise DomainError(f"non-finite {name} in sweep record")


def grid_size(L: float, h: float, c: float = 0.5, n_max: int = 1024) -> int:
    """Grid-h coupling: n = ceil(L / (c*h^{5/4})), clamped to [32, n_max]."""
    n = int(math.ceil(L / (c * h ** 1.25)))
    return max(32, min(n, n_max))


def _sweep_grid(cfg: SweepConfig, dom: Rectangle, h: float) -> Grid:
    if cfg.n_fixed is not None:
        return Grid(dom, int(cfg.n_fixed), int(cfg.n_fixed))
    return Grid(dom, grid_size(dom.width, h, cfg.grid_c, cfg.n_max),
                grid_size(dom.height, h, cfg.grid_c, cfg.n_max))


def _failure(h, message):
    return SweepRecord(h=h, j=-1, lambda_computed=math.nan,
                       lambda_predicted=math.nan, solver_residual=math.nan,
                       quasimode_residual=math.nan, n=0, error=message)


def run_sweep(config: SweepConfig) -> list:
    """Solve the m smallest eigenvalues for each h and compare to the
    two-term prediction h*b0 + h^2 * mu_{j,0,2}.

    Richardson extrapolation over the (n, n/2) grid pair removes the leading
    second-order discretization error from lambda_computed.  A failure at one
    h produces a single failure record and does not abort the sweep.
    """
    records = []
    try:
        setup = FieldSetup(config.b, config.phi, Rectangle(*config.domain))
        well = well_data(setup)
        gauge = gauge_from_field(setup, x_anchor=well.x0[0])
    except MagspecError as err:
        return [_failure(math.nan, str(err))]

    for h in config.h_list:
        try:
            grid = _sweep_grid(config, setup.domain, h)
            op = assemble(setup, gauge, grid, h)
            res = smallest_eigenpairs(op, config.m, tol=config.tol, seed=config.seed)
            lam = res.eigenvalues
            if config.richardson and config.n_fixed is None:
                half = Grid(setup.domain, max(32, grid.nx // 2), max(32, grid.ny // 2))
                lam_half = smallest_eigenpairs(
                    assemble(setup, gauge, half, h), config.m,
                    tol=config.tol, seed=config.seed).eigenvalues
                lam = (4.0 * lam - lam_half) / 3.0
            qres = math.nan
            if config.quasimode:
                phi = build_leading_quasimode(
                    QuasimodeSpec(well, 0, 0, h,
                                  cutoff_radius=clipped_cutoff(well, h, setup.domain)),
                    grid, gauge, op_mass=op.M)
                qres = residual(op, phi, h * well.b0)
            for j in range(config.m):
                records.append(SweepRecord(
                    h=h, j=j,
                    lambda_computed=float(lam[j]),
                    lambda_predicted=h * well.b0 + h * h * mu_jk2(well, j, 0),
                    solver_residual=float(res.residuals[j]),
                    quasimode_residual=qres if j == 0 else math.nan,
                    n=grid.nx))
        except MagspecError as err:
            records.append(_failure(h, str(err)))
    records.sort(key=lambda r: (r.h, r.j))
    return records


# ---------------------------------------------------------------------------
# expansion fit

@dataclass(frozen=True)
class FitResult:
    c1: float
    c1_err: float
    c2: float
    c2_err: float
    c52: float
    c52_err: float
    residual_norm: float
    remainder_exponent: float


def fit_expansion(records, j: int = 0) -> FitResult:
    """Weighted least squares of lambda(h) against c1*h + c2*h^2 + c52*h^{5/2}.

    No h^{3/2} term appears in the model (the odd first-order coefficient of
    the eigenvalue expansion vanishes); the h^{5/2} term is a free nuisance
    absorbing the unresolved next order.  Weights h^{-2} equalize the relative
    influence of the sweep points.  The remainder exponent p is fitted from
    |lambda - c1*h - c2*h^2| ~ h^p.
    """
    pts = sorted({(r.h, r.lambda_computed) for r in records
                  if r.error is None and r.j == j})
    if len(pts) < 4:
        raise DomainError(f"need at least 4 distinct h values for level {j}, got {len(pts)}")
    hs = np.array([p[0] for p in pts])
    lam = np.array([p[1] for p in pts])
    A = np.column_stack([hs, hs ** 2, hs ** 2.5])
    w = 1.0 / hs
    coef, *_ = np.linalg.lstsq(A * w[:, None], lam * w, rcond=None)
    resid = lam - A @ coef
    dof = max(len(pts) - 3, 1)
    sigma2 = float(np.sum((resid * w) ** 2)) / dof
    cov = sigma2 * np.linalg.inv((A * w[:, None]).T @ (A * w[:, None]))
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    rem = np.abs(lam - coef[0] * hs - coef[1] * hs ** 2)
    mask = rem > 1e-13 * np.maximum(np.abs(lam), 1.0)
    if mask.sum() >= 2:
        p = float(np.polyfit(np.log(hs[mask]), np.log(rem[mask]), 1)[0])
    else:
        p = math.inf  # remainder at roundoff: the two-term model is exact
    return FitResult(c1=float(coef[0]), c1_err=float(err[0]),
                     c2=float(coef[1]), c2_err=float(err[1]),
                     c52=float(coef[2]), c52_err=float(err[2]),
                     residual_norm=float(np.linalg.norm(resid)),
                     remainder_exponent=p)


# ---------------------------------------------------------------------------
# quadratic-form lower bound

@dataclass(frozen=True)
class MontgomeryReport:
    ratios: tuple
    min_ratio: float
    h: float


def _random_bumps(grid: Grid, count: int, seed: int):
    rng = np.random.default_rng(seed)
    dom = grid.domain
    X, Y = grid.meshgrid()
    out = []
    for _ in range(count):
        cx = dom.x_min + dom.width * rng.uniform(0.3, 0.7)
        cy = dom.y_min + dom.height * rng.uniform(0.3, 0.7)
        s = min(dom.width, dom.height) * rng.uniform(0.03, 0.1)
        out.append(np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * s * s)).reshape(-1))
    return out


def montgomery_check(setup, grid: Grid, h: float, trials=None,
                     n_random: int = 20, seed: int = 0,
                     gauge: GaugePotential = None) -> MontgomeryReport:
    """Ratio magnetic_form(u) / (h * field_mass(u)) for each trial function.

    The continuous quadratic-form bound makes every ratio at least 1; on the
    grid it holds up to discretization slack (tests allow 2%).  Trials default
    to random Gaussian bumps; pass computed eigenvectors to probe the
    near-equality regime.
    """
    if gauge is None:
        gauge = gauge_from_field(setup)
    op = assemble(setup, gauge, grid, h)
    vecs = list(trials) if trials is not None else []
    vecs.extend(_random_bumps(grid, n_random, seed))
    ratios = []
    for u in vecs:
        denom = h * field_mass(setup, grid, u)
        if denom <= 0:
            raise DomainError("trial function has zero field mass")
        ratios.append(magnetic_form(op, u) / denom)
    return MontgomeryReport(ratios=tuple(ratios), min_ratio=min(ratios), h=h)


# ---------------------------------------------------------------------------
# superlattice tiling

class TiledField:
    """p x p periodic tiling of a single-well field on an enlarged rectangle.

    The base cell must be centered at the origin with a polynomial b and a
    constant phi; the tiled 2-form coefficient is B(x, y) = B(w(x), w(y)) with
    w the centered wrap into the cell.  The gauge integrals remain exact:
    a periodic primitive is assembled from the cell primitive and the
    whole-cell flux, so no quadrature crosses the (merely C^0) cell seams.
    """

    def __init__(self, base: FieldSetup, p: int = 3):
        if p < 1 or p % 2 == 0:
            raise DomainError("tiling order p must be a positive odd integer")
        cell = base.domain
        if abs(cell.x_min + cell.x_max) > 1e-12 or abs(cell.y_min + cell.y_max) > 1e-12:
            raise DomainError("tiling requires a cell centered at the origin")
        bpoly = ex.as_polynomial(base.b_expr)
        ppoly = ex.as_polynomial(base.phi_expr)
        phi_c = (ppoly.get((0, 0), 0.0)
                 if ppoly is not None and set(ppoly) <= {(0, 0)} else None)
        if bpoly is None or phi_c is None:
            raise DomainError("tiling requires polynomial b and constant phi")
        self.base = base
        self.p = p
        self.ax = cell.x_max
        self.ay = cell.y_max
        self.domain = Rectangle(p * cell.x_min, p * cell.x_max,
                                p * cell.y_min, p * cell.y_max)
        self._phi_c = phi_c
        scale = math.exp(2 * phi_c)
        self._Bpoly = {k: scale * v for k, v in bpoly.items()}
        # cell primitive G(x, y) = int_0^x B(s, y) ds and its y-primitive
        self._G = ex.poly_antiderivative(self._Bpoly, "x")
        self._Qg = ex.poly_antiderivative(self._G, "y")

    def _wrap_x(self, x):
        return np.mod(np.asarray(x, dtype=float) + self.ax, 2 * self.ax) - self.ax

    def _wrap_y(self, y):
        return np.mod(np.asarray(y, dtype=float) + self.ay, 2 * self.ay) - self.ay

    def b(self, x, y):
        wx, wy = self._wrap_x(x), self._wrap_y(y)
        return np.broadcast_to(ex.evaluate(self.base.b_expr, wx, wy), np.broadcast(wx, wy).shape)

    def phi(self, x, y):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, self._phi_c)

    def mass_weight(self, x, y):
        return np.exp(2 * self.phi(x, y))

    def B(self, x, y):
        return np.asarray(self.b(x, y), dtype=float) * self.mass_weight(x, y)

    def gauge(self) -> GaugePotential:
        """Exact A1 = 0 gauge for the tiled field, anchored at x = 0."""
        G, Qg = self._G, self._Qg
        ax, ay = self.ax, self.ay

        def a2(x, y):
            x = np.asarray(x, dtype=float)
            wx = self._wrap_x(x)
            nx = np.floor((x + ax) / (2 * ax))
            wy = self._wrap_y(y)
            flux = ex.poly_eval(G, ax, wy) - ex.poly_eval(G, -ax, wy)
            return flux * nx + ex.poly_eval(G, wx, wy)

        def edge_fn(xs, ys):
            xs = np.asarray(xs, dtype=float)[:, None]
            wx = self._wrap_x(xs)
            nx = np.floor((xs + ax) / (2 * ax))
            # y-primitive of A2(x, .) on the cell: Q(v) = nx*Qi(v) + Qg(wx, v)
            def Q(v):
                qi = ex.poly_eval(Qg, ax, v) - ex.poly_eval(Qg, -ax, v)
                return nx * qi + ex.poly_eval(Qg, wx, v)
            J = Q(np.array(ay)) - Q(np.array(-ay))  # whole-cell integral of A2 in y

            def prim(y):
                y = np.asarray(y, dtype=float)[None, :]
                return J * np.floor((y + ay) / (2 * ay)) + Q(self._wrap_y(y))
            return prim(ys[1:]) - prim(ys[:-1])

        return GaugePotential(x_anchor=0.0, a2=a2, _edge_fn=edge_fn, exact=True)


# ---------------------------------------------------------------------------
# gap detection

@dataclass(frozen=True)
class GapReport:
    window: tuple
    clusters: tuple  # ((lo, hi, center, width), ...)
    gaps: tuple      # ((lo, hi), ...)
    passed: bool
    message: str


def detect_gaps(eigenvalues, h: float, well: WellData, k: int = 0,
                N: int = 2) -> GapReport:
    """Cluster the spectrum inside the level-k window and report the gaps.

    Window: [(2k+1) h b0 + h^2 c_k, (2k+1) h b0 + h^2 C] with
    C = c_k + (2N+2) * 2 sqrt(d)/b0, covering at least N+1 ladder rungs.
    Clusters are maximal runs of eigenvalues separated by more than 5x the
    in-cluster spread (with a floor of 1% of the rung spacing); the report
    passes when at least N gaps each exceed 3x the widest adjacent cluster.
    """
    if N < 0:
        raise DomainError("N must be non-negative")
    inv = well.invariants
    ck = gap_constant_ck(well, k)
    spacing = 2.0 * math.sqrt(inv.d) / well.b0
    lo = (2 * k + 1) * h * well.b0 + h * h * ck
    hi = (2 * k + 1) * h * well.b0 + h * h * (ck + (2 * N + 2) * spacing)
    vals = np.sort(np.asarray(eigenvalues, dtype=float))
    floor = 0.01 * h * h * spacing
    # guard the edges by fractions of the rung spacing: a cluster sitting
    # exactly on an edge must be kept (lower) or dropped (upper) whole
    lo_eff = lo - 0.25 * h * h * spacing
    hi_eff = hi - 0.5 * h * h * spacing
    inside = vals[(vals >= lo_eff) & (vals <= hi_eff)]
    if N == 0:
        return GapReport(window=(lo, hi), clusters=(), gaps=(), passed=True,
                         message="N = 0: nothing to check")
    if inside.size == 0:
        raise DomainError("window empty -- decrease h or enlarge m")

    clusters = []
    start = 0
    for i in range(1, inside.size + 1):
        if i == inside.size:
            clusters.append(inside[start:i])
            break
        spread = inside[i - 1] - inside[start]
        if inside[i] - inside[i - 1] > 5 * max(spread, floor):
            clusters.append(inside[start:i])
            start = i
    summaries = tuple((float(c[0]), float(c[-1]),
                       float(c.mean()), float(c[-1] - c[0])) for c in clusters)
    gaps = tuple((summaries[i][1], summaries[i + 1][0])
                 for i in range(len(summaries) - 1))
    good = sum(1 for i, (glo, ghi) in enumerate(gaps)
               if ghi - glo >= 3 * max(summaries[i][3], summaries[i + 1][3]))
    passed = good >= N
    msg = (f"{len(summaries)} clusters, {good} dominating gaps (need {N})")
    return GapReport(window=(lo, hi), clusters=summaries, gaps=gaps,
                     passed=passed, message=msg)


def run_gap_experiment(base: FieldSetup = None, p: int = 3, h: float = 0.05,
                       k: int = 0, N: int = 2, n: int = 384, m: int = None,
                       tol: float = 1e-8, seed: int = 0) -> GapReport:
    """Assemble the p x p superlattice, solve, and run detect_gaps."""
    if base is None:
        base = standard_well()
    tiled = TiledField(base, p)
    well = well_data(base)
    grid = Grid(tiled.domain, n, n)
    op = assemble(tiled, tiled.gauge(), grid, h)
    if m is None:
        m = (2 * N + 3) * p * p + 10
    res = smallest_eigenpairs(op, m, tol=tol, seed=seed)
    return detect_gaps(res.eigenvalues, h, well, k=k, N=N)


# ---------------------------------------------------------------------------
# persistence

_CSV_COLUMNS = ["h", "j", "lambda_computed", "lambda_predicted",
                "solver_residual", "quasimode_residual", "n", "error"]


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return "" if x is None else str(x)


def write_records_csv(records, out) -> None:
    """Write sweep records as CSV (file path or writable text stream)."""
    own = isinstance(out, (str, bytes)) or hasattr(out, "__fspath__")
    fh = open(out, "w", newline="") if own else out
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for r in records:
            writer.writerow([_fmt(getattr(r, c)) for c in _CSV_COLUMNS])
    finally:
        if own:
            fh.close()


def write_records_json(records, out) -> None:
    """Write sweep records as a JSON array mirroring the CSV columns."""
    doc = [{c: getattr(r, c) for c in _CSV_COLUMNS} for r in records]
    own = isinstance(out, (str, bytes)) or hasattr(out, "__fspath__")
    fh = open(out, "w") if own else out
    try:
        json.dump(doc, fh, indent=2, allow_nan=True)
        fh.write("\n")
    finally:
        if own:
            fh.close()
