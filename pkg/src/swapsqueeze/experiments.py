"""Figure-level studies on top of the propagator and observables.

Time axes are dimensionless alpha*t throughout: dynamics are run with unit
coupling internally (beta rescaled to beta/alpha), so ``t_max`` and ``dt``
are always in units of 1/alpha.  The degenerate pure-perturbation case
alpha = 0 keeps raw time.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .algebra import ProductSpace, SpinQuantum, coherent_state_x, product_state
from .hamiltonian import ModelParams, build_ku_hamiltonian, build_swap_hamiltonian
from .observables import (
    LiftedSpin,
    SpinMoments,
    SqueezingReport,
    analyze_state,
    expectation,
    spin_moments,
    squeezing_ratio,
)
from .propagate import PropagatorConfig, Trajectory, evolve


class NoSqueezingFound(RuntimeError):
    """The squeezing ratio has no interior local minimum below 1 in the window."""


@dataclass
class DynamicsRun:
    """Sampled observables of one swap-model trajectory."""

    spin: SpinQuantum
    fieldspin: SpinQuantum
    params: ModelParams
    times: np.ndarray
    moments: list[SpinMoments] = field(repr=False)
    reports: list[SqueezingReport] = field(repr=False)
    max_norm_drift: float = 0.0
    max_energy_drift: float = 0.0
    energy_scale: float = 1.0
    max_conserved_drift: float = 0.0
    trajectory: Trajectory | None = field(default=None, repr=False)
    hamiltonian: object = field(default=None, repr=False)
    lifted: LiftedSpin | None = field(default=None, repr=False)
    prop_cfg: PropagatorConfig | None = None

    def _moment_col(self, i):
        return np.array([m.mean[i] for m in self.moments])

    @property
    def sx(self):
        return self._moment_col(0)

    @property
    def sy(self):
        return self._moment_col(1)

    @property
    def sz(self):
        return self._moment_col(2)

    def _report_col(self, name):
        return np.array([getattr(rep, name) for rep in self.reports])

    @property
    def theta_z(self):
        return self._report_col("theta_z")

    @property
    def delta_s_zbar(self):
        return self._report_col("delta_s_zbar")

    @property
    def r(self):
        return self._report_col("r")

    @property
    def xi2(self):
        return self._report_col("xi2")

    @property
    def entropy_field(self):
        return self._report_col("entropy_field")

    @property
    def schmidt_k(self):
        return self._report_col("schmidt_k")

    def drop_trajectory(self):
        self.trajectory = None
        self.hamiltonian = None


def run_dynamics(
    s: SpinQuantum,
    j: SpinQuantum,
    params: ModelParams,
    t_max: float,
    dt: float,
    prop: PropagatorConfig | None = None,
    keep_trajectory: bool = False,
) -> DynamicsRun:
    """Evolve the x (x) x-polarized product state and evaluate all observables.

    ``keep_trajectory`` retains the raw snapshots and the Hamiltonian so the
    squeezing minimum can later be refined off the sample grid.
    """
    space = ProductSpace(s, j)
    state0 = product_state(space, coherent_state_x(s), coherent_state_x(j))
    if params.alpha != 0.0:
        run_params = ModelParams(alpha=1.0, beta=params.beta / params.alpha)
    else:
        run_params = params
    h = build_swap_hamiltonian(space, run_params)
    cfg = replace(prop or PropagatorConfig(), dt=dt)
    traj = evolve(state0, h, t_max, cfg)

    lifted = LiftedSpin.for_space(space, "spin")
    lifted_field_z = LiftedSpin.for_space(space, "field").z
    conserved_op = lifted_field_z - lifted.z

    moments, reports, energies, conserved = [], [], [], []
    for st in traj.states:
        m = spin_moments(st, lifted)
        moments.append(m)
        reports.append(analyze_state(st, lifted, m))
        energies.append(expectation(st, h))
        conserved.append(expectation(st, conserved_op))
    energies = np.array(energies)
    conserved = np.array(conserved)
    run = DynamicsRun(
        spin=s,
        fieldspin=j,
        params=params,
        times=traj.times,
        moments=moments,
        reports=reports,
        max_norm_drift=float(traj.norm_drifts.max()),
        max_energy_drift=float(np.max(np.abs(energies - energies[0]))),
        energy_scale=float(max(np.max(np.abs(h).sum(axis=1)), 1e-300)),
        max_conserved_drift=float(np.max(np.abs(conserved - conserved[0]))),
        prop_cfg=cfg,
        lifted=lifted,
    )
    if keep_trajectory:
        run.trajectory = traj
        run.hamiltonian = h
    return run


class TStarResult(NamedTuple):
    t_star: float
    r_min: float


def _r_func_from_run(run: DynamicsRun) -> Callable[[float], float]:
    """Evaluate r(t) off the sample grid by re-propagating from the nearest
    earlier snapshot.  Requires the run to have kept its trajectory."""
    traj, h, lifted, cfg = run.trajectory, run.hamiltonian, run.lifted, run.prop_cfg
    if traj is None:
        raise ValueError("run was not created with keep_trajectory=True")

    def r_at(t: float) -> float:
        k = max(int(np.searchsorted(traj.times, t, side="right")) - 1, 0)
        st = traj.states[k]
        delta = t - traj.times[k]
        if delta > 0:
            # a sub-grid step from the nearest snapshot: Krylov beats a fresh
            # eigendecomposition by orders of magnitude here
            sub_cfg = replace(cfg, dt=delta, method="krylov")
            st = evolve(st, h, delta, sub_cfg).states[-1]
        return squeezing_ratio(st, lifted)

    return r_at


def find_t_star(times, r, r_func=None, rel_time_tol: float = 1e-4) -> TStarResult:
    """Time and value of the first interior local minimum of r(t) below 1.

    The minimum is located on the sample grid (strictly below both
    neighbors; plateaus of equal values count once, at their earliest
    time), then refined by golden-section search on the bracketing
    interval to the given relative time tolerance.  ``r_func`` supplies
    the off-grid evaluation; without it a local cubic interpolant of the
    series is searched instead.

    Raises NoSqueezingFound when no qualifying minimum exists.
    """
    times = np.asarray(times, dtype=float)
    r = np.asarray(r, dtype=float)
    n = len(times)
    i = 1
    while i < n - 1:
        if r[i] < r[i - 1]:
            jj = i
            while jj + 1 < n and r[jj + 1] == r[i]:
                jj += 1
            if jj < n - 1 and r[jj + 1] > r[i] and r[i] < 1.0:
                if jj > i:
                    # plateau of equal values: break ties at the earliest time
                    return TStarResult(float(times[i]), float(r[i]))
                return _refine_minimum(times, r, i, jj, r_func, rel_time_tol)
            i = jj + 1
        else:
            i += 1
    raise NoSqueezingFound(
        f"no interior local minimum of r below 1 in t <= {times[-1]} (min r = {_nanmin_or_nan(r)})"
    )


def _nanmin_or_nan(r):
    finite = r[np.isfinite(r)]
    return float(finite.min()) if finite.size else float("nan")


def find_global_min(times, r, r_func=None, rel_time_tol: float = 1e-4) -> TStarResult:
    """Time and value of the deepest minimum of r(t) below 1 in the window.

    Used for the maximum-attainable-squeezing sweeps, where the deepest dip
    rather than the first one is the quantity of interest.  Refined like
    ``find_t_star`` when the minimum is interior; a minimum sitting on the
    window edge is returned unrefined.
    """
    times = np.asarray(times, dtype=float)
    r = np.asarray(r, dtype=float)
    if not (_nanmin_or_nan(r) < 1.0):
        raise NoSqueezingFound(
            f"no r value below 1 in t <= {times[-1]} (min r = {_nanmin_or_nan(r)})"
        )
    i = int(np.nanargmin(r))
    if i == 0 or i == len(r) - 1:
        return TStarResult(float(times[i]), float(r[i]))
    return _refine_minimum(times, r, i, i, r_func, rel_time_tol)


def _refine_minimum(times, r, i_lo, i_hi, r_func, rel_time_tol) -> TStarResult:
    bracket = (times[i_lo - 1], times[i_lo], times[i_hi + 1])
    if r_func is None:
        lo = max(i_lo - 3, 0)
        hi = min(i_hi + 4, len(times))
        window_t, window_r = times[lo:hi], r[lo:hi]
        if not np.all(np.isfinite(window_r)):
            return TStarResult(float(times[i_lo]), float(r[i_lo]))
        spline = CubicSpline(window_t, window_r)
        r_func = lambda t: float(spline(t))
    try:
        res = minimize_scalar(r_func, bracket=bracket, method="golden",
                              options={"xtol": rel_time_tol})
    except ValueError:
        # bracket condition spoiled by re-evaluation noise; keep the grid point
        return TStarResult(float(times[i_lo]), float(r[i_lo]))
    if not bracket[0] <= res.x <= bracket[2]:
        return TStarResult(float(times[i_lo]), float(r[i_lo]))
    return TStarResult(float(res.x), float(res.fun))


class SweepRow(NamedTuple):
    param: float
    t_star: float
    r_min: float


@dataclass(frozen=True)
class SweepResult:
    """Sweep rows plus the log-log least-squares fit of the response."""

    rows: tuple[SweepRow, ...]
    slope: float
    slope_stderr: float
    intercept: float
    residuals: np.ndarray = field(repr=False)


class FitResult(NamedTuple):
    slope: float
    stderr: float
    intercept: float
    residuals: np.ndarray


def fit_loglog(x, y) -> FitResult:
    """Least-squares line through (ln x, ln y) with the slope's standard error."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    n = len(lx)
    if n < 2:
        raise ValueError("need at least two points to fit a slope")
    dx = lx - lx.mean()
    sxx = np.dot(dx, dx)
    if sxx == 0:
        raise ValueError("all x values identical")
    slope = np.dot(dx, ly) / sxx
    intercept = ly.mean() - slope * lx.mean()
    residuals = ly - (slope * lx + intercept)
    if n > 2:
        stderr = float(np.sqrt(np.dot(residuals, residuals) / (n - 2) / sxx))
    else:
        stderr = float("nan")
    return FitResult(float(slope), stderr, float(intercept), residuals)


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep over J (fixed or ratio-locked S) or over S."""

    variable: str  # 'J' or 'S'
    values: tuple[SpinQuantum, ...]
    t_max: float
    dt: float
    fixed: SpinQuantum | None = None
    ratio_j_over_s: Fraction | None = None
    params: ModelParams = ModelParams()

    def __post_init__(self):
        if self.variable not in ("J", "S"):
            raise ValueError(f"variable must be 'J' or 'S', got {self.variable!r}")
        if not self.values:
            raise ValueError("values must be nonempty")
        two = [v.two_s for v in self.values]
        if any(b <= a for a, b in zip(two, two[1:])):
            raise ValueError("values must be strictly increasing")
        if self.t_max <= 0:
            raise ValueError("t_max must be > 0")
        if (self.fixed is None) == (self.ratio_j_over_s is None):
            raise ValueError("exactly one of fixed or ratio_j_over_s must be given")
        for v in self.values:
            self.point_quanta(v)  # validate divisibility up front

    def point_quanta(self, value: SpinQuantum) -> tuple[SpinQuantum, SpinQuantum]:
        """(S, J) for one sweep point."""
        if self.fixed is not None:
            pair = (value, self.fixed) if self.variable == "S" else (self.fixed, value)
            return pair
        ratio = self.ratio_j_over_s
        if self.variable == "J":
            num = value.two_s * ratio.denominator
            if num % ratio.numerator:
                raise ValueError(f"two_j={value.two_s} not divisible by ratio {ratio}")
            return SpinQuantum(num // ratio.numerator), value
        num = value.two_s * ratio.numerator
        if num % ratio.denominator:
            raise ValueError(f"two_s={value.two_s} times ratio {ratio} is not an integer")
        return value, SpinQuantum(num // ratio.denominator)


def _sweep_point_job(args) -> TStarResult:
    two_s, two_j, params, t_max, dt, prop, rel_tol, minimum = args
    s, j = SpinQuantum(two_s), SpinQuantum(two_j)
    run = run_dynamics(s, j, params, t_max, dt, prop, keep_trajectory=True)
    locate = find_t_star if minimum == "first" else find_global_min
    try:
        return locate(run.times, run.r, _r_func_from_run(run), rel_tol)
    except NoSqueezingFound as exc:
        raise NoSqueezingFound(f"sweep point two_s={two_s}, two_j={two_j}: {exc}") from exc
    finally:
        run.drop_trajectory()


def _run_sweep(spec: SweepSpec, response, prop, workers, rel_time_tol, minimum) -> SweepResult:
    jobs = []
    for v in spec.values:
        s, j = spec.point_quanta(v)
        jobs.append((s.two_s, j.two_s, spec.params, spec.t_max, spec.dt, prop,
                     rel_time_tol, minimum))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_sweep_point_job, jobs))
    else:
        raw = [_sweep_point_job(job) for job in jobs]
    rows = tuple(
        SweepRow(v.s, row.t_star, row.r_min) for v, row in zip(spec.values, raw)
    )
    x = [row.param for row in rows]
    y = [row.t_star if response == "t_star" else row.r_min for row in rows]
    fit = fit_loglog(x, y)
    return SweepResult(rows=rows, slope=fit.slope, slope_stderr=fit.stderr,
                       intercept=fit.intercept, residuals=fit.residuals)


def sweep_t_star_vs_j(spec: SweepSpec, prop: PropagatorConfig | None = None,
                      workers: int = 1, rel_time_tol: float = 1e-4) -> SweepResult:
    """Sweep J and fit the log-log slope of the maximum-squeezing time t*.

    t* follows the first-interior-minimum reading of maximum squeezing.
    """
    if spec.variable != "J":
        raise ValueError("sweep_t_star_vs_j expects a spec sweeping 'J'")
    return _run_sweep(spec, "t_star", prop, workers, rel_time_tol, "first")


def sweep_rmin_vs_s(spec: SweepSpec, prop: PropagatorConfig | None = None,
                    workers: int = 1, rel_time_tol: float = 1e-4,
                    minimum: str = "global") -> SweepResult:
    """Sweep S and fit the log-log slope of the minimal squeezing ratio.

    Maximum attainable squeezing means the deepest dip of r(t), so the
    global minimum over the window is used by default; pass
    ``minimum='first'`` for the first-dip reading instead.
    """
    if spec.variable != "S":
        raise ValueError("sweep_rmin_vs_s expects a spec sweeping 'S'")
    if minimum not in ("global", "first"):
        raise ValueError(f"minimum must be 'global' or 'first', got {minimum!r}")
    return _run_sweep(spec, "r_min", prop, workers, rel_time_tol, minimum)


@dataclass
class PerturbationPoint:
    """Squeezing summary of one diagonal-coupling strength."""

    beta: float
    run: DynamicsRun
    t_star: float
    r_min: float
    squeezing_found: bool


def perturbation_study(
    s: SpinQuantum,
    j: SpinQuantum,
    alpha: float,
    beta_list,
    t_max: float,
    dt: float,
    prop: PropagatorConfig | None = None,
    rel_time_tol: float = 1e-4,
) -> list[PerturbationPoint]:
    """r(t) dynamics and squeezing minima for each diagonal strength beta."""
    points = []
    for beta in beta_list:
        run = run_dynamics(s, j, ModelParams(alpha=alpha, beta=beta), t_max, dt,
                           prop, keep_trajectory=True)
        try:
            res = find_t_star(run.times, run.r, _r_func_from_run(run), rel_time_tol)
            point = PerturbationPoint(beta, run, res.t_star, res.r_min, True)
        except NoSqueezingFound:
            point = PerturbationPoint(beta, run, float("nan"), float("nan"), False)
        run.drop_trajectory()
        points.append(point)
    return points


@dataclass
class KuComparison:
    """Aligned spin expectation traces of the swap and one-axis-twisting models."""

    times: np.ndarray
    swap_sx: np.ndarray
    swap_sy: np.ndarray
    swap_sz: np.ndarray
    ku_sx: np.ndarray
    ku_sy: np.ndarray
    ku_sz: np.ndarray
    ku_sx_analytic: np.ndarray


def ku_comparison(
    s: SpinQuantum,
    j: SpinQuantum,
    alpha: float,
    t_max: float,
    dt: float,
    prop: PropagatorConfig | None = None,
) -> KuComparison:
    """Run the swap model and the Sz^2 benchmark from the same initial spin state.

    The benchmark acts on the spin factor alone; its <Sx> trace has the
    closed form S cos^{2S-1}(alpha t), returned alongside for checking.
    """
    cfg = replace(prop or PropagatorConfig(), dt=dt)

    swap_run = run_dynamics(s, j, ModelParams(alpha=alpha), t_max, dt, prop)

    ku_space = ProductSpace(s, SpinQuantum(0))
    ku_state0 = product_state(ku_space, coherent_state_x(s), np.array([1.0]))
    h_ku = ku_space.lift_spin(build_ku_hamiltonian(s, 1.0))
    ku_traj = evolve(ku_state0, h_ku, t_max, cfg)
    ku_lifted = LiftedSpin.for_space(ku_space, "spin")
    ku_means = np.array([spin_moments(st, ku_lifted).mean for st in ku_traj.states])

    times = swap_run.times
    analytic = s.s * np.cos(times) ** max(s.two_s - 1, 0)
    return KuComparison(
        times=times,
        swap_sx=swap_run.sx,
        swap_sy=swap_run.sy,
        swap_sz=swap_run.sz,
        ku_sx=ku_means[:, 0],
        ku_sy=ku_means[:, 1],
        ku_sz=ku_means[:, 2],
        ku_sx_analytic=analytic,
    )
