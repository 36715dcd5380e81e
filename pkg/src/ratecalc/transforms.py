"""Transforms between rate functions of super-Poincare (SP), weak
log-Sobolev (WL) and super log-Sobolev (SL) inequalities.

The two kernels are infimum transforms over a trade-off radius r > 0:

    xi1(t) = inf { r / (1 - t*beta_SP(r)) : 1 - t*beta_SP(r) > 0 }
    xi2(t) = inf { r / (t - beta_SL(r))   : t - beta_SL(r) > 0 }

with an empty feasible set reported as Undefined.  The four maps
between rate functions are

    wl_from_sp: beta_WL(s) = C1 * inf{ sup_{n0<=n<=k} n*xi1(delta^(-n+1))
                                       : k >= n0, C2*k*delta^-k <= s }
    sp_from_wl: beta_SP(s) = C3 * inf{ delta^k : k >= n0,
                                       sup_{n>=k} beta_WL(delta^-n n^-theta)/n <= s }
    sl_from_sp: beta_SL(s) = log(delta) * (1 + N0(s)),
                N0(s) = sup{ n >= n0 : C4*n*xi1(delta^(-n+1)) > s }
    sp_from_sl: beta_SP(s) = C5 * inf{ delta^k : k >= n0,
                                       xi2(k*log delta) <= C6*s }

sp_from_wl requires the vanishing condition
lim_n beta_WL(delta^-n n^-theta)/n = 0 and sl_from_sp requires
lim_n n*xi1(delta^(-n+1)) = 0; both are checked empirically on a finite
index window before the maps are applied.

Everything here is pure and deterministic: identical configuration
produces bit-identical output tables.  Kernel evaluation works with
log(t) and log(beta) internally so that arguments far beyond the
double-precision underflow threshold remain exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import (
    CapError,
    ConditionFailedError,
    ConfigError,
    DegenerateTransformError,
    MathDomainError,
)
from .ratefn import ExtendedValue, RateFunction, Tabulated, _running_max_from_right

__all__ = [
    "GridSpec",
    "TransformConfig",
    "ConditionVerdict",
    "xi1",
    "xi2",
    "check_vanishing",
    "n_zero",
    "wl_from_sp",
    "sp_from_wl",
    "sl_from_sp",
    "sp_from_sl",
    "sp2sl_condition",
    "wl2sp_condition",
    "log_grid",
]

# Kernel values at arguments within this factor of the feasibility edge
# blow up by unbounded constants; the auto-detected start index n0 skips
# them (any n0 >= 2 is a valid choice of the maps' free start index).
_EDGE_FRACTION = 0.125

# Refinement pass around the grid argmin uses a 10x denser local grid.
_REFINE_POINTS = 21

# Grid extension budget when the minimiser falls outside the base grid.
_R_ABS_MIN = 1e-280
_R_ABS_MAX = 1e280
_EXT_DECADES = 22.0

# Largest exponent x so that exp(x) stays inside double range.
_EXP_CAP = 700.0

HOLDS = "holds_empirically"
FAILS = "fails_empirically"
INCONCLUSIVE = "inconclusive"


def log_grid(lo: float, hi: float, count: int) -> np.ndarray:
    """Log-spaced grid with exact endpoints."""
    if not (0 < lo < hi) or count < 2:
        raise ConfigError("log grid needs 0 < lo < hi and count >= 2")
    return np.geomspace(lo, hi, int(count))


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced search grid for the kernel infimum over r."""

    r_min: float = 1e-8
    r_max: float = 1e8
    count: int = 600

    def __post_init__(self):
        if not (self.r_min > 0 and self.r_min < self.r_max):
            raise ConfigError("grid requires 0 < r_min < r_max")
        if self.count < 100:
            raise ConfigError("grid count must be at least 100")

    def points(self) -> np.ndarray:
        return np.geomspace(self.r_min, self.r_max, self.count)

    @property
    def step_ratio(self) -> float:
        return (self.r_max / self.r_min) ** (1.0 / (self.count - 1))

    def to_json_dict(self) -> dict:
        return {"r_min": self.r_min, "r_max": self.r_max, "count": self.count}

    @classmethod
    def from_json_dict(cls, d: dict) -> "GridSpec":
        return cls(
            r_min=float(d.get("r_min", 1e-8)),
            r_max=float(d.get("r_max", 1e8)),
            count=int(d.get("count", 600)),
        )


@dataclass(frozen=True)
class TransformConfig:
    """Free constants of the rate-function maps plus numeric grid settings.

    The maps hold for arbitrary positive constants C1..C6, any
    delta > 2 and any start index n0 >= 2, so all of them default to 1
    (delta to 4) and are exposed here.  n0 = None auto-detects the
    smallest usable kernel index; s0 = None disables clamping (the
    formula is evaluated on the whole caller grid).
    """

    delta: float = 4.0
    n0: Optional[int] = None
    s0: Optional[float] = None
    C1: float = 1.0
    C2: float = 1.0
    C3: float = 1.0
    C4: float = 1.0
    C5: float = 1.0
    C6: float = 1.0
    theta_cond: float = 1.0
    r_grid: GridSpec = field(default_factory=GridSpec)
    k_max: int = 400
    N_max: int = 400
    slope_tol: float = 0.1

    def __post_init__(self):
        if not (self.delta > 2.0):
            raise ConfigError("delta must exceed 2")
        if self.n0 is not None and self.n0 < 2:
            raise ConfigError("n0 must be at least 2")
        if self.s0 is not None and not (self.s0 > 0):
            raise ConfigError("s0 must be positive")
        for name in ("C1", "C2", "C3", "C4", "C5", "C6"):
            if not (getattr(self, name) > 0):
                raise ConfigError(f"{name} must be positive")
        if not (self.theta_cond > 0):
            raise ConfigError("theta_cond must be positive")
        if self.k_max < 2 or self.N_max < 2:
            raise ConfigError("k_max and N_max must be at least 2")
        if not (self.slope_tol > 0):
            raise ConfigError("slope_tol must be positive")

    def to_json_dict(self) -> dict:
        return {
            "delta": self.delta,
            "n0": self.n0,
            "s0": self.s0,
            "C1": self.C1,
            "C2": self.C2,
            "C3": self.C3,
            "C4": self.C4,
            "C5": self.C5,
            "C6": self.C6,
            "theta_cond": self.theta_cond,
            "r_grid": self.r_grid.to_json_dict(),
            "k_max": self.k_max,
            "N_max": self.N_max,
            "slope_tol": self.slope_tol,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TransformConfig":
        kwargs = dict(d)
        grid = kwargs.pop("r_grid", None)
        if grid is not None:
            kwargs["r_grid"] = GridSpec.from_json_dict(grid)
        if kwargs.get("n0") is not None:
            kwargs["n0"] = int(kwargs["n0"])
        for key in ("k_max", "N_max"):
            if key in kwargs:
                kwargs[key] = int(kwargs[key])
        known = set(cls.__dataclass_fields__)
        unknown = set(kwargs) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"malformed transform config: {exc}")


@dataclass(frozen=True)
class ConditionVerdict:
    """Empirical verdict for a vanishing side condition.

    ``holds_empirically`` requires a finite tail that decays decisively
    (final value well below the start and a negative log-log trend);
    ``fails_empirically`` flags non-decreasing or flat tails and any
    infinite or Undefined entry.
    """

    status: str
    sequence_tail: tuple
    trend_slope: float

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    @property
    def fails(self) -> bool:
        return self.status == FAILS

    def to_json_dict(self) -> dict:
        return {
            "status": self.status,
            "trend_slope": self.trend_slope,
            "sequence_tail": [[int(n), v] for n, v in self.sequence_tail],
        }


# ---------------------------------------------------------------------------
# Kernel evaluation
# ---------------------------------------------------------------------------


def _grid_pass(
    beta: RateFunction,
    log_ts: np.ndarray,
    r: np.ndarray,
    kind: str,
) -> tuple[np.ndarray, np.ndarray]:
    """Masked kernel values over one r-grid for a block of t's.

    Returns (min value per row, argmin index per row); rows with no
    feasible grid point get +inf / -1.
    """
    log_b = beta.log_eval_many(r)
    if kind == "xi1":
        # denominator 1 - t*beta(r) = -expm1(log t + log beta)
        u = log_ts[:, None] + log_b[None, :]
        with np.errstate(over="ignore", invalid="ignore"):
            denom = -np.expm1(u)
            vals = np.where(u < 0.0, r[None, :] / denom, np.inf)
    else:
        # denominator t - beta(r) = t * (-expm1(log beta - log t));
        # value r/(t - beta) = exp(log r - log t) / (-expm1(...))
        v = log_b[None, :] - log_ts[:, None]
        with np.errstate(over="ignore", invalid="ignore"):
            denom = -np.expm1(v)
            scaled = np.exp(np.log(r)[None, :] - log_ts[:, None])
            vals = np.where(v < 0.0, scaled / denom, np.inf)
    vals = np.where(np.isnan(vals), np.inf, vals)
    best = vals.min(axis=1)
    idx = np.where(np.isfinite(best), vals.argmin(axis=1), -1)
    return best, idx


def _refine_rows(
    beta: RateFunction,
    log_ts: np.ndarray,
    centers: np.ndarray,
    ratio: float,
    kind: str,
) -> np.ndarray:
    """One 10x-denser local pass around per-row argmins."""
    steps = np.linspace(-1.0, 1.0, _REFINE_POINTS)
    local = centers[:, None] * ratio ** steps[None, :]
    flat = local.ravel()
    log_b = beta.log_eval_many(flat).reshape(local.shape)
    if kind == "xi1":
        u = log_ts[:, None] + log_b
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.where(u < 0.0, local / (-np.expm1(u)), np.inf)
    else:
        v = log_b - log_ts[:, None]
        with np.errstate(over="ignore", invalid="ignore"):
            scaled = np.exp(np.log(local) - log_ts[:, None])
            vals = np.where(v < 0.0, scaled / (-np.expm1(v)), np.inf)
    vals = np.where(np.isnan(vals), np.inf, vals)
    return vals.min(axis=1)


def _kernel_min(beta: RateFunction, log_ts: np.ndarray, cfg: TransformConfig, kind: str) -> np.ndarray:
    """Kernel values for a vector of log(t); NaN marks Undefined.

    The infimum is taken over the configured log-spaced r-grid with one
    local refinement pass.  Emptiness of the feasible set and the
    vanishing infimum at r -> 0 are decided analytically from the tail
    limits of beta, so neither is a grid artifact.  When the grid argmin
    lands on a boundary the grid is extended in that direction (same
    density) before refining.
    """
    log_ts = np.asarray(log_ts, dtype=float)
    out = np.full(log_ts.shape, np.nan)
    log_b0 = beta.log_limit_at_zero()
    log_binf = beta.log_limit_at_inf()

    if kind == "xi1":
        defined = log_ts + log_binf < 0.0 if math.isfinite(log_binf) else (
            np.ones_like(log_ts, dtype=bool) if log_binf == -math.inf else np.zeros_like(log_ts, dtype=bool)
        )
        zero = log_ts + log_b0 < 0.0 if math.isfinite(log_b0) else np.zeros_like(log_ts, dtype=bool)
    else:
        defined = log_ts > log_binf
        zero = log_ts > log_b0 if math.isfinite(log_b0) else np.zeros_like(log_ts, dtype=bool)
    zero = zero & defined

    out[zero] = 0.0
    todo = defined & ~zero
    if not np.any(todo):
        return out

    idx_todo = np.flatnonzero(todo)
    lts = log_ts[idx_todo]
    base = cfg.r_grid.points()
    ratio = cfg.r_grid.step_ratio
    per_decade = (cfg.r_grid.count - 1) / math.log10(cfg.r_grid.r_max / cfg.r_grid.r_min)

    best = np.full(lts.shape, np.inf)
    center = np.full(lts.shape, np.nan)

    def sweep(rows: np.ndarray, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        vals, argm = _grid_pass(beta, lts[rows], grid, kind)
        improved = vals < best[rows]
        best[rows[improved]] = vals[improved]
        center[rows[improved]] = grid[np.maximum(argm[improved], 0)]
        return vals, argm

    vals, argm = sweep(np.arange(lts.size), base)
    feasible = np.isfinite(vals)
    left_rows = np.flatnonzero((argm == 0) & feasible)
    right_rows = np.flatnonzero(((argm == base.size - 1) & feasible) | ~feasible)

    # Minimiser at (or feasibility beyond) a grid edge: extend in that
    # direction with the same per-decade density until the argmin moves
    # inside or the absolute budget runs out.
    lo_edge = cfg.r_grid.r_min
    while left_rows.size and lo_edge > _R_ABS_MIN:
        new_lo = max(lo_edge * 10.0 ** (-_EXT_DECADES), _R_ABS_MIN)
        count = max(int(math.ceil(math.log10(lo_edge / new_lo) * per_decade)) + 1, 8)
        grid = np.geomspace(new_lo, lo_edge, count)
        vals, argm = sweep(left_rows, grid)
        left_rows = left_rows[(argm == 0) & np.isfinite(vals)]
        lo_edge = new_lo

    hi_edge = cfg.r_grid.r_max
    while right_rows.size and hi_edge < _R_ABS_MAX:
        new_hi = min(hi_edge * 10.0 ** _EXT_DECADES, _R_ABS_MAX)
        count = max(int(math.ceil(math.log10(new_hi / hi_edge) * per_decade)) + 1, 8)
        grid = np.geomspace(hi_edge, new_hi, count)
        vals, argm = sweep(right_rows, grid)
        feasible = np.isfinite(vals)
        still_infeasible = ~feasible & ~np.isfinite(best[right_rows])
        right_rows = right_rows[((argm == grid.size - 1) & feasible) | still_infeasible]
        hi_edge = new_hi

    if np.any(~np.isfinite(best)):
        # Feasibility was certified analytically, so this can only mean
        # the extension budget ran out before reaching the feasible set.
        raise CapError("kernel feasible set lies beyond the grid extension budget")

    refined = _refine_rows(beta, lts, center, ratio, kind)
    out[idx_todo] = np.minimum(best, refined)
    return out


def _as_log_t(t: float) -> float:
    if not (isinstance(t, (int, float)) and math.isfinite(t) and t > 0):
        raise MathDomainError(f"kernel argument t must be positive, got {t!r}")
    return math.log(float(t))


def xi1(beta_sp: RateFunction, t: float, cfg: Optional[TransformConfig] = None) -> ExtendedValue:
    """Infimum of r / (1 - t*beta_SP(r)) over the feasible r > 0."""
    cfg = cfg or TransformConfig()
    val = _kernel_min(beta_sp, np.array([_as_log_t(t)]), cfg, "xi1")[0]
    return ExtendedValue.undefined() if math.isnan(val) else ExtendedValue.finite(val)


def xi2(beta_sl: RateFunction, t: float, cfg: Optional[TransformConfig] = None) -> ExtendedValue:
    """Infimum of r / (t - beta_SL(r)) over the feasible r > 0."""
    cfg = cfg or TransformConfig()
    val = _kernel_min(beta_sl, np.array([_as_log_t(t)]), cfg, "xi2")[0]
    return ExtendedValue.undefined() if math.isnan(val) else ExtendedValue.finite(val)


def _xi1_chunked(beta: RateFunction, log_ts: np.ndarray, cfg: TransformConfig) -> np.ndarray:
    out = np.empty(log_ts.shape)
    block = 4096
    for i in range(0, log_ts.size, block):
        out[i : i + block] = _kernel_min(beta, log_ts[i : i + block], cfg, "xi1")
    return out


# ---------------------------------------------------------------------------
# Start-index detection
# ---------------------------------------------------------------------------


def _auto_n0_xi1(beta_sp: RateFunction, cfg: TransformConfig) -> int:
    """Smallest usable index for the xi1(delta^(-n+1)) sequence.

    Indices whose argument sits within _EDGE_FRACTION of the
    infeasibility edge t = 1/lim_inf(beta) are skipped: there the kernel
    is finite but inflated by an unbounded constant, which would poison
    the running supremum.  Any n0 >= 2 is a valid start index.
    """
    log_binf = beta_sp.log_limit_at_inf()
    if log_binf == -math.inf:
        return 2
    # need -(n-1)*log(delta) + log_binf <= log(_EDGE_FRACTION)
    need = (log_binf - math.log(_EDGE_FRACTION)) / math.log(cfg.delta) + 1.0
    n0 = max(2, int(math.ceil(need - 1e-12)))
    if n0 > cfg.k_max:
        raise CapError("auto-detected n0 exceeds k_max; increase k_max or set n0")
    return n0


def _auto_n0_xi2(beta_sl: RateFunction, cfg: TransformConfig) -> int:
    """Smallest k >= 2 with xi2(k*log delta) defined."""
    log_binf = beta_sl.log_limit_at_inf()
    ld = math.log(cfg.delta)
    if log_binf == -math.inf:
        return 2
    binf = math.exp(log_binf)
    k0 = max(2, int(math.floor(binf / ld)) + 1)
    if k0 > cfg.k_max:
        raise CapError("auto-detected n0 exceeds k_max; increase k_max or set n0")
    return k0


# ---------------------------------------------------------------------------
# Vanishing-condition checks
# ---------------------------------------------------------------------------


def _seq_to_arrays(seq) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(seq, Mapping):
        ns = np.array(sorted(seq), dtype=int)
        vals = np.empty(ns.shape)
        for i, n in enumerate(ns):
            ev = seq[int(n)]
            if ev.is_undefined:
                vals[i] = np.nan
            elif ev.is_pos_inf:
                vals[i] = np.inf
            else:
                vals[i] = ev.value
        return ns, vals
    ns, vals = seq
    return np.asarray(ns, dtype=int), np.asarray(vals, dtype=float)


def check_vanishing(seq, cfg: TransformConfig) -> ConditionVerdict:
    """Empirical verdict on whether an indexed sequence vanishes.

    Decision rules, in order:

    1. any Undefined or +inf entry: fails;
    2. the last quarter is (numerically) all zero: holds;
    3. the last half never decreases: fails;
    4. the log-log trend slope over the last half is above -slope_tol
       (the tail is too flat to vanish): fails;
    5. final value below half the starting value: holds, else
       inconclusive.
    """
    ns, vals = _seq_to_arrays(seq)
    if ns.size < 4:
        raise ConfigError("vanishing check needs at least 4 sequence values")
    n0 = int(ns[0])
    if int(ns[-1]) < 2 * n0:
        raise ConfigError("N_max must be at least twice n0 for the vanishing check")

    q_len = int(math.ceil(ns.size / 4))
    h_len = int(math.ceil(ns.size / 2))
    tail_idx = np.arange(ns.size - q_len, ns.size)
    half_idx = np.arange(ns.size - h_len, ns.size)

    def tail_pairs() -> tuple:
        pick = tail_idx if tail_idx.size <= 64 else tail_idx[
            np.linspace(0, tail_idx.size - 1, 64).astype(int)
        ]
        return tuple((int(ns[i]), float(vals[i])) for i in pick)

    half_n = ns[half_idx].astype(float)
    half_v = vals[half_idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_v = np.log(np.maximum(np.where(np.isfinite(half_v), half_v, np.nan), 1e-300))
    if np.all(np.isfinite(log_v)) and half_n.size >= 2:
        A = np.column_stack([np.log(half_n), np.ones_like(half_n)])
        coef, _, _, _ = np.linalg.lstsq(A, log_v, rcond=None)
        slope = float(coef[0])
    else:
        slope = math.nan

    if np.any(np.isnan(vals)) or np.any(np.isinf(vals)):
        return ConditionVerdict(FAILS, tail_pairs(), slope)

    v0 = float(vals[0])
    zero_tol = 1e-12 * (1.0 + abs(v0))
    if np.all(vals[tail_idx] <= zero_tol):
        return ConditionVerdict(HOLDS, tail_pairs(), slope)

    diffs = np.diff(vals[half_idx])
    never_decreases = np.all(diffs >= -1e-9 * np.abs(vals[half_idx][:-1]))
    if never_decreases:
        return ConditionVerdict(FAILS, tail_pairs(), slope)

    if not (slope < -cfg.slope_tol):
        return ConditionVerdict(FAILS, tail_pairs(), slope)

    if float(vals[-1]) < 0.5 * v0:
        return ConditionVerdict(HOLDS, tail_pairs(), slope)
    return ConditionVerdict(INCONCLUSIVE, tail_pairs(), slope)


def _sp_kernel_sequence(
    beta_sp: RateFunction, cfg: TransformConfig, n0: int, n_hi: int
) -> tuple[np.ndarray, np.ndarray]:
    """(n, n*xi1(delta^(-n+1))) for n in [n0, n_hi]; NaN = Undefined."""
    ns = np.arange(n0, n_hi + 1)
    log_ts = -(ns - 1) * math.log(cfg.delta)
    vals = _xi1_chunked(beta_sp, log_ts, cfg)
    return ns, ns * vals


def sp2sl_condition(beta_sp: RateFunction, cfg: Optional[TransformConfig] = None) -> ConditionVerdict:
    """Check lim_n n*xi1(delta^(-n+1)) = 0 on the configured window."""
    cfg = cfg or TransformConfig()
    n0 = cfg.n0 if cfg.n0 is not None else _auto_n0_xi1(beta_sp, cfg)
    ns, seq = _sp_kernel_sequence(beta_sp, cfg, n0, cfg.N_max)
    return check_vanishing((ns, seq), cfg)


def _wl_condition_sequence(
    beta_wl: RateFunction, cfg: TransformConfig, n0: int
) -> tuple[np.ndarray, np.ndarray]:
    ns = np.arange(n0, cfg.N_max + 1)
    exponents = ns * math.log(cfg.delta) + cfg.theta_cond * np.log(ns)
    with np.errstate(under="ignore"):
        args = np.exp(-exponents)
    vals = np.empty(ns.shape)
    under = args <= 0.0
    if np.any(under):
        # delta^-n n^-theta underflowed; the value at such arguments is
        # the limit at 0+, exact for bounded families.
        b0 = beta_wl.limit_at_zero()
        if not math.isfinite(b0):
            raise ConfigError(
                "N_max too large: delta^-n n^-theta underflows double precision "
                "and the rate function is unbounded at 0+; reduce N_max"
            )
        vals[under] = b0 / ns[under]
    if np.any(~under):
        with np.errstate(over="ignore"):
            vals[~under] = beta_wl.eval_many(args[~under]) / ns[~under]
    return ns, vals


def wl2sp_condition(beta_wl: RateFunction, cfg: Optional[TransformConfig] = None) -> ConditionVerdict:
    """Check lim_n beta_WL(delta^-n n^-theta)/n = 0 on the window."""
    cfg = cfg or TransformConfig()
    n0 = cfg.n0 if cfg.n0 is not None else 2
    ns, seq = _wl_condition_sequence(beta_wl, cfg, n0)
    return check_vanishing((ns, seq), cfg)


def _gate(verdict: ConditionVerdict, what: str) -> None:
    if verdict.fails:
        raise ConditionFailedError(
            f"vanishing condition for {what} fails empirically "
            f"(trend slope {verdict.trend_slope:.4g})"
        )
    if verdict.status == INCONCLUSIVE:
        warnings.warn(
            f"vanishing condition for {what} is empirically inconclusive; proceeding",
            RuntimeWarning,
            stacklevel=3,
        )


# ---------------------------------------------------------------------------
# Rate-function maps
# ---------------------------------------------------------------------------


def _validate_s_grid(s_grid) -> np.ndarray:
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or s.size < 1:
        raise ConfigError("s grid must be a 1-D array of positive reals")
    if np.any(s <= 0) or not np.all(np.isfinite(s)):
        raise ConfigError("s grid entries must be positive and finite")
    if np.any(np.diff(s) <= 0):
        raise ConfigError("s grid must be strictly increasing")
    return s


def _clamp_and_tabulate(s: np.ndarray, values: np.ndarray, s0: Optional[float]) -> Tabulated:
    if s0 is not None:
        above = s > s0
        if np.any(above) and np.any(~above):
            values = values.copy()
            values[above] = values[~above][-1]
    env = _running_max_from_right(values)
    return Tabulated(points=tuple(zip(s.tolist(), env.tolist())))


def _power_of_delta(delta: float, k: int) -> float:
    x = k * math.log(delta)
    if x > _EXP_CAP:
        raise CapError(
            f"delta^{k} exceeds double-precision range; the requested s is too small"
        )
    return math.exp(x)


def n_zero(beta_sp: RateFunction, s: float, cfg: Optional[TransformConfig] = None) -> int:
    """Largest n in [n0, N_max] with C4*n*xi1(delta^(-n+1)) > s.

    Returns n0 when no index qualifies.  The vanishing condition for the
    kernel sequence is verified first; a qualifying set that reaches
    N_max raises a cap error.
    """
    cfg = cfg or TransformConfig()
    if not (isinstance(s, (int, float)) and s > 0):
        raise MathDomainError("n_zero requires s > 0")
    if cfg.s0 is not None and s > cfg.s0:
        raise ConfigError(f"n_zero requires s <= s0 = {cfg.s0}")
    n0 = cfg.n0 if cfg.n0 is not None else _auto_n0_xi1(beta_sp, cfg)
    ns, seq = _sp_kernel_sequence(beta_sp, cfg, n0, cfg.N_max)
    _gate(check_vanishing((ns, seq), cfg), "the SP-to-SL map")
    return _n_zero_from_sequence(ns, seq, float(s), cfg)


def _n_zero_from_sequence(ns: np.ndarray, seq: np.ndarray, s: float, cfg: TransformConfig) -> int:
    qualifying = cfg.C4 * seq > s
    if not np.any(qualifying):
        return int(ns[0])
    last = int(ns[np.flatnonzero(qualifying)[-1]])
    if last >= int(ns[-1]):
        raise CapError(
            f"qualifying set for s={s:g} reaches N_max={int(ns[-1])}; increase N_max"
        )
    return last


def sl_from_sp(
    beta_sp: RateFunction,
    s_grid,
    cfg: Optional[TransformConfig] = None,
    verdict: Optional[ConditionVerdict] = None,
) -> Tabulated:
    """SL rate function log(delta)*(1 + N0(s)) from an SP rate function."""
    cfg = cfg or TransformConfig()
    s = _validate_s_grid(s_grid)
    n0 = cfg.n0 if cfg.n0 is not None else _auto_n0_xi1(beta_sp, cfg)
    ns, seq = _sp_kernel_sequence(beta_sp, cfg, n0, cfg.N_max)
    if verdict is None:
        verdict = check_vanishing((ns, seq), cfg)
    _gate(verdict, "the SP-to-SL map")

    s0 = cfg.s0 if cfg.s0 is not None else float(s[-1])
    ld = math.log(cfg.delta)
    values = np.empty(s.shape)
    for i, si in enumerate(s):
        si_eff = min(float(si), s0)
        values[i] = ld * (1 + _n_zero_from_sequence(ns, seq, si_eff, cfg))
    return _clamp_and_tabulate(s, values, cfg.s0)


def wl_from_sp(beta_sp: RateFunction, s_grid, cfg: Optional[TransformConfig] = None) -> Tabulated:
    """WL rate function from an SP rate function.

    beta_WL(s) = C1 * sup_{n0<=n<=k*(s)} n*xi1(delta^(-n+1)) with k*(s)
    the smallest k >= n0 satisfying C2*k*delta^-k <= s (the inf over
    admissible k of the running sup is attained there because the sup is
    non-decreasing in k).
    """
    cfg = cfg or TransformConfig()
    s = _validate_s_grid(s_grid)
    n0 = cfg.n0 if cfg.n0 is not None else _auto_n0_xi1(beta_sp, cfg)

    ks = np.arange(n0, cfg.k_max + 1)
    with np.errstate(under="ignore"):
        thresholds = cfg.C2 * np.exp(np.log(ks) - ks * math.log(cfg.delta))

    s0 = cfg.s0 if cfg.s0 is not None else float(s[-1])
    s_eff = np.minimum(s, s0)
    k_star = np.empty(s.shape, dtype=int)
    for i, si in enumerate(s_eff):
        ok = np.flatnonzero(thresholds <= si)
        if ok.size == 0:
            raise CapError(
                f"no admissible k <= k_max={cfg.k_max} for s={float(si):g}; increase k_max"
            )
        k_star[i] = int(ks[ok[0]])

    k_hi = int(k_star.max())
    ns, seq = _sp_kernel_sequence(beta_sp, cfg, n0, k_hi)
    if np.any(np.isnan(seq)):
        bad = int(ns[np.flatnonzero(np.isnan(seq))[0]])
        raise MathDomainError(
            f"xi1(delta^(-n+1)) is Undefined at n={bad} inside the sup window"
        )
    running_sup = np.maximum.accumulate(seq)
    values = cfg.C1 * running_sup[k_star - n0]
    if np.any(values <= 0.0):
        raise DegenerateTransformError(
            "kernel sequence vanishes on the sup window; the weak log-Sobolev "
            "content of this input is degenerate (bounded rate function at 0+)"
        )
    return _clamp_and_tabulate(s, values, cfg.s0)


def sp_from_wl(
    beta_wl: RateFunction,
    s_grid,
    cfg: Optional[TransformConfig] = None,
    verdict: Optional[ConditionVerdict] = None,
) -> Tabulated:
    """SP rate function C3*delta^k*(s) from a WL rate function.

    k*(s) is the smallest k >= n0 with
    sup_{k<=n<=N_max} beta_WL(delta^-n n^-theta)/n <= s; the tail beyond
    N_max is certified negligible by the vanishing-condition verdict.
    """
    cfg = cfg or TransformConfig()
    s = _validate_s_grid(s_grid)
    n0 = cfg.n0 if cfg.n0 is not None else 2
    ns, seq = _wl_condition_sequence(beta_wl, cfg, n0)
    if verdict is None:
        verdict = check_vanishing((ns, seq), cfg)
    _gate(verdict, "the WL-to-SP map")

    suffix_sup = np.maximum.accumulate(seq[::-1])[::-1]
    k_cap = min(cfg.k_max, cfg.N_max)
    s0 = cfg.s0 if cfg.s0 is not None else float(s[-1])
    s_eff = np.minimum(s, s0)
    values = np.empty(s.shape)
    for i, si in enumerate(s_eff):
        ok = np.flatnonzero(suffix_sup <= si)
        if ok.size == 0 or int(ns[ok[0]]) > k_cap:
            raise CapError(
                f"no admissible k <= {k_cap} for s={float(si):g}; increase k_max/N_max"
            )
        values[i] = cfg.C3 * _power_of_delta(cfg.delta, int(ns[ok[0]]))
    return _clamp_and_tabulate(s, values, cfg.s0)


def sp_from_sl(beta_sl: RateFunction, s_grid, cfg: Optional[TransformConfig] = None) -> Tabulated:
    """SP rate function C5*delta^k*(s) from an SL rate function.

    k*(s) is the smallest k >= n0 with xi2(k*log delta) <= C6*s;
    Undefined kernel values are treated as unsatisfiable constraints.
    """
    cfg = cfg or TransformConfig()
    s = _validate_s_grid(s_grid)
    n0 = cfg.n0 if cfg.n0 is not None else _auto_n0_xi2(beta_sl, cfg)

    ks = np.arange(n0, cfg.k_max + 1)
    log_ts = np.log(ks * math.log(cfg.delta))
    xi_vals = _kernel_min(beta_sl, log_ts, cfg, "xi2")
    xi_vals = np.where(np.isnan(xi_vals), np.inf, xi_vals)

    s0 = cfg.s0 if cfg.s0 is not None else float(s[-1])
    s_eff = np.minimum(s, s0)
    values = np.empty(s.shape)
    for i, si in enumerate(s_eff):
        ok = np.flatnonzero(xi_vals <= cfg.C6 * si)
        if ok.size == 0:
            raise CapError(
                f"no admissible k <= k_max={cfg.k_max} for s={float(si):g}; increase k_max"
            )
        values[i] = cfg.C5 * _power_of_delta(cfg.delta, int(ks[ok[0]]))
    return _clamp_and_tabulate(s, values, cfg.s0)
