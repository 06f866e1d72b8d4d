"""First- and second-order solvers for strongly-convex-strongly-concave
saddle problems, with per-iteration trace logging and a uniform
termination contract (stacked gradient norm below tolerance, or an
iteration cap).

A problem object must provide ``dim_x``, ``dim_y`` and ``grad(x, y)``
returning the two gradient blocks; second-order methods additionally
require ``hessian(x, y)`` returning the full symmetric second-derivative
matrix over the stacked variable ``[x; y]``.  Problems whose Hessian is
constant may set ``constant_hessian = True`` to let solvers evaluate it
once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

__all__ = [
    "FIRST_ORDER_METHODS",
    "SECOND_ORDER_METHODS",
    "METHODS",
    "SolverConfig",
    "TraceRow",
    "SolveResult",
    "spectral_norm_estimate",
    "solve",
    "solve_gda",
    "solve_extragradient",
    "solve_newton",
    "solve_quasi_newton",
    "broyden_update",
    "greedy_direction",
    "trace_to_csv",
    "write_trace_csv",
]

FIRST_ORDER_METHODS = ("sim-gda", "alt-gda", "extragradient")
SECOND_ORDER_METHODS = ("newton", "qn-broyden")
METHODS = FIRST_ORDER_METHODS + SECOND_ORDER_METHODS

BROYDEN_MODES = ("sr1", "dfp", "bfgs")
DIRECTION_RULES = ("greedy-basis", "random-gaussian")

DIVERGENCE_LIMIT = 1e12       # gradient norm beyond which a run is declared divergent
DENSE_TRACE_ROWS = 10_000     # first-order methods: record every iteration up to here,
THIN_TRACE_EVERY = 10         # ... then only every 10th (bounded trace memory)
CONDITION_LIMIT = 1e14        # Hessian condition estimate treated as singular
SR1_DENOMINATOR_FLOOR = 1e-12 # relative curvature floor for the SR1 denominator

TRACE_HEADER = "iteration,grad_norm,objective,train_auc,test_auc"


@dataclass
class SolverConfig:
    """Method selection and termination/step parameters for one solver run."""

    method: str
    step_size: float | None = None          # first-order only; None -> 1/(2*L_hat)
    max_iterations: int = 50_000
    grad_tolerance: float = 1e-3
    broyden_tau: float | str = "sr1"        # in [0, 1], or "sr1" / "dfp" / "bfgs"
    direction_rule: str = "greedy-basis"
    updates_per_iteration: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.grad_tolerance > 0:
            raise ValueError("grad_tolerance must be positive")
        if isinstance(self.broyden_tau, str):
            if self.broyden_tau not in BROYDEN_MODES:
                raise ValueError(f"broyden_tau must be in [0, 1] or one of {BROYDEN_MODES}")
        elif not 0.0 <= float(self.broyden_tau) <= 1.0:
            raise ValueError("broyden_tau must lie in [0, 1]")
        if self.direction_rule not in DIRECTION_RULES:
            raise ValueError(f"direction_rule must be one of {DIRECTION_RULES}")
        if self.updates_per_iteration < 1:
            raise ValueError("updates_per_iteration must be at least 1")


@dataclass
class TraceRow:
    iteration: int
    grad_norm: float
    objective: float
    train_auc: float | None = None
    test_auc: float | None = None


@dataclass
class SolveResult:
    """Terminal iterate plus the per-iteration trace of one solver run."""

    final_x: np.ndarray
    final_y: np.ndarray
    converged: bool
    iterations_used: int
    trace: list[TraceRow]
    final_state: object | None = None       # problem-specific view (PrimalDualState for AUC)
    notes: list[str] = field(default_factory=list)
    q_history: list[np.ndarray] | None = None


class _Recorder:
    """Applies the trace-thinning policy and fills optional AUC columns."""

    def __init__(self, dense: bool, auc_eval=None):
        self.dense = dense
        self.auc_eval = auc_eval
        self.rows: list[TraceRow] = []

    def _due(self, iteration: int) -> bool:
        return self.dense or iteration <= DENSE_TRACE_ROWS or iteration % THIN_TRACE_EVERY == 0

    def record(self, iteration, grad_norm, problem, x, y, force=False):
        if not (force or self._due(iteration)):
            return
        train_auc = test_auc = None
        if self.auc_eval is not None:
            train_auc, test_auc = self.auc_eval(x, y)
        self.rows.append(
            TraceRow(iteration, float(grad_norm), float(problem.value(x, y)), train_auc, test_auc)
        )


def _initial_point(problem, initial) -> tuple[np.ndarray, np.ndarray]:
    if initial is None:
        return np.zeros(problem.dim_x), np.zeros(problem.dim_y)
    if hasattr(initial, "pack_x"):          # PrimalDualState
        return initial.pack_x(), np.array([initial.y], dtype=float)
    x0, y0 = initial
    return (
        np.atleast_1d(np.asarray(x0, dtype=float)).copy(),
        np.atleast_1d(np.asarray(y0, dtype=float)).copy(),
    )


def _grads(problem, x, y):
    gx, gy = problem.grad(x, y)
    gx = np.atleast_1d(np.asarray(gx, dtype=float))
    gy = np.atleast_1d(np.asarray(gy, dtype=float))
    return gx, gy, float(np.sqrt(gx @ gx + gy @ gy))


def _check_divergence(grad_norm: float):
    if not np.isfinite(grad_norm) or grad_norm > DIVERGENCE_LIMIT:
        raise RuntimeError("diverged (step size too large)")


def _result(problem, x, y, converged, iterations, recorder, **extra) -> SolveResult:
    state = problem.unpack(x, y) if hasattr(problem, "unpack") else None
    return SolveResult(
        final_x=x, final_y=y, converged=converged, iterations_used=iterations,
        trace=recorder.rows, final_state=state, **extra,
    )


def spectral_norm_estimate(matrix: np.ndarray, seed: int = 0, iterations: int = 300) -> float:
    """Power-iteration estimate of the largest absolute eigenvalue."""
    m = np.asarray(matrix, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(m.shape[0])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(iterations):
        w = m @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        estimate = norm
    return estimate


def _resolve_step(problem, config, x, y) -> float:
    if config.step_size is not None:
        return float(config.step_size)
    if not hasattr(problem, "hessian"):
        raise ValueError("step_size is required for problems without a hessian()")
    h_hat = np.asarray(problem.hessian(x, y), dtype=float)
    lipschitz = spectral_norm_estimate(h_hat, seed=config.rng_seed)
    if lipschitz <= 0:
        raise ValueError("could not estimate a step size (zero Hessian)")
    return 1.0 / (2.0 * lipschitz)


def _check_conditioning(h_hat: np.ndarray):
    cond = np.linalg.cond(h_hat)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise RuntimeError("singular Hessian; increase lambda")


def solve(problem, config: SolverConfig, initial=None, auc_eval=None) -> SolveResult:
    """Dispatch to the solver selected by ``config.method``."""
    if config.method in ("sim-gda", "alt-gda"):
        return solve_gda(problem, config, initial, auc_eval)
    if config.method == "extragradient":
        return solve_extragradient(problem, config, initial, auc_eval)
    if config.method == "newton":
        return solve_newton(problem, config, initial, auc_eval)
    return solve_quasi_newton(problem, config, initial, auc_eval)


def solve_gda(problem, config: SolverConfig, initial=None, auc_eval=None) -> SolveResult:
    """Simultaneous or alternating gradient descent ascent.

    Both variants descend ``x`` along its gradient; the dual ascends using
    the gradient at the old primal (simultaneous) or the fresh one
    (alternating).
    """
    if config.method not in ("sim-gda", "alt-gda"):
        raise ValueError("solve_gda handles methods 'sim-gda' and 'alt-gda'")
    x, y = _initial_point(problem, initial)
    eta = _resolve_step(problem, config, x, y)
    alternate = config.method == "alt-gda"
    recorder = _Recorder(dense=False, auc_eval=auc_eval)

    gx, gy, gn = _grads(problem, x, y)
    recorder.record(0, gn, problem, x, y, force=True)
    if gn <= config.grad_tolerance:
        return _result(problem, x, y, True, 0, recorder)

    for t in range(1, config.max_iterations + 1):
        x_next = x - eta * gx
        if alternate:
            _, gy_new = problem.grad(x_next, y)
            y = y + eta * np.atleast_1d(np.asarray(gy_new, dtype=float))
        else:
            y = y + eta * gy
        x = x_next
        gx, gy, gn = _grads(problem, x, y)
        _check_divergence(gn)
        converged = gn <= config.grad_tolerance
        recorder.record(t, gn, problem, x, y, force=converged or t == config.max_iterations)
        if converged:
            return _result(problem, x, y, True, t, recorder)
    return _result(problem, x, y, False, config.max_iterations, recorder)


def solve_extragradient(problem, config: SolverConfig, initial=None, auc_eval=None) -> SolveResult:
    """Two-step extragradient: a half step to a mid-point, then a full step
    using the mid-point gradients."""
    if config.method != "extragradient":
        raise ValueError("solve_extragradient requires method 'extragradient'")
    x, y = _initial_point(problem, initial)
    eta = _resolve_step(problem, config, x, y)
    recorder = _Recorder(dense=False, auc_eval=auc_eval)

    gx, gy, gn = _grads(problem, x, y)
    recorder.record(0, gn, problem, x, y, force=True)
    if gn <= config.grad_tolerance:
        return _result(problem, x, y, True, 0, recorder)

    for t in range(1, config.max_iterations + 1):
        x_mid = x - eta * gx
        y_mid = y + eta * gy
        gx_mid, gy_mid, _ = _grads(problem, x_mid, y_mid)
        x = x - eta * gx_mid
        y = y + eta * gy_mid
        gx, gy, gn = _grads(problem, x, y)
        _check_divergence(gn)
        converged = gn <= config.grad_tolerance
        recorder.record(t, gn, problem, x, y, force=converged or t == config.max_iterations)
        if converged:
            return _result(problem, x, y, True, t, recorder)
    return _result(problem, x, y, False, config.max_iterations, recorder)


def solve_newton(problem, config: SolverConfig, initial=None, auc_eval=None) -> SolveResult:
    """Full Newton step on the stacked system via a symmetric indefinite
    solve (never an explicit inverse)."""
    if config.method != "newton":
        raise ValueError("solve_newton requires method 'newton'")
    x, y = _initial_point(problem, initial)
    constant = getattr(problem, "constant_hessian", False)
    recorder = _Recorder(dense=True, auc_eval=auc_eval)

    gx, gy, gn = _grads(problem, x, y)
    recorder.record(0, gn, problem, x, y, force=True)
    if gn <= config.grad_tolerance:
        return _result(problem, x, y, True, 0, recorder)

    h_hat = None
    for t in range(1, config.max_iterations + 1):
        if h_hat is None or not constant:
            h_hat = np.asarray(problem.hessian(x, y), dtype=float)
            _check_conditioning(h_hat)
        g = np.concatenate([gx, gy])
        try:
            step = scipy.linalg.solve(h_hat, g, assume_a="sym")
        except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
            raise RuntimeError("singular Hessian; increase lambda") from exc
        nx = x.size
        x = x - step[:nx]
        y = y - step[nx:]
        gx, gy, gn = _grads(problem, x, y)
        _check_divergence(gn)
        converged = gn <= config.grad_tolerance
        recorder.record(t, gn, problem, x, y, force=True)
        if converged:
            return _result(problem, x, y, True, t, recorder)
    return _result(problem, x, y, False, config.max_iterations, recorder)


def broyden_update(Q: np.ndarray, H: np.ndarray, u: np.ndarray, tau: float | str):
    """One Broyden-family curvature update of the dominating approximation.

    Returns ``(Q_new, skipped)`` where ``skipped`` names any component whose
    denominator guard fired (that component leaves Q unchanged).  ``tau``
    blends DFP (tau=1) with SR1 (tau=0); the string "bfgs" selects the
    curvature-ratio value ``u@H@u / u@Q@u`` that reproduces the BFGS update.
    Requires ``Q`` symmetric positive definite with ``Q - H`` positive
    semidefinite for the guards to be meaningful.
    """
    Q = np.asarray(Q, dtype=float)
    H = np.asarray(H, dtype=float)
    u = np.asarray(u, dtype=float)
    if Q.shape != H.shape or Q.shape[0] != u.size:
        raise ValueError("dimension mismatch between Q, H and u")
    u_norm2 = float(u @ u)
    if u_norm2 == 0.0:
        raise ValueError("update direction u must be nonzero")

    hu = H @ u
    qu = Q @ u
    uhu = float(u @ hu)
    uqu = float(u @ qu)

    if isinstance(tau, str):
        if tau == "sr1":
            tau_val = 0.0
        elif tau == "dfp":
            tau_val = 1.0
        elif tau == "bfgs":
            if uhu <= 0.0 or uqu <= 0.0:
                return Q, ("bfgs",)
            tau_val = uhu / uqu
        else:
            raise ValueError(f"unknown broyden tau mode {tau!r}")
    else:
        tau_val = float(tau)
        if not 0.0 <= tau_val <= 1.0:
            raise ValueError("tau must lie in [0, 1]")

    skipped = []
    sr1_term = Q
    if tau_val < 1.0:
        residual = qu - hu                      # (Q - H) u
        denom = float(u @ residual)
        if denom <= SR1_DENOMINATOR_FLOOR * u_norm2:
            skipped.append("sr1")               # update skipped (degenerate curvature pair)
        else:
            sr1_term = Q - np.outer(residual, residual) / denom

    dfp_term = Q
    if tau_val > 0.0:
        if uhu <= 0.0:
            skipped.append("dfp")               # update skipped (degenerate curvature pair)
        else:
            dfp_term = (
                Q
                - (np.outer(hu, qu) + np.outer(qu, hu)) / uhu
                + (1.0 + uqu / uhu) * np.outer(hu, hu) / uhu
            )

    q_new = tau_val * dfp_term + (1.0 - tau_val) * sr1_term
    q_new = 0.5 * (q_new + q_new.T)             # kill round-off asymmetry
    return q_new, tuple(skipped)


def greedy_direction(Q: np.ndarray, H: np.ndarray) -> int:
    """Standard-basis index maximizing Q_ii / H_ii (ties -> lowest index)."""
    dq = np.diagonal(np.asarray(Q, dtype=float))
    dh = np.diagonal(np.asarray(H, dtype=float))
    if dq.size != dh.size:
        raise ValueError("Q and H must have matching shapes")
    if np.any(dh <= 0.0):
        raise ValueError("invalid curvature matrix")
    return int(np.argmax(dq / dh))


def solve_quasi_newton(problem, config: SolverConfig, initial=None, auc_eval=None,
                       record_q=False) -> SolveResult:
    """Quasi-Newton iteration on the squared-Hessian reformulation.

    Maintains a positive definite ``Q`` dominating ``H = H_hat @ H_hat``,
    steps by ``-Q^{-1} H_hat g`` through a Cholesky solve, then refines
    ``Q`` with ``updates_per_iteration`` Broyden-family updates along
    greedily selected basis vectors or seeded Gaussian directions.
    """
    if config.method != "qn-broyden":
        raise ValueError("solve_quasi_newton requires method 'qn-broyden'")
    x, y = _initial_point(problem, initial)
    constant = getattr(problem, "constant_hessian", False)
    recorder = _Recorder(dense=True, auc_eval=auc_eval)
    notes: list[str] = []

    h_hat = np.asarray(problem.hessian(x, y), dtype=float)
    _check_conditioning(h_hat)
    h_sq = h_hat @ h_hat
    n = h_sq.shape[0]
    lam_max = spectral_norm_estimate(h_sq, seed=config.rng_seed)
    Q = (1.01 * lam_max) * np.eye(n)            # dominance Q >= H at initialization
    rng = np.random.default_rng(config.rng_seed)
    q_history = [Q.copy()] if record_q else None

    gx, gy, gn = _grads(problem, x, y)
    recorder.record(0, gn, problem, x, y, force=True)
    if gn <= config.grad_tolerance:
        return _result(problem, x, y, True, 0, recorder, notes=notes, q_history=q_history)

    for t in range(1, config.max_iterations + 1):
        g = np.concatenate([gx, gy])
        rhs = h_hat @ g
        try:
            factor = scipy.linalg.cho_factor(Q)
        except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
            raise RuntimeError("curvature approximation lost positive definiteness") from exc
        step = scipy.linalg.cho_solve(factor, rhs)
        nx = x.size
        x = x - step[:nx]
        y = y - step[nx:]

        if not constant:
            h_hat = np.asarray(problem.hessian(x, y), dtype=float)
            _check_conditioning(h_hat)
            h_sq = h_hat @ h_hat

        for _ in range(config.updates_per_iteration):
            if config.direction_rule == "greedy-basis":
                u = np.zeros(n)
                u[greedy_direction(Q, h_sq)] = 1.0
            else:
                u = rng.standard_normal(n)
            Q, skipped = broyden_update(Q, h_sq, u, config.broyden_tau)
            for component in skipped:
                notes.append(
                    f"iteration {t}: {component} update skipped (degenerate curvature pair)"
                )
        if record_q:
            q_history.append(Q.copy())

        gx, gy, gn = _grads(problem, x, y)
        _check_divergence(gn)
        converged = gn <= config.grad_tolerance
        recorder.record(t, gn, problem, x, y, force=True)
        if converged:
            return _result(problem, x, y, True, t, recorder, notes=notes, q_history=q_history)
    return _result(problem, x, y, False, config.max_iterations, recorder,
                   notes=notes, q_history=q_history)


def _fmt(value) -> str:
    return "" if value is None else f"{value:.17g}"


def trace_to_csv(trace: list[TraceRow]) -> str:
    """Render a trace as CSV (17 significant digits, empty optional cells)."""
    lines = [TRACE_HEADER]
    for row in trace:
        lines.append(
            f"{row.iteration},{_fmt(row.grad_norm)},{_fmt(row.objective)},"
            f"{_fmt(row.train_auc)},{_fmt(row.test_auc)}"
        )
    return "\n".join(lines) + "\n"


def write_trace_csv(trace: list[TraceRow], path):
    Path(path).write_text(trace_to_csv(trace))
