"""Maximum-likelihood density-matrix reconstruction from measurement counts.

The state is parameterized through its matrix square root, rho = A A^dag /
trace(A A^dag), which keeps every iterate positive semidefinite with unit
trace. The solver iterates the likelihood stationarity map: with

    R(rho) = (1/N) sum_i (n_i / p_i) L_i,      p_i = trace(rho L_i),

a stationary point satisfies R rho = rho, and the update A <- (I + a (R - I)) A
moves toward it. The step length `a` is chosen by a geometric line search on
the log-likelihood each iteration: damping (a < 1) when the plain fixed-point
step overshoots, extrapolation (a > 1) when the iteration crawls along the
nearly flat directions that appear when the optimum sits on the boundary of
the state space. Only likelihood-improving steps are ever accepted, so the
log-likelihood sequence is non-decreasing by construction.

Periodically the solver probes rank-truncated copies of the iterate (mass of
the smallest eigenvalues removed, then renormalized) and keeps one if it
improves the likelihood. This "boundary snap" accelerates convergence onto
rank-deficient optima; near an interior optimum the probe always fails and
the iteration is unaffected. Truncated directions are kept at a tiny residual
amplitude so later iterations can regrow them if the data demand it.

Two measurement models are supported for the same observed counts: "fuzzy"
uses the rows' actual (error-aware) outcome operators, "standard" replaces
them with the ideal rotated projectors an error-blind analysis would assume.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measurement import CountRecord, ProtocolRow, ideal_outcome_operators
from .quantum import DensityMatrix, PureState, fidelity

__all__ = [
    "ReconstructionConfig",
    "ReconstructionResult",
    "log_likelihood",
    "likelihood_gradient",
    "reconstruct",
    "infidelity",
]

PROBABILITY_FLOOR = 1e-15
_ASCENT_SLACK = 1e-12  # accepted-step tolerance, relative to |log-likelihood|
_SNAP_PERIOD = 25
_SNAP_RESIDUAL = 1e-18  # weight kept on truncated eigendirections
_MAX_EXPANSIONS = 60
_MAX_SHRINKS = 60


@dataclass(frozen=True)
class ReconstructionConfig:
    """Solver settings.

    model:           "fuzzy" (use the rows' outcome operators) or "standard"
                     (use ideal rotated projectors).
    max_iterations:  iteration budget.
    convergence_tol: per-shot log-likelihood gain below which (together with
                     the trace-distance condition) the solver stops.
    step_tol:        trace-distance step size below which the solver stops.
    rank:            columns of the square-root factor; None means full rank.
                     Rank-deficient fits start from a short full-rank warm-up
                     whose leading eigenvectors seed the factor.
    record_trace:    keep the per-iteration log-likelihood sequence on the
                     result (warm-up excluded).
    """

    model: str = "fuzzy"
    max_iterations: int = 5000
    convergence_tol: float = 1e-10
    step_tol: float = 1e-9
    rank: int | None = None
    record_trace: bool = False

    def __post_init__(self):
        if self.model not in ("fuzzy", "standard"):
            raise ValueError(f"unknown measurement model {self.model!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_tol > 0 or not self.step_tol > 0:
            raise ValueError("convergence tolerances must be positive")
        if self.rank is not None and self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")


@dataclass(frozen=True)
class ReconstructionResult:
    rho_hat: DensityMatrix
    log_likelihood: float
    iterations: int
    converged: bool
    # outcomes whose model probability sat below the log floor despite being
    # observed; routinely nonzero when the assumed model is wrong
    floored_outcomes: int = 0
    log_likelihood_trace: list[float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.log_likelihood):
            raise ValueError("log-likelihood must be finite")

    def to_dict(self) -> dict:
        return {
            "density_matrix": self.rho_hat.to_dict(),
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReconstructionResult":
        return cls(rho_hat=DensityMatrix.from_dict(d["density_matrix"]),
                   log_likelihood=d["log_likelihood"], iterations=d["iterations"],
                   converged=d["converged"])


def _model_operators(protocol: list[ProtocolRow], model: str) -> np.ndarray:
    if model == "fuzzy":
        rows = [row.outcome_operators for row in protocol]
    else:
        rows = [ideal_outcome_operators(row) for row in protocol]
    return np.concatenate(rows, axis=0)


def _log_likelihood_flat(rho: np.ndarray, counts: np.ndarray, flat_ops: np.ndarray) -> float:
    p = np.einsum("kij,ji->k", flat_ops, rho).real
    return float(np.sum(counts * np.log(np.clip(p, PROBABILITY_FLOOR, None))))


def log_likelihood(rho, record: CountRecord, operators) -> float:
    """sum_i n_i log trace(rho L_i) over all rows and outcomes, with
    probabilities floored at 1e-15 inside the log.

    `operators` is one (n_outcomes, d, d) array per record row, e.g. the
    outcome_operators of the protocol the record was taken with.
    """
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    flat_ops = np.concatenate([np.asarray(ops, dtype=complex) for ops in operators], axis=0)
    counts = np.asarray(record.counts, dtype=float).reshape(-1)
    if counts.size != flat_ops.shape[0]:
        raise ValueError(f"record has {counts.size} counts but {flat_ops.shape[0]} operators given")
    if mat.shape[0] != flat_ops.shape[1]:
        raise ValueError(f"dimension mismatch: rho is {mat.shape[0]}-dim, operators are "
                         f"{flat_ops.shape[1]}-dim")
    return _log_likelihood_flat(mat, counts, flat_ops)


def likelihood_gradient(a_factor: np.ndarray, counts: np.ndarray, flat_ops: np.ndarray) -> np.ndarray:
    """Gradient of the log-likelihood with respect to the conjugate of the
    square-root factor A (rho = A A^dag / trace): (R_u - N I) A / trace(A A^dag),
    where R_u = sum_i (n_i/p_i) L_i. The directional derivative along a
    perturbation E of A is 2 Re <G, E>."""
    a = np.asarray(a_factor, dtype=complex)
    counts = np.asarray(counts, dtype=float).reshape(-1)
    tr = float(np.sum(np.abs(a) ** 2))
    rho = a @ a.conj().T / tr
    p = np.einsum("kij,ji->k", flat_ops, rho).real
    w = counts / np.clip(p, PROBABILITY_FLOOR, None)
    r_u = np.einsum("k,kij->ij", w, flat_ops)
    return (r_u - counts.sum() * np.eye(a.shape[0])) @ a / tr


def _normalized(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rho = a @ a.conj().T
    tr = np.trace(rho).real
    return a / np.sqrt(tr), rho / tr


def _trace_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.linalg.eigvalsh(rho1 - rho2)).sum())


def _snap_candidate(rho, ll, counts, flat_ops):
    """Best likelihood-improving rank truncation of rho, or None."""
    d = rho.shape[0]
    vals, vecs = np.linalg.eigh(rho)
    vals = np.clip(vals[::-1], 0.0, None)
    vecs = vecs[:, ::-1]
    best = None
    for r in range(1, d):
        kept = vals[:r].sum()
        if kept <= 0.0:
            continue
        weights = np.concatenate([vals[:r] / kept, np.full(d - r, _SNAP_RESIDUAL)])
        a_c, rho_c = _normalized(vecs * np.sqrt(weights))
        ll_c = _log_likelihood_flat(rho_c, counts, flat_ops)
        if ll_c > ll and (best is None or ll_c > best[0]):
            best = (ll_c, a_c, rho_c)
    return best


def _ascend(a, counts, flat_ops, max_iter, ll_gain_tol, step_tol,
            check_stopping=True, allow_snap=True, trace=None):
    """Line-searched fixed-point ascent from factor `a`. Returns
    (a, rho, log_likelihood, iterations, converged)."""
    d = flat_ops.shape[1]
    eye = np.eye(d, dtype=complex)
    total = counts.sum()
    a, rho = _normalized(a)
    ll = _log_likelihood_flat(rho, counts, flat_ops)
    if trace is not None:
        trace.append(ll)
    if total == 0.0:
        return a, rho, ll, 0, True

    alpha = 1.0
    iterations = 0
    converged = False
    snap_enabled = allow_snap and a.shape[1] == d
    for it in range(max_iter):
        iterations = it + 1
        if snap_enabled and it > 0 and it % _SNAP_PERIOD == 0:
            snapped = _snap_candidate(rho, ll, counts, flat_ops)
            if snapped is not None:
                ll, a, rho = snapped
                if trace is not None:
                    trace.append(ll)
        p = np.einsum("kij,ji->k", flat_ops, rho).real
        w = counts / np.clip(p, PROBABILITY_FLOOR, None)
        direction = np.einsum("k,kij->ij", w, flat_ops) / total - eye

        # geometric line search, warm-started at the previous step length
        best = None
        step_len = alpha
        for _ in range(_MAX_EXPANSIONS):
            a_c, rho_c = _normalized(a + step_len * (direction @ a))
            ll_c = _log_likelihood_flat(rho_c, counts, flat_ops)
            if best is None or ll_c > best[0]:
                best = (ll_c, step_len, a_c, rho_c)
                step_len *= 2.0
            else:
                break
        if best[1] == alpha:
            step_len = alpha / 2.0
            for _ in range(_MAX_SHRINKS):
                a_c, rho_c = _normalized(a + step_len * (direction @ a))
                ll_c = _log_likelihood_flat(rho_c, counts, flat_ops)
                if ll_c > best[0]:
                    best = (ll_c, step_len, a_c, rho_c)
                    step_len /= 2.0
                else:
                    break
        ll_new, alpha, a_new, rho_new = best
        if ll_new < ll - _ASCENT_SLACK * max(1.0, abs(ll)):
            # no improving step in the search range: numerically stationary
            converged = True
            break
        gain = ll_new - ll
        step = _trace_distance(rho_new, rho)
        a, rho, ll = a_new, rho_new, ll_new
        if trace is not None:
            trace.append(ll)
        alpha = max(alpha, 1.0)
        if check_stopping and gain < ll_gain_tol and step < step_tol:
            converged = True
            break
    return a, rho, ll, iterations, converged


_WARMUP_ITERATIONS = 50


def reconstruct(record: CountRecord, protocol: list[ProtocolRow],
                config: ReconstructionConfig | None = None) -> ReconstructionResult:
    """Maximum-likelihood state estimate for the observed counts.

    Starts from the maximally mixed state. Stops when the per-iteration
    log-likelihood gain drops below convergence_tol per shot AND the
    trace-distance step drops below step_tol, or at max_iterations; the
    `converged` flag records which. Non-convergence is reported, never raised.
    """
    config = config or ReconstructionConfig()
    if len(record.bases) != len(protocol) or any(
            rb != row.basis for rb, row in zip(record.bases, protocol)):
        raise ValueError("record row labels do not match the protocol")
    flat_ops = _model_operators(protocol, config.model)
    counts = np.asarray(record.counts, dtype=float).reshape(-1)
    if counts.size != flat_ops.shape[0]:
        raise ValueError(f"record has {counts.size} counts but the protocol defines "
                         f"{flat_ops.shape[0]} outcomes")
    if (counts < 0).any():
        raise ValueError("counts must be nonnegative")
    d = flat_ops.shape[1]
    rank = d if config.rank is None else min(config.rank, d)
    ll_gain_tol = config.convergence_tol * counts.sum()
    trace: list[float] | None = [] if config.record_trace else None

    warm_iterations = 0
    if rank < d:
        # full-rank warm-up locates the dominant eigendirections
        a0 = np.eye(d, dtype=complex) / np.sqrt(d)
        warm = min(_WARMUP_ITERATIONS, config.max_iterations)
        a_w, rho_w, _, warm_iterations, _ = _ascend(
            a0, counts, flat_ops, warm, ll_gain_tol, config.step_tol,
            check_stopping=False, allow_snap=False)
        vals, vecs = np.linalg.eigh(rho_w)
        order = np.argsort(vals)[::-1][:rank]
        a = vecs[:, order] * np.sqrt(np.clip(vals[order], 1e-12, None))
    else:
        a = np.eye(d, dtype=complex) / np.sqrt(d)

    a, rho, ll, iterations, converged = _ascend(
        a, counts, flat_ops, config.max_iterations, ll_gain_tol, config.step_tol,
        allow_snap=(rank == d), trace=trace)

    rho = (rho + rho.conj().T) / 2.0
    return ReconstructionResult(
        rho_hat=DensityMatrix.from_matrix(rho),
        log_likelihood=ll,
        iterations=warm_iterations + iterations,
        converged=converged,
        log_likelihood_trace=trace,
    )


def infidelity(result: ReconstructionResult, true_state: PureState) -> float:
    """1 - <psi| rho_hat |psi>, clamped to [0, 1]."""
    return min(max(1.0 - fidelity(result.rho_hat, true_state), 0.0), 1.0)
