# src/lab/transport.py
"""
Wasserstein distances between discrete measures on the torus.

exact_wasserstein solves the transportation problem with POT's network
simplex and returns a vertex solution. entropic_wasserstein runs
log-domain Sinkhorn with epsilon scaling and rounds the result onto the
transport polytope, so its cost is always an upper bound on the exact one.
"""

from typing import Any, Dict, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import ot
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.special import logsumexp

from core.config import config
from core.constants import EMD_MAX_ITER, ERROR_MESSAGES, SINKHORN_CHECK_EVERY, TOLERANCES
from core.exceptions import InvalidInputError, SolverError, SolverResourceError
from core.logging import log_with_timestamp

from lab.densities import DensitySpec, DiscreteMeasure, EmpiricalMeasure, quantize, quantize_field
from lab.kernels import Bandwidth, KernelSpec, as_bandwidth, kde_field, kernel_C0
from lab.torus import Grid, periodic_distance_matrix

_LOGGER_NAME = "Transport"

Method = Literal['exact', 'entropic']


class TransportPlan(BaseModel):
    """Sparse coupling: entry k moves masses[k] from source rows[k] to target cols[k]."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rows: np.ndarray
    cols: np.ndarray
    masses: np.ndarray
    source_weights: np.ndarray
    target_weights: np.ndarray

    @model_validator(mode='after')
    def validate_marginals(self):
        if self.masses.size and self.masses.min() < -TOLERANCES['negative_mass']:
            raise ValueError(f"negative transported mass {self.masses.min()}")
        rows = np.bincount(self.rows, weights=self.masses, minlength=self.source_weights.size)
        cols = np.bincount(self.cols, weights=self.masses, minlength=self.target_weights.size)
        violation = max(
            float(np.max(np.abs(rows - self.source_weights))),
            float(np.max(np.abs(cols - self.target_weights))),
        )
        if violation > TOLERANCES['marginal']:
            raise ValueError(f"plan marginals off by {violation}")
        return self

    @classmethod
    def from_dense(cls, matrix: np.ndarray, source_index: np.ndarray, target_index: np.ndarray,
                   source_weights: np.ndarray, target_weights: np.ndarray) -> 'TransportPlan':
        """Keep the positive entries of a plan on the supports, in original atom indices."""
        rows, cols = np.nonzero(matrix > 0)
        return cls(
            rows=source_index[rows], cols=target_index[cols], masses=matrix[rows, cols],
            source_weights=np.asarray(source_weights, dtype=float),
            target_weights=np.asarray(target_weights, dtype=float),
        )

    @property
    def nnz(self) -> int:
        return int(self.masses.size)

    def dense(self) -> np.ndarray:
        matrix = np.zeros((self.source_weights.size, self.target_weights.size))
        np.add.at(matrix, (self.rows, self.cols), self.masses)
        return matrix


class OTResult(BaseModel):
    """Cost C_p of a plan and W_p = C_p^(1/p), with solver diagnostics."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cost_p: float = Field(ge=0)
    wasserstein: float = Field(ge=0)
    p: float
    method: Method
    plan: Optional[TransportPlan] = None
    converged: bool = True
    iterations: int = 0
    marginal_violation: float = 0.0
    epsilon: Optional[float] = None
    warnings: Tuple[str, ...] = ()

    @model_validator(mode='after')
    def validate_root(self):
        if abs(self.wasserstein - self.cost_p ** (1.0 / self.p)) > 1e-12 * max(1.0, self.wasserstein):
            raise ValueError("wasserstein must equal cost_p^(1/p)")
        return self


class WassersteinEstimate(BaseModel):
    """W_p against a quantized density, with the quantization slack to budget for."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: float
    quantization_slack: float
    method: Method
    result: OTResult


def _check_p(p: float) -> None:
    if not p >= 1.0:
        raise InvalidInputError("p must be >= 1", {'p': p})


def cost_matrix(a: DiscreteMeasure, b: DiscreteMeasure, p: float) -> np.ndarray:
    """Periodic distance to the power p between all atom pairs."""
    _check_p(p)
    if a.d != b.d:
        raise InvalidInputError(ERROR_MESSAGES['DIMENSION_MISMATCH'].format(a.d, b.d))
    return periodic_distance_matrix(a.atoms, b.atoms) ** p


def _result(cost: float, p: float, method: str, **kwargs: Any) -> OTResult:
    cost = max(float(cost), 0.0)
    return OTResult(cost_p=cost, wasserstein=cost ** (1.0 / p), p=p, method=method, **kwargs)


def exact_wasserstein(a: DiscreteMeasure, b: DiscreteMeasure, p: float,
                      atom_cap: Optional[int] = None, keep_plan: bool = True) -> OTResult:
    """Optimal transport by network simplex; zero-weight atoms are dropped first."""
    _check_p(p)
    if a.d != b.d:
        raise InvalidInputError(ERROR_MESSAGES['DIMENSION_MISMATCH'].format(a.d, b.d))
    atom_cap = config.exact_atom_cap if atom_cap is None else atom_cap
    source_index, source_atoms, source_weights = a.support()
    target_index, target_atoms, target_weights = b.support()
    atoms = source_weights.size + target_weights.size
    if atoms > atom_cap:
        raise SolverResourceError(
            ERROR_MESSAGES['ATOM_CAP'].format(atoms, atom_cap),
            {'atoms': atoms, 'cap': atom_cap}
        )

    costs = periodic_distance_matrix(source_atoms, target_atoms) ** p
    plan, log = ot.emd(
        np.ascontiguousarray(source_weights), np.ascontiguousarray(target_weights), costs,
        numItermax=EMD_MAX_ITER, log=True,
    )
    if log.get('warning'):
        log_with_timestamp(f"Network simplex: {log['warning']}", _LOGGER_NAME, "warning")
    if log.get('result_code') != 1:
        raise SolverError(
            "Network simplex did not reach an optimal vertex",
            {'result_code': log.get('result_code'), 'warning': log.get('warning')}
        )

    cost = float(np.sum(plan * costs))
    sparse = None
    if keep_plan:
        sparse = TransportPlan.from_dense(plan, source_index, target_index, a.weights, b.weights)
    return _result(cost, p, 'exact', plan=sparse)


def _epsilon_schedule(costs: np.ndarray, epsilon: float) -> list:
    schedule = []
    current = 0.5 * float(costs.mean())
    while current > epsilon:
        schedule.append(current)
        current /= 2.0
    schedule.append(epsilon)
    return schedule


def _round_to_polytope(plan: np.ndarray, source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Scale rows and columns down to the marginals, then spread the missing mass."""
    rows = plan.sum(axis=1)
    plan = plan * np.minimum(1.0, np.divide(source, rows, out=np.ones_like(rows), where=rows > 0))[:, None]
    cols = plan.sum(axis=0)
    plan = plan * np.minimum(1.0, np.divide(target, cols, out=np.ones_like(cols), where=cols > 0))[None, :]
    missing_rows = np.clip(source - plan.sum(axis=1), 0.0, None)
    missing_cols = np.clip(target - plan.sum(axis=0), 0.0, None)
    total = missing_rows.sum()
    if total > 0:
        plan = plan + np.outer(missing_rows, missing_cols) / total
    return plan


def entropic_wasserstein(a: DiscreteMeasure, b: DiscreteMeasure, p: float, epsilon: float,
                         max_iter: Optional[int] = None, keep_plan: bool = True,
                         tol: float = 1e-9) -> OTResult:
    """
    Log-domain Sinkhorn with epsilon halved from half the mean cost down to
    epsilon, followed by rounding onto the transport polytope.

    max_iter bounds the iterations of each epsilon stage. A final marginal
    violation above 1e-6 marks the result as not converged; the rounded
    cost stays a valid upper bound either way.
    """
    _check_p(p)
    if not epsilon > 0:
        raise InvalidInputError("epsilon must be > 0", {'epsilon': epsilon})
    if a.d != b.d:
        raise InvalidInputError(ERROR_MESSAGES['DIMENSION_MISMATCH'].format(a.d, b.d))
    max_iter = config.sinkhorn_max_iter if max_iter is None else int(max_iter)

    source_index, source_atoms, source = a.support()
    target_index, target_atoms, target = b.support()
    costs = periodic_distance_matrix(source_atoms, target_atoms) ** p
    log_source, log_target = np.log(source), np.log(target)

    f = np.zeros(source.size)
    g = np.zeros(target.size)
    iterations = 0
    violation = float('inf')
    schedule = _epsilon_schedule(costs, epsilon)
    for stage, eps in enumerate(schedule):
        # intermediate stages only warm-start the potentials
        target_violation = tol if stage == len(schedule) - 1 else TOLERANCES['sinkhorn_marginal']
        for step in range(max_iter):
            f = -eps * logsumexp((g[None, :] - costs) / eps + log_target[None, :], axis=1)
            g = -eps * logsumexp((f[:, None] - costs) / eps + log_source[:, None], axis=0)
            iterations += 1
            if (step + 1) % SINKHORN_CHECK_EVERY == 0 or step == max_iter - 1:
                log_plan = (f[:, None] + g[None, :] - costs) / eps + log_source[:, None] + log_target[None, :]
                violation = float(np.abs(np.exp(logsumexp(log_plan, axis=1)) - source).sum())
                if violation < target_violation:
                    break

    plan = np.exp((f[:, None] + g[None, :] - costs) / epsilon + log_source[:, None] + log_target[None, :])
    converged = violation < TOLERANCES['sinkhorn_marginal']
    warnings: Tuple[str, ...] = ()
    if not converged:
        message = f"Sinkhorn stopped with marginal violation {violation:.3g} at epsilon={epsilon}"
        warnings = (message,)
        log_with_timestamp(message, _LOGGER_NAME, "warning")

    rounded = _round_to_polytope(plan, source, target)
    cost = float(np.sum(rounded * costs))
    sparse = None
    if keep_plan:
        sparse = TransportPlan.from_dense(rounded, source_index, target_index, a.weights, b.weights)
    return _result(
        cost, p, 'entropic', plan=sparse, converged=converged, iterations=iterations,
        marginal_violation=violation, epsilon=epsilon, warnings=warnings,
    )


def solve(a: DiscreteMeasure, b: DiscreteMeasure, p: float, method: Method = 'exact',
          epsilon: Optional[float] = None, max_iter: Optional[int] = None,
          keep_plan: bool = False) -> OTResult:
    """Dispatch to the exact or the entropic solver."""
    if method == 'exact':
        return exact_wasserstein(a, b, p, keep_plan=keep_plan)
    if method == 'entropic':
        if epsilon is None:
            raise InvalidInputError("the entropic solver needs epsilon")
        return entropic_wasserstein(a, b, p, epsilon, max_iter=max_iter, keep_plan=keep_plan)
    raise InvalidInputError(f"Unknown solver: {method}", {'method': method})


def explicit_smoothing_plan_cost(kernel: KernelSpec, h: Union[float, Bandwidth], p: float) -> float:
    """W_p cost C_0 h of the coupling that spreads each atom over its kernel."""
    return kernel_C0(kernel, p) * as_bandwidth(h)


def empirical_vs_density_wasserstein(sample: EmpiricalMeasure, density: DensitySpec, grid: Grid,
                                     p: float, method: Method = 'exact',
                                     epsilon: Optional[float] = None,
                                     max_iter: Optional[int] = None) -> WassersteinEstimate:
    """W_p(mu_n, quantize(density)) and the quantization slack sqrt(d)/(2N)."""
    result = solve(sample.to_discrete(), quantize(density, grid), p, method, epsilon, max_iter)
    return WassersteinEstimate(
        value=result.wasserstein, quantization_slack=grid.quantization_slack,
        method=method, result=result,
    )


def smoothed_vs_density_wasserstein(sample: EmpiricalMeasure, density: DensitySpec,
                                    kernel: KernelSpec, h: Union[float, Bandwidth], grid: Grid,
                                    p: float, method: Method = 'exact',
                                    epsilon: Optional[float] = None,
                                    max_iter: Optional[int] = None) -> WassersteinEstimate:
    """W_p between the quantized kernel density estimate and quantize(density)."""
    smoothed = quantize_field(kde_field(sample, kernel, h, grid, method='direct'))
    result = solve(smoothed, quantize(density, grid), p, method, epsilon, max_iter)
    return WassersteinEstimate(
        value=result.wasserstein, quantization_slack=2.0 * grid.quantization_slack,
        method=method, result=result,
    )
