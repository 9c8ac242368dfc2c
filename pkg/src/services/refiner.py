"""
Pose Refinement Service

Contact-guided optimization of hand parameters on a target object: attract
anchors to their mapped contact regions, keep joints anatomically plausible
and push vertices out of the object.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..config import RefineConfig
from ..core.mesh import TriMesh
from ..core.sdf import SdfGrid
from ..exceptions import EmptyContactsError, NonFiniteError, ValidationError
from ..hand.rig import HandParams, HandRig
from .contact import ContactnessField
from .energies import EnergyBreakdown, total_energy_and_gradient
from .optim import AdamOptimizer, group_scales

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RefineProblem:
    rig: HandRig
    init: HandParams
    target_mesh: TriMesh
    target_sdf: SdfGrid
    contacts: ContactnessField
    config: RefineConfig = RefineConfig()

    def __post_init__(self) -> None:
        if self.contacts.vertex_count != self.target_mesh.n_vertices:
            raise ValidationError(
                f"Contact field covers {self.contacts.vertex_count} vertices, "
                f"target mesh has {self.target_mesh.n_vertices}"
            )

    def evaluate(self, params: HandParams) -> tuple[EnergyBreakdown, np.ndarray]:
        return total_energy_and_gradient(
            params.flat(), self.rig, self.contacts, self.target_mesh, self.target_sdf, self.config.weights
        )


@dataclass(frozen=True, eq=False)
class RefineReport:
    params: HandParams
    trace: np.ndarray  # (iterations, 4): consis, anat, intp, total
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def initial(self) -> EnergyBreakdown:
        return EnergyBreakdown(*self.trace[0])

    @property
    def final(self) -> EnergyBreakdown:
        return EnergyBreakdown(*self.trace[-1])


def refine(problem: RefineProblem) -> RefineReport:
    """Minimize the weighted contact/anatomy/penetration objective with Adam."""
    config = problem.config
    if problem.contacts.total_gamma <= 0:
        raise EmptyContactsError()

    optimizer = AdamOptimizer(config.adam, config.iterations, group_scales(config.adam))
    x = problem.init.flat()
    trace: list[tuple[float, float, float, float]] = []
    best = np.inf
    stall = 0
    converged = False

    for iteration in range(config.iterations):
        energy, grad = total_energy_and_gradient(
            x, problem.rig, problem.contacts, problem.target_mesh, problem.target_sdf, config.weights
        )
        if not np.isfinite(energy.total):
            raise NonFiniteError(iteration, "energy")
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(iteration, "gradient")
        trace.append(energy.as_row())

        if energy.total < best - config.early_exit_tolerance:
            best = energy.total
            stall = 0
        else:
            stall += 1
        if stall >= config.early_exit_window:
            converged = True
            logger.debug(f"Refine early exit at iteration {iteration}: no improvement for {stall} iterations")
            break

        x = HandParams.from_flat(optimizer.step(x, grad, iteration)).flat()

        if iteration % 100 == 0:
            logger.debug(
                f"refine it {iteration}: consis {energy.consis:.3e} anat {energy.anat:.3e} "
                f"intp {energy.intp:.3e} total {energy.total:.3e}"
            )

    report = RefineReport(HandParams.from_flat(x), np.asarray(trace), converged)
    logger.info(
        f"✅ Refined in {report.iterations} iterations: total {report.initial.total:.3e} -> {report.final.total:.3e}"
    )
    return report


def windowed_non_increasing(totals: np.ndarray, window: int = 50, rtol: float = 1e-9) -> bool:
    """True when every value is no larger than the value ``window`` iterations earlier."""
    totals = np.asarray(totals, dtype=np.float64)
    if len(totals) <= window:
        return True
    earlier, later = totals[:-window], totals[window:]
    return bool(np.all(later <= earlier + rtol * np.maximum(1.0, np.abs(earlier))))
