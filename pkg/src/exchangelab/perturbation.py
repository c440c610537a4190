"""Fourth-order energy shifts for two photon modes in a two-level medium.

The model: N identical two-level atoms, all in the ground state, dressed
by n1 and n2 photons in two off-resonant modes with detunings delta_1
and delta_2.  The coupling V moves one photon into one atomic
excitation (and back) with matrix element M times the usual bosonic
square root.  Fourth-order Rayleigh-Schrodinger corrections then
contain terms proportional to n1*n2 - a cross-Kerr-like shift - which
cancel exactly when the level energies are real.

Decoherence is modelled by subtracting i*w from the energies of a
configurable class of levels (a width rule).  Widths on excited-atom
levels preserve the cancellation; widths on the photon-exchanged
ground-state levels (the physically unjustified choice) leave a residue
whose imaginary part exceeds its real part by delta/w, which is the
closed-form result evaluated by :func:`franson_formula`.

The cross coefficient is extracted from the two-atom-and-up pair part
of the fourth order, E4(N) - N*E4(1), because a single atom already
contributes an n1*n2 saturation shift that is linear in N and has
nothing to do with the interatomic exchange terms under study.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations, product
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "SingularityError",
    "WidthRule",
    "CollisionModelParams",
    "PerturbationProblem",
    "PerturbationResult",
    "CrossFit",
    "build_problem",
    "rspt_energy",
    "cross_fit",
    "cross_coefficient",
    "franson_formula",
]

#: Valid width-rule selectors.
WIDTH_SELECTORS = ("none", "excited-atom-states", "exchanged-photon-ground-states")

#: Reference-gap threshold, relative to the problem's energy scale.
GAP_TOLERANCE = 1e-9


class SingularityError(RuntimeError):
    """An intermediate level (nearly) degenerate with the reference."""


@dataclass(frozen=True)
class WidthRule:
    """Which class of levels receives the -i*w energy shift.

    Selectors:

    - ``none``: all energies stay real.
    - ``excited-atom-states``: every excited atom contributes -i*w, so
      doubly excited levels are shifted by -2i*w.  (A width per excited
      atom, not per state: collisions broaden each excited atom
      independently, and only this reading keeps the cancellation that
      holds for real energies.)
    - ``exchanged-photon-ground-states``: the all-ground levels with one
      photon moved between the modes (n1 +- 1, n2 -+ 1) are shifted by
      -i*w.
    """

    selector: str
    width: float = 0.0

    def __post_init__(self):
        if self.selector not in WIDTH_SELECTORS:
            known = ", ".join(WIDTH_SELECTORS)
            raise ValueError(f"unknown selector {self.selector!r}; expected one of {known}")
        if not np.isfinite(self.width) or self.width < 0:
            raise ValueError("width must be finite and non-negative")
        if self.selector == "none" and self.width != 0.0:
            raise ValueError("selector 'none' requires width 0")


@dataclass(frozen=True)
class CollisionModelParams:
    """Inputs of the collisional-broadening estimate.

    ``delta`` is the common reference detuning; when omitted it defaults
    to the mean of ``delta_1`` and ``delta_2``.  ``width`` is the
    collisional w entering the closed forms; the width used in the
    numerical perturbation is carried by the :class:`WidthRule`.
    ``raman_factor`` is the phenomenological which-way factor f_R.
    """

    coupling: float
    atoms: int
    delta_1: float
    delta_2: float
    delta: Optional[float] = None
    width: float = 0.0
    raman_factor: float = 1.0
    n_1: int = 1
    n_2: int = 1

    def __post_init__(self):
        if not np.isfinite(self.coupling):
            raise ValueError("coupling must be finite")
        if self.atoms < 2:
            raise ValueError("at least two atoms are required (pair terms)")
        for name in ("delta_1", "delta_2"):
            val = getattr(self, name)
            if not np.isfinite(val) or val == 0.0:
                raise ValueError(f"{name} must be finite and non-zero")
        if self.delta_1 == self.delta_2:
            raise ValueError("delta_1 and delta_2 must differ (closed forms diverge)")
        if self.delta is not None and (not np.isfinite(self.delta) or self.delta == 0.0):
            raise ValueError("delta must be finite and non-zero")
        if not np.isfinite(self.width) or self.width < 0:
            raise ValueError("width must be finite and non-negative")
        if not 0.0 < self.raman_factor <= 1.0:
            raise ValueError("raman_factor must lie in (0, 1]")
        if self.n_1 < 1 or self.n_2 < 1:
            raise ValueError("photon numbers must be at least 1")

    @property
    def reference_detuning(self) -> float:
        if self.delta is not None:
            return self.delta
        return 0.5 * (self.delta_1 + self.delta_2)


@dataclass(frozen=True)
class PerturbationProblem:
    """A reference level, its neighbours, and the coupling between them.

    ``states`` are descriptors (opaque to the solver) with the reference
    at ``reference``; ``energies`` may be complex per the width rule;
    ``coupling`` is the real V matrix with zero diagonal; ``classes``
    label states for path diagnostics; ``energy_scale`` sets the
    degeneracy threshold.
    """

    states: Tuple
    energies: np.ndarray
    coupling: np.ndarray
    energy_scale: float
    reference: int = 0
    classes: Tuple[str, ...] = ()

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=complex)
        coupling = np.asarray(self.coupling, dtype=float)
        dim = len(self.states)
        if energies.shape != (dim,) or coupling.shape != (dim, dim):
            raise ValueError("states, energies and coupling sizes disagree")
        if not np.isfinite(energies).all() or not np.isfinite(coupling).all():
            raise ValueError("energies and coupling must be finite")
        if np.max(np.abs(np.diagonal(coupling))) > 0.0:
            raise ValueError("coupling must have zero diagonal")
        if np.max(np.abs(coupling - coupling.T)) > 0.0:
            raise ValueError("coupling must be symmetric")
        if not 0 <= self.reference < dim:
            raise ValueError("reference index out of range")
        if self.energy_scale <= 0 or not np.isfinite(self.energy_scale):
            raise ValueError("energy_scale must be positive and finite")
        classes = self.classes if self.classes else ("intermediate",) * dim
        if len(classes) != dim:
            raise ValueError("classes length disagrees with states")
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "coupling", coupling)
        object.__setattr__(self, "classes", tuple(classes))

    @property
    def dim(self) -> int:
        return len(self.states)


def _atom_states(n_1: int, n_2: int, atoms: int):
    """All levels reachable from |n1, n2, ground> in at most two V steps.

    A state is (photons in mode 1, photons in mode 2, excited atom set);
    which atoms are excited matters for path counting even though the
    matrix elements are atom-independent.
    """
    states = [(n_1, n_2, frozenset())]
    classes = ["reference"]
    for j in range(atoms):
        if n_1 >= 1:
            states.append((n_1 - 1, n_2, frozenset({j})))
            classes.append("one-excitation")
        if n_2 >= 1:
            states.append((n_1, n_2 - 1, frozenset({j})))
            classes.append("one-excitation")
    if n_1 >= 1:
        states.append((n_1 - 1, n_2 + 1, frozenset()))
        classes.append("exchanged-photon")
    if n_2 >= 1:
        states.append((n_1 + 1, n_2 - 1, frozenset()))
        classes.append("exchanged-photon")
    for j, l in combinations(range(atoms), 2):
        pair = frozenset({j, l})
        if n_1 >= 2:
            states.append((n_1 - 2, n_2, pair))
            classes.append("two-excitation")
        if n_1 >= 1 and n_2 >= 1:
            states.append((n_1 - 1, n_2 - 1, pair))
            classes.append("two-excitation")
        if n_2 >= 2:
            states.append((n_1, n_2 - 2, pair))
            classes.append("two-excitation")
    return states, classes


def _coupling_element(state_a, state_b, coupling: float) -> float:
    """V element between two levels (0 unless one excitation apart)."""
    n1a, n2a, exc_a = state_a
    n1b, n2b, exc_b = state_b
    if len(exc_b) == len(exc_a) + 1 and exc_a < exc_b:
        lower, upper = (n1a, n2a), (n1b, n2b)
    elif len(exc_a) == len(exc_b) + 1 and exc_b < exc_a:
        lower, upper = (n1b, n2b), (n1a, n2a)
    else:
        return 0.0
    if upper == (lower[0] - 1, lower[1]):
        return coupling * math.sqrt(lower[0])
    if upper == (lower[0], lower[1] - 1):
        return coupling * math.sqrt(lower[1])
    return 0.0


def _build(params: CollisionModelParams, rule: WidthRule,
           atoms: int) -> PerturbationProblem:
    states, classes = _atom_states(params.n_1, params.n_2, atoms)
    dim = len(states)
    energies = np.zeros(dim, dtype=complex)
    for i, (m1, m2, excited) in enumerate(states):
        energies[i] = ((params.n_1 - m1) * params.delta_1
                       + (params.n_2 - m2) * params.delta_2)
        if rule.selector == "excited-atom-states":
            energies[i] += -1j * rule.width * len(excited)
        elif rule.selector == "exchanged-photon-ground-states":
            if not excited and (m1, m2) != (params.n_1, params.n_2):
                energies[i] += -1j * rule.width
    matrix = np.zeros((dim, dim))
    for i in range(dim):
        for j in range(i + 1, dim):
            element = _coupling_element(states[i], states[j], params.coupling)
            matrix[i, j] = matrix[j, i] = element
    return PerturbationProblem(
        states=tuple(states),
        energies=energies,
        coupling=matrix,
        energy_scale=abs(params.reference_detuning),
        reference=0,
        classes=tuple(classes),
    )


def build_problem(params: CollisionModelParams,
                  rule: WidthRule) -> PerturbationProblem:
    """Assemble the N-atom problem around |n1, n2, all atoms ground>."""
    return _build(params, rule, params.atoms)


@dataclass
class PerturbationResult:
    """Energy corrections by order plus path diagnostics."""

    orders: Mapping[int, complex]
    diagnostics: Dict[str, object] = field(default_factory=dict)
    cross_coefficient: Optional[complex] = None

    def order(self, k: int) -> complex:
        return self.orders[k]


def rspt_energy(problem: PerturbationProblem, order: int = 4) -> PerturbationResult:
    """Rayleigh-Schrodinger corrections through the requested order (max 4).

    Uses the standard nondegenerate expansion for a reference with zero
    diagonal coupling; the fourth order includes the renormalization
    term -E2 * sum |V_0k|^2 / gap_k^2.  Complex level energies enter the
    gaps as-is.
    """
    if order not in (1, 2, 3, 4):
        raise ValueError("order must be between 1 and 4")
    ref = problem.reference
    mask = np.arange(problem.dim) != ref
    u = problem.coupling[ref, mask]
    w_block = problem.coupling[np.ix_(mask, mask)]
    gaps = problem.energies[ref] - problem.energies[mask]
    scale = problem.energy_scale

    tiny = np.abs(gaps) <= GAP_TOLERANCE * scale
    if tiny.any():
        culprit = problem.states[int(np.flatnonzero(mask)[int(np.argmax(tiny))])]
        raise SingularityError(
            f"intermediate state {culprit!r} is degenerate with the reference"
        )

    orders: Dict[int, complex] = {1: 0.0 + 0.0j}
    x = u / gaps
    if order >= 2:
        orders[2] = complex(u @ x)
    if order >= 3:
        orders[3] = complex(x @ w_block @ x)
    if order >= 4:
        wx = w_block @ x
        orders[4] = complex((wx / gaps) @ wx - orders[2] * (u @ (u / gaps ** 2)))

    diagnostics = _path_diagnostics(problem, u, w_block, gaps, mask)
    return PerturbationResult(orders={k: v for k, v in orders.items() if k <= order},
                              diagnostics=diagnostics)


def _path_diagnostics(problem, u, w_block, gaps, mask) -> Dict[str, object]:
    """Count fourth-order paths by middle-state class; record the largest term."""
    classes = [problem.classes[i] for i in np.flatnonzero(mask)]
    nz_u = u != 0.0
    counts: Dict[str, int] = {}
    x = np.abs(u / gaps)
    inv = 1.0 / np.abs(gaps)
    alpha = (x[:, None] * np.abs(w_block)) * inv[None, :]   # |(u_a/d_a) W_ab / d_b|
    beta = np.abs(w_block) * x[None, :]                     # |W_bc (u_c/d_c)|
    max_path = 0.0
    for b in range(len(gaps)):
        n_in = int(np.count_nonzero(nz_u & (w_block[:, b] != 0.0)))
        n_out = int(np.count_nonzero(nz_u & (w_block[b, :] != 0.0)))
        if n_in and n_out:
            counts[classes[b]] = counts.get(classes[b], 0) + n_in * n_out
            max_path = max(max_path, float(alpha[:, b].max() * beta[b, :].max()))
    e2_mag = float(np.abs(u @ (u / gaps)))
    renorm_max = e2_mag * float(np.max(x * inv * np.abs(u))) if len(u) else 0.0
    return {
        "basis_size": problem.dim,
        "path_terms": counts,
        "renormalization_terms": int(np.count_nonzero(nz_u)),
        "max_path_term": max(max_path, renorm_max),
    }


#: Exact polynomial basis for E4 over the occupation grid: every path
#: product of four ladder factors is a polynomial of total degree 2.
_FIT_POWERS = ((0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1))
_FIT_GRID = tuple(product((1, 2, 3), repeat=2))


@dataclass
class CrossFit:
    """Bilinear fit of the fourth order over the photon-number grid.

    ``value`` is the n1*n2 coefficient of the pair part
    E4(N) - N * E4(1); ``total_value`` of the raw E4(N); and
    ``single_atom_value`` of E4(1).  ``path_scale`` is the largest
    individual fourth-order path term on the grid, the natural yardstick
    for calling the coefficient zero.
    """

    value: complex
    total_value: complex
    single_atom_value: complex
    fit_residual: float
    path_scale: float
    grid: Dict[Tuple[int, int], complex]


def _fit_bilinear(values: Dict[Tuple[int, int], complex]) -> Tuple[np.ndarray, float]:
    design = np.array([[float(n1 ** p * n2 ** q) for p, q in _FIT_POWERS]
                       for n1, n2 in _FIT_GRID])
    target = np.array([values[point] for point in _FIT_GRID])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.max(np.abs(design @ coef - target)))
    return coef, residual


def cross_fit(params: CollisionModelParams, rule: WidthRule) -> CrossFit:
    """Extract the n1*n2 coefficient of the fourth order over the grid.

    The fourth-order energy is evaluated on n1, n2 in {1, 2, 3}^2 for
    the full N-atom problem and for a single atom; both are fitted to
    the exact degree-2 polynomial basis, and the pair coefficient is
    read off the difference.
    """
    totals: Dict[Tuple[int, int], complex] = {}
    singles: Dict[Tuple[int, int], complex] = {}
    path_scale = 0.0
    for n1, n2 in _FIT_GRID:
        point = replace(params, n_1=n1, n_2=n2)
        full = rspt_energy(_build(point, rule, params.atoms), order=4)
        single = rspt_energy(_build(point, rule, 1), order=4)
        totals[(n1, n2)] = full.order(4)
        singles[(n1, n2)] = single.order(4)
        path_scale = max(path_scale, float(full.diagnostics["max_path_term"]))

    coef_total, res_total = _fit_bilinear(totals)
    coef_single, res_single = _fit_bilinear(singles)
    residual = max(res_total, res_single)
    magnitude = max(path_scale, float(np.max(np.abs(list(totals.values())))), 1e-300)
    if residual > 1e-6 * magnitude:
        raise ValueError(
            f"polynomial fit residual {residual:.3e} is too large for scale "
            f"{magnitude:.3e}; the fourth order is not a degree-2 polynomial"
        )
    cross_index = _FIT_POWERS.index((1, 1))
    total_value = complex(coef_total[cross_index])
    single_value = complex(coef_single[cross_index])
    return CrossFit(
        value=total_value - params.atoms * single_value,
        total_value=total_value,
        single_atom_value=single_value,
        fit_residual=residual,
        path_scale=path_scale,
        grid=totals,
    )


def cross_coefficient(params: CollisionModelParams, rule: WidthRule) -> complex:
    """The n1*n2 pair coefficient of the fourth-order energy."""
    return cross_fit(params, rule).value


def franson_formula(params: CollisionModelParams) -> Tuple[complex, complex]:
    """Closed-form nonlinear shift and its imaginary companion.

    Returns (dE, dE') with

        dE  = -2 M^4 N^2 n1 n2 f_R w^2 / (delta^3 (delta_1 - delta_2)^2)
        dE' = -2i M^4 N^2 n1 n2 f_R w  / (delta^2 (delta_1 - delta_2)^2)

    so |dE'| / |dE| = delta / w identically.  Width zero gives (0, 0).
    """
    m4 = params.coupling ** 4
    n_sq = params.atoms ** 2
    delta = params.reference_detuning
    split = params.delta_1 - params.delta_2
    common = 2.0 * m4 * n_sq * params.n_1 * params.n_2 * params.raman_factor
    d_e = complex(-common * params.width ** 2 / (delta ** 3 * split ** 2))
    d_e_prime = -1j * common * params.width / (delta ** 2 * split ** 2)
    return d_e, d_e_prime
