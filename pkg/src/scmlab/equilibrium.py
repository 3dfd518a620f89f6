"""Equilibrium branches and specialization transitions.

This module finds local minima of beta*f over site-symmetric order
parameters, continues them in the load alpha, and locates the three
critical loads that organize the phase diagram:

* ``alpha_s`` (spinodal): a specialized minimum first coexists with the
  unspecialized one (first-order systems only).
* ``alpha_c`` (transition): either the free energies of the competing
  minima cross (first order) or the unspecialized state loses stability
  continuously (second order).
* ``alpha_d`` (disappearance): the suboptimal branch stops resembling a
  weakly ordered state; located as the sign change of the student-student
  overlap C along that branch (first-order sigmoidal systems, K >= 3).

An infinite-width mode (`large_K_limit`) solves the same problem after
taking K to infinity analytically, where each specialized unit decouples
and the transition values have closed stationarity conditions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import optimize

from .activations import get_activation
from .free_energy import (
    EntropyDomainError,
    beta_f_value,
    entropy_site,
    grad_beta_f,
    hessian_site,
)
from .gen_error import eps_g_site
from .order_params import InvalidStateError, SiteSymmetricState

__all__ = [
    "BranchLabel",
    "LABEL_TOL",
    "classify",
    "MinimizeResult",
    "minimize_from",
    "default_starts",
    "multistart",
    "BranchPoint",
    "EquilibriumBranch",
    "trace_branches",
    "symmetric_stationary",
    "symmetric_stability_loss",
    "locate_spinodal",
    "TransitionResult",
    "locate_transition",
    "locate_disappearance",
    "PhaseSummary",
    "phase_summary",
    "LimitPoint",
    "LimitBranch",
    "large_K_limit",
    "limit_unspecialized_eps",
    "limit_specialized_overlap",
]

log = logging.getLogger(__name__)

LABEL_TOL = 1e-6
GRAD_TOL = 1e-10
DEDUPE_TOL = 1e-6
MATCH_TOL = 0.05


class BranchLabel(str, Enum):
    UNSPECIALIZED = "Unspecialized"
    POSITIVE_SPECIALIZED = "PositiveSpecialized"
    NEGATIVE_SPECIALIZED = "NegativeSpecialized"


def classify(state: SiteSymmetricState, tol: float = LABEL_TOL) -> BranchLabel:
    """Label a state by the sign of the diagonal-vs-offdiagonal overlap gap."""
    if state.K == 1:
        gap = state.R
    else:
        gap = state.R - state.S
    if abs(gap) <= tol:
        return BranchLabel.UNSPECIALIZED
    return BranchLabel.POSITIVE_SPECIALIZED if gap > 0 else BranchLabel.NEGATIVE_SPECIALIZED


@dataclass(frozen=True)
class MinimizeResult:
    """Outcome of a local minimization of beta*f at fixed alpha."""

    state: SiteSymmetricState
    alpha: float
    beta_f: float
    eps_g: float
    grad_norm: float
    min_eig: float
    label: BranchLabel
    converged: bool
    iterations: int

    @property
    def is_minimum(self) -> bool:
        return self.converged and self.min_eig > -1e-9


def _pack(state_or_tuple, K: int) -> np.ndarray:
    if isinstance(state_or_tuple, SiteSymmetricState):
        s = state_or_tuple
        return np.array([s.R]) if K == 1 else np.array([s.R, s.S, s.C])
    t = np.atleast_1d(np.asarray(state_or_tuple, dtype=float))
    if K == 1:
        return t[:1].copy()
    if t.size == 1:
        return np.array([t[0], 0.0, 0.0])
    if t.size != 3:
        raise ValueError(f"start must have 1 or 3 components, got {t.size}")
    return t.copy()


def _to_state(K: int, x: np.ndarray) -> SiteSymmetricState:
    if K == 1:
        return SiteSymmetricState(K=1, R=float(x[0]))
    return SiteSymmetricState(K=K, R=float(x[0]), S=float(x[1]), C=float(x[2]))


class _SiteObjective:
    """beta*f restricted to site-symmetric coordinates, with analytic derivatives.

    Evaluation returns None outside the admissible domain instead of
    raising, which the line searches use to back off the boundary.
    """

    def __init__(self, activation, K: int, alpha: float):
        self.activation = get_activation(activation)
        self.K = K
        self.alpha = alpha

    def value(self, x: np.ndarray):
        try:
            return beta_f_value(self.activation, _to_state(self.K, x), self.alpha)
        except (EntropyDomainError, InvalidStateError):
            return None

    def derivs(self, x: np.ndarray):
        state = _to_state(self.K, x)
        f = beta_f_value(self.activation, state, self.alpha)
        g_full = grad_beta_f(self.activation, state, self.alpha)
        if self.K == 1:
            R = state.R
            eps_dd = _single_eps_second(self.activation, R)
            ent_dd = -(1.0 + R * R) / (1.0 - R * R) ** 2
            H = np.array([[self.alpha * eps_dd - ent_dd]])
            return f, g_full[:1], H
        return f, g_full, hessian_site(self.activation, state, self.alpha)

    def grad_floor(self, x: np.ndarray) -> float:
        """Rounding floor of the analytic gradient at x.

        The entropy gradient cancels terms of size |D|/A and K|R-S|/B
        against alpha*K-sized error terms; near the domain boundary that
        cancellation limits the attainable gradient norm well above the
        nominal tolerance, and convergence must be declared at the floor.
        """
        K = self.K
        if K == 1:
            A = max(1.0 - x[0] * x[0], 1e-300)
            scale = self.alpha + (abs(x[0]) + 1.0) / A
            return 1e-13 * scale
        R, S, C = x
        D = R + (K - 1) * S
        A = max(1.0 + (K - 1) * C - D * D, 1e-300)
        B = max(1.0 - C - (R - S) ** 2, 1e-300)
        scale = self.alpha * K + K * (abs(D) + 1.0) / A + K * (abs(R - S) + 1.0) / B
        return 1e-13 * scale


def _single_eps_second(activation, R: float) -> float:
    a = get_activation(activation)
    if a.name == "erf":
        return -(2.0 / math.pi) * R * (4.0 - R * R) ** -1.5
    return -1.0 / (2.0 * math.pi * math.sqrt(max(1.0 - R * R, 1e-300)))


def minimize_from(activation, K: int, alpha: float, start,
                  grad_tol: float = GRAD_TOL, max_iter: int = 300) -> MinimizeResult:
    """Damped Newton descent of beta*f from one starting point.

    Steps are Newton directions with the Hessian shifted to positive
    definiteness when needed, backtracked both on the Armijo condition and
    on domain violations (the entropy diverges at the boundary, so plain
    Newton would overshoot).  A stationary point with a downhill curvature
    direction is escaped along that direction, so the returned point is a
    local minimum whenever the iteration converges.
    """
    obj = _SiteObjective(activation, K, alpha)
    x = _pack(start, K)
    if obj.value(x) is None:
        raise InvalidStateError(f"start {tuple(x)} outside the admissible domain")

    escapes = 0
    it = 0
    decrement_zero = False
    while it < max_iter:
        it += 1
        f, g, H = obj.derivs(x)
        gnorm = float(np.linalg.norm(g))
        eigs = np.linalg.eigvalsh(H)
        if gnorm < max(grad_tol, obj.grad_floor(x)):
            if eigs[0] > -1e-9 or escapes >= 6:
                break
            # stationary but not a minimum: slide off along the soft direction
            v = np.linalg.eigh(H)[1][:, 0]
            moved = False
            for sgn in (1.0, -1.0):
                t = 1e-4
                while t <= 0.5:
                    xt = x + sgn * t * v
                    ft = obj.value(xt)
                    if ft is not None and ft < f - 1e-14:
                        x, moved = xt, True
                        break
                    t *= 3.0
                if moved:
                    break
            escapes += 1
            if not moved:
                break
            continue
        shift = 0.0 if eigs[0] > 1e-10 else (1e-8 - eigs[0])
        try:
            d = np.linalg.solve(H + shift * np.eye(len(x)), -g)
        except np.linalg.LinAlgError:
            d = -g
        slope = float(g @ d)
        # near the domain wall gradient round-off can exceed grad_floor; a
        # machine-zero Newton decrement on a definite Hessian is still a
        # certified minimum
        if shift == 0.0 and gnorm < 1e-3 and abs(slope) < 1e-15 * max(1.0, abs(f)):
            decrement_zero = True
            break
        if slope >= 0.0:
            d, slope = -g, -float(g @ g)
        t = 1.0
        accepted = False
        # once the predicted decrease falls under the ulp of f the Armijo
        # test cannot pass; plain damped Newton is quadratically safe there
        endgame = gnorm < 1e-6 or abs(slope) < 1e-12 * max(1.0, abs(f))
        for _ in range(60):
            xt = x + t * d
            ft = obj.value(xt)
            if ft is None:
                t *= 0.5
                continue
            if endgame or ft <= f + 1e-4 * t * slope:
                x = xt
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break

    f, g, H = obj.derivs(x)
    gnorm = float(np.linalg.norm(g))
    min_eig = float(np.linalg.eigvalsh(H).min())
    state = _to_state(K, x)
    return MinimizeResult(
        state=state, alpha=alpha, beta_f=f, eps_g=eps_g_site(activation, state),
        grad_norm=gnorm, min_eig=min_eig, label=classify(state),
        converged=decrement_zero or gnorm < max(grad_tol, obj.grad_floor(x)),
        iterations=it,
    )


def default_starts(K: int) -> list[tuple]:
    """Standard multistart battery: weakly ordered seeds with and without a
    symmetry-breaking nudge, a strongly specialized seed, and (K >= 3) an
    anti-aligned seed.  Seeds that fall outside the admissible domain for
    the given K are dropped by the caller."""
    eps, delta = 1e-3, 1e-4
    if K == 1:
        return [(eps,), (0.5,), (0.9,), (-0.5,)]
    starts = [
        (eps, eps, 0.0),
        (eps + delta, eps, 0.0),
        (eps - delta, eps, 0.0),
        (0.9, 0.01, 0.01),
    ]
    # scaled specialized seed stays admissible at any K (the fixed one above
    # leaves the domain once (K-1)*S makes the aligned combination too long)
    R0, S0 = 0.75, 0.8 / K
    D0 = R0 + (K - 1) * S0
    C0 = max(0.02, 1.2 * (D0 * D0 - 1.0) / max(K - 1, 1))
    starts.append((R0, S0, C0))
    if K >= 3:
        starts.append((-0.3, 1.2 / K, 0.2 / K))
    return starts


def multistart(activation, K: int, alpha: float, extra_starts=(),
               grad_tol: float = GRAD_TOL) -> list[MinimizeResult]:
    """Run the start battery plus any extra seeds; return deduplicated local
    minima sorted by free energy (global first)."""
    found: list[MinimizeResult] = []
    for start in list(default_starts(K)) + list(extra_starts):
        try:
            res = minimize_from(activation, K, alpha, start, grad_tol=grad_tol)
        except InvalidStateError:
            continue
        if not res.is_minimum:
            continue
        xr = _pack(res.state, K)
        if any(np.max(np.abs(xr - _pack(o.state, K))) < DEDUPE_TOL for o in found):
            continue
        found.append(res)
    found.sort(key=lambda r: r.beta_f)
    return found


@dataclass(frozen=True)
class BranchPoint:
    alpha: float
    state: SiteSymmetricState
    beta_f: float
    eps_g: float
    grad_norm: float
    min_eig: float
    label: BranchLabel


@dataclass
class EquilibriumBranch:
    """A family of local minima continued over an increasing alpha grid."""

    activation: str
    K: int
    points: list[BranchPoint] = field(default_factory=list)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([p.alpha for p in self.points])

    @property
    def label(self) -> BranchLabel:
        return self.points[-1].label

    def nearest_state(self) -> SiteSymmetricState:
        return self.points[-1].state


def _result_point(res: MinimizeResult) -> BranchPoint:
    return BranchPoint(alpha=res.alpha, state=res.state, beta_f=res.beta_f,
                       eps_g=res.eps_g, grad_norm=res.grad_norm,
                       min_eig=res.min_eig, label=res.label)


def trace_branches(activation, K: int, alphas) -> list[EquilibriumBranch]:
    """Continue all local minima across an increasing alpha grid.

    At each grid point the start battery is augmented with the previous
    state of every live branch; minima are matched to branches by nearest
    previous state (threshold 0.05 in max overlap difference), unmatched
    minima open new branches, and unmatched branches terminate.
    """
    a = get_activation(activation)
    alphas = np.asarray(list(alphas), dtype=float)
    if alphas.size and np.any(np.diff(alphas) <= 0):
        raise ValueError("alpha grid must be strictly increasing")
    branches: list[EquilibriumBranch] = []
    live: list[EquilibriumBranch] = []
    for alpha in alphas:
        seeds = [b.nearest_state() for b in live]
        results = multistart(a, K, float(alpha), extra_starts=seeds)
        assigned: dict[int, MinimizeResult] = {}
        unmatched: list[MinimizeResult] = []
        for res in results:
            xr = _pack(res.state, K)
            best, best_d = None, MATCH_TOL
            for idx, b in enumerate(live):
                if idx in assigned:
                    continue
                d = float(np.max(np.abs(xr - _pack(b.nearest_state(), K))))
                if d < best_d:
                    best, best_d = idx, d
            if best is None:
                unmatched.append(res)
            else:
                assigned[best] = res
        next_live = []
        for idx, b in enumerate(live):
            if idx in assigned:
                b.points.append(_result_point(assigned[idx]))
                next_live.append(b)
        for res in unmatched:
            b = EquilibriumBranch(activation=a.name, K=K,
                                  points=[_result_point(res)])
            branches.append(b)
            next_live.append(b)
        live = next_live
    return branches


# ---------------------------------------------------------------------------
# symmetric (R = S) branch


def symmetric_stationary(activation, K: int, alpha: float, seed=None) -> MinimizeResult:
    """Stationary point of beta*f restricted to the symmetric subspace R = S.

    On that subspace the S-component of the full gradient is (K-1) times
    the R-component, so a stationary point of the restricted two-variable
    problem is stationary for the full problem as well.  The reported
    Hessian eigenvalue is that of the full 3x3 site Hessian, so the result
    also tells whether the symmetric point is a true local minimum.
    """
    if K < 2:
        raise ValueError("symmetric branch needs K >= 2")
    obj = _SiteObjective(activation, K, alpha)

    def derivs(rc):
        r, c = rc
        x = np.array([r, r, c])
        f, g, H = obj.derivs(x)
        g2 = np.array([g[0] + g[1], g[2]])
        H2 = np.array([
            [H[0, 0] + 2.0 * H[0, 1] + H[1, 1], H[0, 2] + H[1, 2]],
            [H[0, 2] + H[1, 2], H[2, 2]],
        ])
        return f, g2, H2

    def value(rc):
        return obj.value(np.array([rc[0], rc[0], rc[1]]))

    seeds = []
    if seed is not None:
        if isinstance(seed, SiteSymmetricState):
            seeds.append((seed.R, seed.C))
        else:
            seeds.append(tuple(seed))
    seeds += [(0.1, 0.0), (0.5 / K, 0.0), (0.02, 0.0)]

    for s0 in seeds:
        rc = np.array(s0, dtype=float)
        if value(rc) is None:
            continue
        ok = False
        for _ in range(200):
            f, g2, H2 = derivs(rc)
            gn = np.linalg.norm(g2)
            if gn < max(GRAD_TOL, obj.grad_floor(np.array([rc[0], rc[0], rc[1]]))):
                ok = True
                break
            eigs = np.linalg.eigvalsh(H2)
            shift = 0.0 if eigs[0] > 1e-10 else (1e-8 - eigs[0])
            d = np.linalg.solve(H2 + shift * np.eye(2), -g2)
            slope = float(g2 @ d)
            # near the A -> 0 wall (large alpha) gradient round-off can sit
            # above grad_floor; a machine-zero Newton decrement on a definite
            # Hessian still certifies stationarity
            if shift == 0.0 and gn < 1e-3 and abs(slope) < 1e-15 * max(1.0, abs(f)):
                ok = True
                break
            if slope >= 0.0:
                d, slope = -g2, -float(g2 @ g2)
            t, stepped = 1.0, False
            endgame = gn < 1e-6 or abs(slope) < 1e-12 * max(1.0, abs(f))
            for _ in range(60):
                trial = rc + t * d
                ft = value(trial)
                if ft is None:
                    t *= 0.5
                    continue
                # near convergence the decrease is below the ulp of f;
                # accept the damped Newton step on feasibility alone
                if endgame or ft <= f + 1e-4 * t * slope:
                    rc, stepped = trial, True
                    break
                t *= 0.5
            if not stepped:
                break
        if ok:
            x = np.array([rc[0], rc[0], rc[1]])
            f, g, H = obj.derivs(x)
            state = _to_state(K, x)
            return MinimizeResult(
                state=state, alpha=alpha, beta_f=f,
                eps_g=eps_g_site(activation, state),
                grad_norm=float(np.linalg.norm(g)),
                min_eig=float(np.linalg.eigvalsh(H).min()),
                label=classify(state), converged=True, iterations=0,
            )
    raise RuntimeError(f"symmetric stationary point not found at alpha={alpha}")


def symmetric_stability_loss(activation, K: int, bracket=None,
                             tol: float = 1e-3) -> float:
    """Load at which the symmetric stationary point stops being a minimum
    (smallest site-Hessian eigenvalue crosses zero).  Diagnostic for second
    order transitions and for the instability of the weakly ordered branch.

    Without an explicit bracket the upper end is found by geometric
    expansion from the lower end, which keeps evaluations close to the
    root (far past it the symmetric state hugs the domain boundary and
    everything becomes ill conditioned)."""
    cache: dict[float, MinimizeResult] = {}

    def min_eig(alpha: float) -> float:
        seed = None
        if cache:
            seed = cache[min(cache, key=lambda s: abs(s - alpha))].state
        res = symmetric_stationary(activation, K, alpha, seed=seed)
        cache[alpha] = res
        return res.min_eig

    if bracket is not None:
        lo, hi = bracket
        flo, fhi = min_eig(lo), min_eig(hi)
        if flo <= 0.0 or fhi >= 0.0:
            raise ValueError(
                f"bracket ({lo}, {hi}) does not straddle the stability loss: "
                f"min eig {flo:.3e} at lo, {fhi:.3e} at hi"
            )
    else:
        lo = 1.5
        if min_eig(lo) <= 0.0:
            raise ValueError(f"symmetric state already unstable at alpha={lo}")
        cap = max(400.0, 30.0 * K)
        hi = lo
        while True:
            nxt = hi * 1.6
            if nxt > cap:
                raise ValueError(f"no stability loss found below alpha={cap}")
            if min_eig(nxt) < 0.0:
                lo, hi = hi, nxt
                break
            hi = nxt
    return float(optimize.brentq(min_eig, lo, hi, xtol=tol))


class _SpecializedTracker:
    """Continuation-aware solver for the positively specialized minimum."""

    def __init__(self, activation, K: int):
        self.activation = get_activation(activation)
        self.K = K
        self.cache: dict[float, SiteSymmetricState] = {}

    def solve(self, alpha: float):
        seeds: list = []
        if self.cache:
            near = min(self.cache, key=lambda s: abs(s - alpha))
            seeds.append(self.cache[near])
        seeds += [s for s in default_starts(self.K) if len(s) == 3 and s[0] > 0.5]
        for seed in seeds:
            try:
                res = minimize_from(self.activation, self.K, alpha, seed)
            except InvalidStateError:
                continue
            if res.is_minimum and res.label is BranchLabel.POSITIVE_SPECIALIZED \
                    and res.state.R - res.state.S > 1e-3:
                self.cache[alpha] = res.state
                return res
        return None


class _SuboptimalTracker:
    """Continuation of the weakly ordered branch through and past its
    stability loss, where it deforms into the anti-aligned (R < S) state."""

    def __init__(self, activation, K: int):
        self.activation = get_activation(activation)
        self.K = K
        self.cache: dict[float, SiteSymmetricState] = {}

    def solve(self, alpha: float) -> MinimizeResult:
        seeds: list = []
        if self.cache:
            near = min(self.cache, key=lambda s: abs(s - alpha))
            st = self.cache[near]
            seeds.append(st)
            # nudge toward the anti-aligned side in case the seed sits on
            # the symmetric saddle, whose escape could otherwise go either way
            seeds.append((st.R - 1e-3, st.S + 1e-3 / (self.K - 1), st.C))
        else:
            sym = symmetric_stationary(self.activation, self.K, alpha)
            seeds.append(sym.state)
            seeds.append((sym.state.R - 1e-3, sym.state.S + 1e-3 / (self.K - 1),
                          sym.state.C))
        for seed in seeds:
            try:
                res = minimize_from(self.activation, self.K, alpha, seed)
            except InvalidStateError:
                continue
            if res.is_minimum and res.state.R - res.state.S <= LABEL_TOL:
                self.cache[alpha] = res.state
                return res
        raise RuntimeError(f"lost the suboptimal branch at alpha={alpha}")


def locate_spinodal(activation, K: int, bracket=None, tol: float = 1e-3):
    """Smallest load with a specialized minimum coexisting with the
    unspecialized one, by bisection on existence; None when no such
    coexistence occurs anywhere below the stability loss (continuous
    transitions, and any K = 2 system)."""
    if K < 2:
        raise ValueError("spinodal needs K >= 2")
    stab = symmetric_stability_loss(activation, K, bracket=bracket, tol=tol)
    lo = bracket[0] if bracket is not None else 2.0
    hi = stab - 2.0 * tol
    tracker = _SpecializedTracker(activation, K)

    def coexists(alpha: float) -> bool:
        sym = symmetric_stationary(activation, K, alpha)
        if sym.min_eig <= 0.0:
            return False
        return tracker.solve(alpha) is not None

    if not coexists(hi):
        return None
    if coexists(lo):
        raise ValueError(f"coexistence already present at bracket low end {lo}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if coexists(mid):
            hi = mid
        else:
            lo = mid
    alpha_s = 0.5 * (lo + hi)
    if stab - alpha_s <= 10.0 * tol:
        # the coexistence window is below the classification scale (weakly
        # asymmetric pitchforks at finite K produce hair-thin folds); treat
        # the transition as continuous with no reportable spinodal
        return None
    return alpha_s


@dataclass(frozen=True)
class TransitionResult:
    alpha_c: float
    order: str  # "First" or "Second"


def locate_transition(activation, K: int, bracket=None, tol: float = 1e-3) -> TransitionResult:
    """Locate the specialization transition and decide its order.

    The order test: if a specialized minimum coexists with the stable
    unspecialized one over an interval longer than 10*tol below the
    stability loss, the transition is first order and alpha_c is the root
    of the free-energy difference; otherwise it is second order and
    alpha_c is the stability loss itself.
    """
    if K < 2:
        raise ValueError("transition locator needs K >= 2; the single unit is smooth")
    stab = symmetric_stability_loss(activation, K, bracket=bracket, tol=tol)
    spinodal = locate_spinodal(activation, K, bracket=bracket, tol=tol)
    if spinodal is None or stab - spinodal <= 10.0 * tol:
        return TransitionResult(alpha_c=stab, order="Second")

    tracker = _SpecializedTracker(activation, K)
    sym_cache: dict[float, SiteSymmetricState] = {}

    def delta(alpha: float) -> float:
        seed = None
        if sym_cache:
            seed = sym_cache[min(sym_cache, key=lambda s: abs(s - alpha))]
        sym = symmetric_stationary(activation, K, alpha, seed=seed)
        sym_cache[alpha] = sym.state
        spec = tracker.solve(alpha)
        if spec is None:
            raise RuntimeError(f"specialized minimum vanished at alpha={alpha}")
        return sym.beta_f - spec.beta_f

    lo = spinodal + 2.0 * tol
    hi = stab - 2.0 * tol
    dlo, dhi = delta(lo), delta(hi)
    if dlo >= 0.0:
        # crossing happens essentially at the spinodal
        return TransitionResult(alpha_c=lo, order="First")
    if dhi <= 0.0:
        raise RuntimeError("free energies do not cross below the stability loss")
    alpha_c = float(optimize.brentq(delta, lo, hi, xtol=tol))
    return TransitionResult(alpha_c=alpha_c, order="First")


def locate_disappearance(activation, K: int, bracket=None, tol: float = 1e-3):
    """Load where the suboptimal branch loses its weak-order character,
    located as the sign change of C along that branch; None for systems
    without the phenomenon (ReLU, and K = 2 where the suboptimal state is
    the mirror image of the optimum)."""
    a = get_activation(activation)
    if a.name == "relu" or K == 2:
        return None
    if K < 2:
        raise ValueError("needs K >= 2")
    if bracket is None:
        stab = symmetric_stability_loss(a, K)
        bracket = (max(1.5, 0.5 * stab), 2.0 * stab)
    lo, hi = bracket
    tracker = _SuboptimalTracker(a, K)

    def c_sign(alpha: float) -> float:
        return tracker.solve(alpha).state.C

    clo, chi = c_sign(lo), c_sign(hi)
    if not (clo < 0.0 < chi):
        raise ValueError(
            f"bracket ({lo}, {hi}) does not straddle the C sign change "
            f"(C={clo:.3e} at lo, C={chi:.3e} at hi)"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if c_sign(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PhaseSummary:
    activation: str
    K: float  # math.inf marks the analytic large-K limit
    alpha_c: float
    transition_order: str
    alpha_s: float | None = None
    alpha_d: float | None = None

    def __post_init__(self):
        vals = [v for v in (self.alpha_s, self.alpha_c, self.alpha_d) if v is not None]
        if any(b < a - 1e-9 for a, b in zip(vals, vals[1:])):
            raise ValueError(f"critical loads out of order: {vals}")

    def as_dict(self) -> dict:
        return {
            "activation": self.activation,
            "K": "inf" if math.isinf(self.K) else int(self.K),
            "alpha_s": self.alpha_s,
            "alpha_c": self.alpha_c,
            "alpha_d": self.alpha_d,
            "transition_order": self.transition_order,
        }


def phase_summary(activation, K, tol: float = 1e-3, bracket=None) -> PhaseSummary:
    """Critical loads and transition order for one (activation, K) system."""
    a = get_activation(activation)
    if K == math.inf or (isinstance(K, str) and K == "inf"):
        summary, _ = large_K_limit(a)
        return summary
    K = int(K)
    trans = locate_transition(a, K, bracket=bracket, tol=tol)
    alpha_s = locate_spinodal(a, K, bracket=bracket, tol=tol)
    alpha_d = locate_disappearance(a, K, tol=tol) if trans.order == "First" else None
    return PhaseSummary(activation=a.name, K=K, alpha_s=alpha_s,
                        alpha_c=trans.alpha_c, alpha_d=alpha_d,
                        transition_order=trans.order)


# ---------------------------------------------------------------------------
# infinite-width limit


@dataclass(frozen=True)
class LimitPoint:
    """One point of a limit-mode branch: R is the O(1) specialization overlap
    (0 on the unspecialized branch, whose microscopic overlaps are R = S =
    O(1/K)); beta_f and the curvature are per hidden unit."""

    alpha: float
    R: float
    eps_g: float
    beta_f: float
    curvature: float
    label: BranchLabel


@dataclass
class LimitBranch:
    activation: str
    label: BranchLabel
    points: list[LimitPoint] = field(default_factory=list)


def limit_unspecialized_eps(activation) -> float:
    """Plateau error of the unspecialized state as K grows without bound."""
    a = get_activation(activation)
    if a.name == "erf":
        return 1.0 / 3.0 - 1.0 / math.pi
    return 0.25 - 1.0 / (2.0 * math.pi)


def _limit_eps(activation, R: float) -> float:
    a = get_activation(activation)
    if a.name == "erf":
        return 1.0 / 3.0 - (1.0 - R) / math.pi - (2.0 / math.pi) * math.asin(R / 2.0)
    return 0.25 - (math.sqrt(1.0 - R * R) + R * math.asin(R)) / (2.0 * math.pi)


def _limit_eps_prime(activation, R: float) -> float:
    a = get_activation(activation)
    if a.name == "erf":
        return 1.0 / math.pi - (2.0 / math.pi) / math.sqrt(4.0 - R * R)
    return -math.asin(R) / (2.0 * math.pi)


def _limit_eps_second(activation, R: float) -> float:
    a = get_activation(activation)
    if a.name == "erf":
        return -(2.0 / math.pi) * R * (4.0 - R * R) ** -1.5
    return -1.0 / (2.0 * math.pi * math.sqrt(1.0 - R * R))


def _limit_alpha_of_R(activation, R: float) -> float:
    # stationarity of alpha*eps(R) - (1/2) ln(1 - R^2) in R
    return -R / ((1.0 - R * R) * _limit_eps_prime(activation, R))


def _limit_f(activation, R: float, alpha: float) -> float:
    return alpha * _limit_eps(activation, R) - 0.5 * math.log(1.0 - R * R)


def _limit_curvature(activation, R: float, alpha: float) -> float:
    ent_dd = (1.0 + R * R) / (1.0 - R * R) ** 2
    return alpha * _limit_eps_second(activation, R) + ent_dd


def limit_specialized_overlap(activation, alpha: float):
    """Stable specialized solution R(alpha) in the infinite-width limit, or
    None below the fold (erf) / below 2*pi (relu)."""
    a = get_activation(activation)
    if a.name == "erf":
        fold = optimize.minimize_scalar(
            lambda R: _limit_alpha_of_R(a, R), bounds=(1e-6, 1.0 - 1e-9),
            method="bounded", options={"xatol": 1e-12})
        if alpha < fold.fun:
            return None
        lo = float(fold.x)
        if abs(_limit_alpha_of_R(a, lo) - alpha) < 1e-12:
            return lo
        return float(optimize.brentq(
            lambda R: _limit_alpha_of_R(a, R) - alpha, lo, 1.0 - 1e-13, xtol=1e-13))
    if alpha <= 2.0 * math.pi:
        return None
    return float(optimize.brentq(
        lambda R: _limit_alpha_of_R(a, R) - alpha, 1e-12, 1.0 - 1e-13, xtol=1e-13))


def large_K_limit(activation, alphas=None) -> tuple[PhaseSummary, list[LimitBranch]]:
    """Phase summary and equilibrium branches after taking K to infinity.

    In the limit each specialized unit decouples: its overlap solves a
    one-dimensional stationarity condition, the unspecialized state sits
    on an alpha-independent error plateau, and for the sigmoid the
    suboptimal branch survives to loads growing linearly in K (so no
    finite disappearance load exists in the limit itself).
    """
    a = get_activation(activation)
    if a.name == "erf":
        fold = optimize.minimize_scalar(
            lambda R: _limit_alpha_of_R(a, R), bounds=(1e-6, 1.0 - 1e-9),
            method="bounded", options={"xatol": 1e-12})
        alpha_s = float(fold.fun)
        eps_u = limit_unspecialized_eps(a)

        def crossing(alpha):
            R = limit_specialized_overlap(a, alpha)
            return _limit_f(a, R, alpha) - alpha * eps_u

        alpha_c = float(optimize.brentq(crossing, alpha_s + 1e-9, 10.0 * alpha_s,
                                        xtol=1e-10))
        summary = PhaseSummary(activation=a.name, K=math.inf, alpha_s=alpha_s,
                               alpha_c=alpha_c, alpha_d=None,
                               transition_order="First")
    else:
        alpha_c = 2.0 * math.pi
        summary = PhaseSummary(activation=a.name, K=math.inf, alpha_s=None,
                               alpha_c=alpha_c, alpha_d=None,
                               transition_order="Second")

    if alphas is None:
        alphas = np.geomspace(0.5 * summary.alpha_c, 3.0 * summary.alpha_c, 61)
    alphas = np.asarray(list(alphas), dtype=float)

    eps_u = limit_unspecialized_eps(a)
    unspec = LimitBranch(activation=a.name, label=BranchLabel.UNSPECIALIZED)
    pos = LimitBranch(activation=a.name, label=BranchLabel.POSITIVE_SPECIALIZED)
    neg = LimitBranch(activation=a.name, label=BranchLabel.NEGATIVE_SPECIALIZED)
    for alpha in alphas:
        alpha = float(alpha)
        if a.name == "erf" or alpha < 2.0 * math.pi:
            # R = 0 stays a local minimum for erf at any load; for relu only
            # below the continuous transition
            unspec.points.append(LimitPoint(
                alpha=alpha, R=0.0, eps_g=eps_u, beta_f=alpha * eps_u,
                curvature=_limit_curvature(a, 0.0, alpha),
                label=BranchLabel.UNSPECIALIZED))
        R = limit_specialized_overlap(a, alpha)
        if R is not None:
            eps = _limit_eps(a, R)
            f = _limit_f(a, R, alpha)
            curv = _limit_curvature(a, R, alpha)
            pos.points.append(LimitPoint(alpha=alpha, R=R, eps_g=eps, beta_f=f,
                                         curvature=curv,
                                         label=BranchLabel.POSITIVE_SPECIALIZED))
            if a.name == "relu":
                # the limit error is even in R: the anti-aligned branch is
                # exactly degenerate with the aligned one
                neg.points.append(LimitPoint(alpha=alpha, R=-R, eps_g=eps,
                                             beta_f=f, curvature=curv,
                                             label=BranchLabel.NEGATIVE_SPECIALIZED))
    branches = [b for b in (unspec, pos, neg) if b.points]
    return summary, branches
