"""Disc-envelope search: minimize the boundary average over centered discs.

For a field u and a point x, the quantity of interest is the infimum of
``poisson_functional(u, f, q)`` over analytic discs f with f(0) = x that stay
in the space (and inside its window, when one is set).  The search is a
direct method: staged coordinate descent on polynomial coefficients, restarted
from seeded random discs, optionally interleaved with rounds that glue
per-boundary-node sub-searches back onto the disc through a Laurent-family
composition (``disc.compose_rh``).

Everything is deterministic given the budget seed.  Random streams are
counter-based and keyed by (seed, point index, stage, restart), so grids can
be evaluated in any thread order without changing a single bit of output.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy.interpolate import LinearNDInterpolator

from .disc import (
    AnalyticDisc,
    BoundaryFamily,
    boundary_from_coeffs,
    circle_powers,
    compose_rh,
    fit_laurent,
)
from .errors import (
    EmptyShell,
    IllConditioned,
    InterpolationOutOfRange,
    PointOutsideWindow,
)
from .functional import QuadratureSpec, ScalarField, pushforward_field
from .space import SpaceModel, lift_point, singular_locus_hint

# A candidate replaces the incumbent only when it wins by this much; keeps
# the accept/reject decisions stable under last-ulp evaluation noise.
IMPROVE_TOL = 1e-12

_FEAS_SLACK = 1e-12


@dataclass(frozen=True)
class SearchBudget:
    """Knobs for one envelope search.

    degree_schedule lists the disc degrees of the successive stages (the
    incumbent is carried forward and re-descended with more rows unlocked).
    rh_rounds > 0 turns on the glue-and-compose rounds after each stage's
    descent; their sub-searches run under ``child_budget`` of this budget.
    """

    degree_schedule: tuple = (2, 8)
    restarts: int = 8
    descent_iters: int = 20
    rh_rounds: int = 0
    k_schedule: tuple = (2, 3, 4, 6, 8, 12, 16)
    n_phases: int = 16
    seed: int = 0
    step_init: float = 0.25
    step_shrink: float = 0.5
    init_scale: float = 0.35
    degree_decay: float = 0.75
    boundary_points: int = 8
    child_degree: int = 3
    laurent_m: int = 0

    def __post_init__(self):
        ds = tuple(int(d) for d in self.degree_schedule)
        object.__setattr__(self, "degree_schedule", ds)
        if not ds or ds[0] < 1 or any(b < a for a, b in zip(ds, ds[1:])):
            raise ValueError("degree_schedule must be nondecreasing, all >= 1")
        ks = tuple(int(k) for k in self.k_schedule)
        object.__setattr__(self, "k_schedule", ks)
        if not ks or ks[0] < 1 or any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("k_schedule must be strictly increasing, all >= 1")
        if self.restarts < 0 or self.descent_iters < 0 or self.rh_rounds < 0:
            raise ValueError("restarts/descent_iters/rh_rounds must be >= 0")
        if self.n_phases < 1:
            raise ValueError("n_phases must be >= 1")
        if int(self.seed) < 0:
            raise ValueError("seed must be a nonnegative integer")
        object.__setattr__(self, "seed", int(self.seed))
        if not (self.step_init > 0 and 0 < self.step_shrink < 1):
            raise ValueError("need step_init > 0 and step_shrink in (0, 1)")
        if not (self.init_scale > 0 and 0 < self.degree_decay <= 1):
            raise ValueError("need init_scale > 0 and degree_decay in (0, 1]")
        if self.boundary_points < 4:
            raise ValueError("boundary_points must be >= 4")
        if self.child_degree < 1 or self.laurent_m < 0:
            raise ValueError("child_degree >= 1 and laurent_m >= 0 required")


def child_budget(b: SearchBudget) -> SearchBudget:
    """Reduced budget for the per-boundary-node sub-searches.

    Single low-degree stage, a third of the restarts and descent sweeps, and
    no nested glue rounds, so one round costs roughly a tenth of the parent.
    """
    return replace(
        b,
        degree_schedule=(min(b.child_degree, b.degree_schedule[-1]),),
        restarts=max(2, b.restarts // 2),
        descent_iters=max(8, b.descent_iters // 2),
        rh_rounds=0,
    )


@dataclass
class EnvelopeEstimate:
    """Grid of envelope values with their witness discs and diagnostics."""

    points: list = field(default_factory=list)
    values: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)


# ---------------------------------------------------------------------------
# Search frame: euclidean identity or one branch chart.


class _Frame:
    """Where the coefficient search lives.

    On euclidean spaces discs are searched directly in C^N.  On a curve the
    search runs in the branch parameter and the field is pushed forward, so
    the same descent code serves both; this is also what makes the euclidean
    and curve paths bitwise comparable.
    """

    __slots__ = ("u_eff", "branch", "dim", "constraint")

    def __init__(self, u: ScalarField, space: SpaceModel, branch=None):
        self.branch = branch
        self.dim = 1 if branch is not None else space.ambient_dim
        self.u_eff = u if branch is None else pushforward_field(u, branch)
        self.constraint = space.domain_constraint

    def feasible(self, B) -> bool:
        if self.constraint is None:
            return True
        amb = self.branch.eval(B[:, 0]) if self.branch is not None else B
        return bool(np.all(self.constraint.satisfied(amb, slack=_FEAS_SLACK)))


def _pvalue_from_boundary(frame: _Frame, q: QuadratureSpec, B) -> float:
    vals = frame.u_eff.values(B)
    if q.clip is not None:
        vals = np.maximum(vals, q.clip)
    if np.isneginf(vals).any():
        return float("-inf")
    return float(np.mean(vals))


def _pvalue(frame: _Frame, q: QuadratureSpec, coeffs) -> float:
    # Same float path as poisson_functional on the finished witness, so the
    # stored value is recomputable bit-for-bit.
    return _pvalue_from_boundary(frame, q, boundary_from_coeffs(coeffs, q.M))


# Roundoff in the sample mean grows with the magnitude of the samples; on a
# flat objective the search would otherwise ratchet downward on pure noise
# from large-coefficient trials (the mean cancels, its error does not).
_NOISE_ULPS = 256.0 * np.finfo(float).eps


def _pvalue_tol(frame: _Frame, q: QuadratureSpec, B):
    """Sample mean plus the accept threshold its roundoff scale justifies.

    The value follows the exact float path of ``_pvalue_from_boundary``; the
    threshold is IMPROVE_TOL inflated to a few hundred ulps of the mean
    absolute sample, which is the resolution below which two evaluations
    cannot be told apart.
    """
    vals = frame.u_eff.values(B)
    if q.clip is not None:
        vals = np.maximum(vals, q.clip)
    if np.isneginf(vals).any():
        return float("-inf"), IMPROVE_TOL
    tol = max(IMPROVE_TOL, _NOISE_ULPS * float(np.mean(np.abs(vals))))
    return float(np.mean(vals)), tol


# Trial scales for the window repair, largest first.  A fixed grid instead
# of a bisection: all candidate boundaries come out of one tensor product,
# which is an order of magnitude cheaper than sequential re-evaluation, and
# repair only needs a workable rho, not the exact feasibility edge.
_RHO_GRID = np.array(
    [0.999, 0.99, 0.97, 0.94, 0.9, 0.85, 0.78, 0.7,
     0.6, 0.5, 0.38, 0.25, 0.12, 0.03]
)


def _project(frame: _Frame, q: QuadratureSpec, coeffs):
    """Shrink a disc into the window: row j is scaled by rho**j.

    Reparametrizing by a smaller circle keeps the center fixed; the largest
    feasible rho from a fixed grid wins.  No-op when the disc already fits,
    and rho = 0 (the constant disc) is always feasible for a feasible
    center.
    """
    if frame.feasible(boundary_from_coeffs(coeffs, q.M)):
        return coeffs
    deg = coeffs.shape[0] - 1
    pow_ = _RHO_GRID[:, None] ** np.arange(deg + 1)[None, :]
    scaled = coeffs[None, :, :] * pow_[:, :, None]
    bnds = np.tensordot(scaled, circle_powers(q.M, deg), axes=([1], [0]))
    for g in range(_RHO_GRID.size):
        if frame.feasible(bnds[g].T):
            return scaled[g]
    out = np.zeros_like(coeffs)
    out[0] = coeffs[0]
    return out


def _rng(key: tuple) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def _random_coeffs(rng, center, degree: int, b: SearchBudget):
    c = np.zeros((degree + 1, center.size), dtype=complex)
    c[0] = center
    if degree:
        scales = b.init_scale * b.degree_decay ** np.arange(degree)
        noise = rng.standard_normal((degree, center.size, 2))
        c[1:] = (noise[..., 0] + 1j * noise[..., 1]) * scales[:, None] / np.sqrt(2.0)
    return c


def _resize(coeffs, degree: int, dim: int):
    """Copy into a (degree+1, dim) array, padding or dropping high rows."""
    out = np.zeros((degree + 1, dim), dtype=complex)
    rows = min(coeffs.shape[0], degree + 1)
    out[:rows] = coeffs[:rows]
    return out


# (wall gain, dip factor) pairs for the two-level seeds on spaces with no
# window to set the high level.
_DIP_LEVELS = ((8.0, 1 / 8), (64.0, 1 / 16), (512.0, 1 / 32))


def _exp_coeffs(P):
    """Coefficients of exp(P) truncated at P's degree, columnwise.

    Uses the derivative recurrence; the constant row is exactly exp(P[0]),
    so P[0] = 0 gives a unit constant term with no rounding.
    """
    E = np.zeros_like(P)
    E[0] = np.exp(P[0])
    for k in range(1, P.shape[0]):
        j = np.arange(1, k + 1)
        E[k] = np.sum(j[:, None] * P[1 : k + 1] * E[:k][::-1], axis=0) / k
    return E


def _seed_anchor(frame):
    """Anchor point and per-coordinate wall radii for the dip seeds."""
    if frame.branch is None and frame.constraint is not None:
        return (
            np.asarray(frame.constraint.center, dtype=complex),
            np.asarray(frame.constraint.radii, dtype=float),
        )
    return np.zeros(frame.dim, dtype=complex), None


def _dip_log(frame, center, degree: int, mu: float, lhi_vec):
    """Log-shape P of one two-level dip seed.

    exp(P) holds near exp(lhi) off a dip arc of measure mu and drops on it,
    with the levels balanced so the constant term is exactly 1; coordinates
    with no offset from the anchor stay put.
    """
    c0, _ = _seed_anchor(frame)
    live = np.abs(center - c0) > 1e-12
    n = np.arange(1, degree + 1)
    step = 2.0 * np.sin(np.pi * mu * n) / (np.pi * n)
    P = np.zeros((degree + 1, frame.dim), dtype=complex)
    for ell in range(frame.dim):
        if live[ell] and lhi_vec[ell] > 1e-12:
            P[1:, ell] = (-lhi_vec[ell] / mu) * step
    return P


def _seed_params(frame, center, coarse: int = 24):
    """(mu, lhi_vec) parameter list for the dip seeds at this center.

    With a window the high level pushes the offset to the wall and mu runs
    over a coarse grid (callers refine around the best); without a window a
    fixed grid of gain/dip pairs supplies both levels.
    """
    c0, radii = _seed_anchor(frame)
    offset = center - c0
    live = np.abs(offset) > 1e-12
    if not live.any():
        return []
    if radii is not None:
        rel = np.ones(frame.dim)
        rel[live] = np.abs(offset[live]) / radii[live]
        lhi_vec = -np.log(np.clip(rel, 3e-4, 1.0))
        if not (lhi_vec > 1e-12).any():
            return []
        return [(i / (coarse + 2), lhi_vec) for i in range(1, coarse + 1)]
    out = []
    for gain, dip in _DIP_LEVELS:
        lhi = np.log(gain)
        out.append((lhi / (lhi - np.log(dip)), np.full(frame.dim, lhi)))
    return out


def _disc_from_log(frame, center, P):
    """Assemble anchor + offset * exp(P) with the center row exact."""
    c0, _ = _seed_anchor(frame)
    f = c0[None, :] + (center - c0)[None, :] * _exp_coeffs(P)
    f[0] = center
    return f


def _descend_log(frame, q, b: SearchBudget, P, center, stage_degree: int, iters: int):
    """Coordinate descent on the log-shape P of an exponential-form disc.

    Same move set and acceptance rule as ``_descend``, but trials perturb P
    and are scored through anchor + offset * exp(P); multiplicative dips
    widen or deepen smoothly under such moves where direct coefficient
    steps would break the shape.  Returns (coeffs, value, accept threshold).
    """
    P = _resize(P, stage_degree, frame.dim)
    coeffs, best, btol = _score(frame, q, _disc_from_log(frame, center, P))
    if best == float("-inf") or iters <= 0:
        return coeffs, best, btol
    offset_live = np.abs(center - _seed_anchor(frame)[0]) > 1e-12
    cols = [c for c in range(frame.dim) if offset_live[c]]
    if not cols:
        return coeffs, best, btol
    step = b.step_init
    for _ in range(iters):
        improved = False
        for row in range(1, stage_degree + 1):
            for col in cols:
                hit = False
                for mag in (4.0 * step, step):
                    for delta in (mag, -mag, mag * 1j, -mag * 1j):
                        trial = P.copy()
                        trial[row, col] += delta
                        cand, val, vtol = _score(
                            frame, q, _disc_from_log(frame, center, trial)
                        )
                        if val < best - max(vtol, btol):
                            P, coeffs, best, btol = trial, cand, val, vtol
                            hit = True
                            improved = True
                            break
                    if hit:
                        break
        if not improved:
            step *= b.step_shrink
            if step < 1e-10:
                break
    return coeffs, best, btol


def _arc_cheb_seed(frame, center, degree: int, alpha: float):
    """Seed whose offset from the anchor is small off a gap arc of width alpha.

    Chebyshev polynomial composed with the standard arc-to-interval map,
    evaluated on a fine circle grid and read back off by FFT; degree-graded
    growth on the gap buys the drop everywhere else.  The ratio against its
    own constant term keeps the center row exact.  Needs an even degree >= 2
    and an unbounded window (the gap growth is enormous), else None.
    """
    n = degree - (degree % 2)
    if n < 2 or frame.constraint is not None:
        return None
    c0, _ = _seed_anchor(frame)
    offset = center - c0
    if not (np.abs(offset) > 1e-12).any():
        return None
    mf = 4 << (n - 1).bit_length()
    theta = 2.0 * np.pi * np.arange(mf) / mf
    tn = np.zeros(n + 1)
    tn[n] = 1.0
    vals = np.exp(0.5j * n * theta) * npcheb.chebval(
        (np.cos(0.5 * theta) / np.cos(0.5 * alpha)).astype(complex), tn
    )
    rows = np.fft.fft(vals)[: n + 1] / mf
    rows = rows / rows[0]
    rows[0] = 1.0
    out = offset[None, :] * rows[:, None]
    out[0] = center
    return out


def _best_arc_seed(frame, q, center, degree: int, incumbent: float):
    """Scan the arc-Chebyshev seeds over gap widths; best (coeffs, value).

    None unless the winner beats the incumbent by its own noise threshold,
    so callers spend descent time only on seeds that already lead.
    """
    if frame.constraint is not None or degree < 2:
        return None
    coarse = [0.2 + 0.1 * i for i in range(11)]

    def scan(alphas):
        out = []
        for a in alphas:
            c = _arc_cheb_seed(frame, center, degree, a)
            if c is not None:
                c, v, t = _score(frame, q, c)
                out.append((v, a, c, t))
        return out

    scored = scan(coarse)
    if not scored:
        return None
    for spread in (0.01, 0.002):
        best = min(scored, key=lambda s: (s[0], s[1]))
        fine = [best[1] + j * spread for j in range(-8, 9) if j]
        scored += scan([a for a in fine if 0.05 < a < 1.5])
    best = min(scored, key=lambda s: (s[0], s[1]))
    if best[0] >= incumbent - max(best[3], IMPROVE_TOL):
        return None
    return best[2], best[0]


def _best_dip_seed(frame, q, center, degree: int, incumbent: float):
    """Scan the dip-seed family and return its best (P, value), or None.

    One evaluation per parameter; when the arc measure is the free knob a
    second, finer scan brackets the coarse winner (node-crossing events make
    the value a step function of mu, so descent cannot tune it).  As with
    the arc seeds, a winner that does not beat the incumbent by its noise
    threshold is dropped.
    """
    params = _seed_params(frame, center)
    if not params:
        return None

    def score(plist):
        out = []
        for mu, lhi in plist:
            P = _dip_log(frame, center, degree, mu, lhi)
            _, v, t = _score(frame, q, _disc_from_log(frame, center, P))
            out.append((v, mu, lhi, P, t))
        return out

    scored = score(params)
    best = min(scored, key=lambda s: s[0])
    _, radii = _seed_anchor(frame)
    if radii is not None:
        mu0 = best[1]
        fine = [
            (mu0 + j / 256.0, best[2])
            for j in range(-7, 8)
            if j and 0.0 < mu0 + j / 256.0 < 0.97
        ]
        if fine:
            best = min(scored + score(fine), key=lambda s: s[0])
    if best[0] >= incumbent - max(best[4], IMPROVE_TOL):
        return None
    return best[3], best[0]


def _mul_trial(coeffs, j: int, delta, stage_degree: int):
    """Multiply the disc by (1 + delta * zeta**j), or None if over the cap.

    Row 0 is untouched, so the center is preserved bit for bit, and the
    product is never truncated: dropping tail rows of a large-coefficient
    product corrupts its boundary far more than skipping the move costs.
    """
    rows = coeffs.shape[0]
    if rows - 1 + j > stage_degree:
        return None
    out = np.zeros((rows + j, coeffs.shape[1]), dtype=complex)
    out[:rows] = coeffs
    out[j:] += delta * coeffs
    return out


def _score(frame, q, trial):
    """Project a trial back into the window if needed, then evaluate it.

    Returns (trial, value, accept threshold)."""
    B = boundary_from_coeffs(trial, q.M)
    if not frame.feasible(B):
        trial = _project(frame, q, trial)
        B = boundary_from_coeffs(trial, q.M)
    val, tol = _pvalue_tol(frame, q, B)
    return trial, val, tol


def _descend(frame, q, b: SearchBudget, coeffs, stage_degree: int, iters: int):
    """First-improvement descent over rows 1..stage_degree.

    Each sweep tries additive axis steps in the four complex directions per
    coefficient, then multiplicative kicks (1 + delta * zeta**j) per
    frequency.  The step halves after a sweep with no accepted move.  A
    trial that leaves the window is repaired by the row-scaling projection
    (center row untouched) before being scored.  Returns (coeffs, value,
    accept threshold of the winning evaluation).
    """
    best, btol = _pvalue_tol(frame, q, boundary_from_coeffs(coeffs, q.M))
    if best == float("-inf") or iters <= 0:
        return coeffs, best, btol
    step = b.step_init
    for _ in range(iters):
        improved = False
        n_rows = min(stage_degree, coeffs.shape[0] - 1)
        for row in range(1, n_rows + 1):
            for col in range(frame.dim):
                # Large trial steps first: flat objectives (indicators) have
                # plateaus that unit steps cannot cross.
                hit = False
                for mag in (4.0 * step, step):
                    for delta in (mag, -mag, mag * 1j, -mag * 1j):
                        trial = coeffs.copy()
                        trial[row, col] += delta
                        trial, val, vtol = _score(frame, q, trial)
                        if val < best - max(vtol, btol):
                            coeffs, best, btol = trial, val, vtol
                            hit = True
                            improved = True
                            break
                    if hit:
                        break
        for j in range(1, stage_degree + 1):
            if coeffs.shape[0] - 1 + j > stage_degree:
                break
            hit = False
            for mag in (4.0 * step, step):
                for delta in (mag, -mag, mag * 1j, -mag * 1j):
                    cand = _mul_trial(coeffs, j, delta, stage_degree)
                    if cand is None:
                        break
                    trial, val, vtol = _score(frame, q, cand)
                    if val < best - max(vtol, btol):
                        coeffs, best, btol = trial, val, vtol
                        hit = True
                        improved = True
                        break
                if hit:
                    break
        if not improved:
            step *= b.step_shrink
            if step < 1e-10:
                break
    return coeffs, best, btol


# ---------------------------------------------------------------------------
# Glue-and-compose rounds.


def _rh_round(frame, q, b: SearchBudget, coeffs, val, stage_degree, key_base, seq):
    """One round: sub-search at each boundary node, fit, compose, sweep k/phase.

    Returns (coeffs, value, info).  The incumbent is replaced only on a
    strict decrease; info records what happened either way.
    """
    Mb = b.boundary_points
    base = AnalyticDisc(coeffs)
    angles = 2.0 * np.pi * np.arange(Mb) / Mb
    ring = boundary_from_coeffs(base.coeffs, Mb)
    info = {"round": seq, "accepted": False, "value": val}

    # The composed disc only tracks the children between ring nodes when the
    # family varies slowly with the angle, so the sub-searches run around the
    # ring with warm starts (forward, then a refining backward sweep) instead
    # of independently.
    cb = child_budget(b)
    cd = cb.degree_schedule[-1]
    kid_coeffs = [None] * Mb
    prev = None
    for j in range(Mb):
        seeds = [_resize(coeffs, cd, frame.dim)]
        seeds[0][0] = ring[j]
        if prev is not None:
            warm = prev.copy()
            warm[0] = ring[j]
            seeds.append(warm)
        _, kc, _ = _search_core(
            frame, q, cb, ring[j], key_base + (1000 + j, seq),
            extra_seeds=tuple(seeds),
        )
        prev = _resize(kc, cd, frame.dim)
        kid_coeffs[j] = prev
    for j in range(Mb - 2, -1, -1):
        warm = kid_coeffs[j + 1].copy()
        warm[0] = ring[j]
        warm = _project(frame, q, warm)
        cc, cv, ct = _descend(frame, q, cb, warm, cd, cb.descent_iters)
        ov, ot = _pvalue_tol(frame, q, boundary_from_coeffs(kid_coeffs[j], q.M))
        if cv < ov - max(ct, ot):
            kid_coeffs[j] = cc
    kids = [AnalyticDisc(kc) for kc in kid_coeffs]
    n_terms = max(1, max(k.degree for k in kids))
    info["n_terms"] = n_terms

    usable = [k for k in b.k_schedule if k > b.laurent_m]
    if not usable:
        info["skipped"] = "no k above the pole order"
        return coeffs, val, info
    deg_a = min(Mb - 1, stage_degree - (usable[0] * n_terms - b.laurent_m))
    if deg_a < 0:
        info["skipped"] = "no degree room at this stage"
        return coeffs, val, info

    family = BoundaryFamily(base, angles, tuple(kids))
    try:
        lam, resid = fit_laurent(family, b.laurent_m, n_terms, deg_a)
    except IllConditioned as exc:
        info["skipped"] = f"fit ill-conditioned: {exc}"
        return coeffs, val, info
    info["fit_residual"] = resid
    info["deg_a"] = deg_a

    best_val, best_coeffs, best_k, best_pi, best_mean = val, None, None, None, None
    swept = []
    for k in usable:
        if k * n_terms - b.laurent_m + deg_a > stage_degree:
            continue
        phase_vals = []
        for pi in range(b.n_phases):
            c = np.exp(2j * np.pi * pi / b.n_phases)
            h = compose_rh(base, lam, k, c, degree_cap=stage_degree)
            h_coeffs = h.coeffs
            B = boundary_from_coeffs(h_coeffs, q.M)
            if not frame.feasible(B):
                h_coeffs = _project(frame, q, h_coeffs)
                B = boundary_from_coeffs(h_coeffs, q.M)
            hv, ht = _pvalue_tol(frame, q, B)
            phase_vals.append(hv)
            if hv < best_val - max(ht, IMPROVE_TOL):
                best_val, best_coeffs = hv, h_coeffs
                best_k, best_pi = k, pi
                best_mean = None  # filled once the k sweep finishes
        if phase_vals:
            swept.append((k, float(np.mean(phase_vals))))
            if best_k == k:
                best_mean = swept[-1][1]
    info["k_swept"] = [k for k, _ in swept]
    if best_coeffs is None:
        return coeffs, val, info
    info.update(
        accepted=True,
        value=best_val,
        k=best_k,
        phase_index=best_pi,
        eps_report=(best_val - best_mean) if best_mean is not None else None,
    )
    return best_coeffs, best_val, info


# ---------------------------------------------------------------------------
# Core staged search (shared by the euclidean and curve paths).


def _search_core(frame, q, b: SearchBudget, center, key_base, extra_seeds=()):
    center = np.asarray(center, dtype=complex).reshape(frame.dim)
    best_c = center[None, :].copy()
    best_v = _pvalue(frame, q, best_c)
    rounds = [best_v]
    stages, rh_log = [], []
    seq = 0
    for si, d in enumerate(b.degree_schedule):
        cands = [_resize(best_c, d, frame.dim)]
        for s in extra_seeds:
            cands.append(_resize(np.asarray(s, dtype=complex), d, frame.dim))
        for ridx in range(b.restarts):
            rng = _rng(key_base + (si, ridx))
            cands.append(_random_coeffs(rng, center, d, b))
        for cand in cands:
            cand = _project(frame, q, cand)
            cc, cv, ct = _descend(frame, q, b, cand, d, b.descent_iters)
            if cv < best_v - max(ct, IMPROVE_TOL):
                best_c, best_v = cc, cv
        # Exponential-form pipeline: scan the two-level dip seeds, refine
        # the winner in log space where the dips move smoothly.
        dip = _best_dip_seed(frame, q, center, d, best_v)
        if dip is not None:
            cc, cv, ct = _descend_log(
                frame, q, b, dip[0], center, d, b.descent_iters
            )
            if cv < best_v - max(ct, IMPROVE_TOL):
                best_c, best_v = cc, cv
        # Arc-Chebyshev pipeline (unbounded windows): scan gap widths, then
        # polish the winner with the ordinary descent.
        arc = _best_arc_seed(frame, q, center, d, best_v)
        if arc is not None:
            cc, cv, ct = _descend(frame, q, b, arc[0], d, b.descent_iters)
            if cv < best_v - max(ct, IMPROVE_TOL):
                best_c, best_v = cc, cv
        stages.append({"degree": d, "value": best_v})
        rounds.append(best_v)
        for _ in range(b.rh_rounds):
            best_c, new_v, info = _rh_round(
                frame, q, b, best_c, best_v, d, key_base, seq
            )
            seq += 1
            rh_log.append(info)
            rounds.append(new_v)
            if not info["accepted"]:
                break
            best_v = new_v
    diag = {"rounds": rounds, "stages": stages, "rh": rh_log}
    return best_v, best_c, diag


def envelope_at(
    u: ScalarField,
    space: SpaceModel,
    x,
    budget: SearchBudget | None = None,
    q: QuadratureSpec | None = None,
    point_index: int = 0,
):
    """Envelope value at one point: (value, witness disc, diagnostics).

    The witness is centered at x (bit-exactly) and the value equals
    ``poisson_functional(u, witness, q)``.  On curves every lift of x is
    searched and the best one wins; diagnostics record which.  Raises
    PointOutsideWindow / PointNotOnSpace for points the space does not hold.
    """
    b = budget if budget is not None else SearchBudget()
    qq = q if q is not None else QuadratureSpec()
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    if x.shape != (space.ambient_dim,):
        raise ValueError(f"point must have shape ({space.ambient_dim},)")
    if space.domain_constraint is not None:
        if not bool(space.domain_constraint.satisfied(x, slack=_FEAS_SLACK)):
            raise PointOutsideWindow(f"point {x} lies outside the window")
    key = (b.seed, int(point_index))
    if space.kind == "euclidean":
        frame = _Frame(u, space)
        v, c, diag = _search_core(frame, qq, b, x, key)
        diag["branch"] = None
        return v, AnalyticDisc(c), diag
    lifts = lift_point(space, x)
    best = None
    for label, t in lifts:
        branch = space.branch(label)
        frame = _Frame(u, space, branch)
        v, c, diag = _search_core(frame, qq, b, np.array([t]), key)
        if best is None or v < best[0]:
            diag["branch"] = label
            diag["lifts"] = [lb for lb, _ in lifts]
            best = (v, AnalyticDisc(c, branch), diag)
    return best


def _warm_candidate(witness: AnalyticDisc, space: SpaceModel, x):
    """Previous witness recentered at x, or None when it cannot carry over."""
    if witness.branch is None:
        coeffs = witness.coeffs.copy()
        coeffs[0] = x
        return None, coeffs
    for label, t in lift_point(space, x):
        if label == witness.branch.label:
            coeffs = witness.coeffs.copy()
            coeffs[0, 0] = t
            return witness.branch, coeffs
    return None


def envelope_grid(
    u: ScalarField,
    space: SpaceModel,
    points,
    budget: SearchBudget | None = None,
    q: QuadratureSpec | None = None,
    threads: int = 1,
) -> EnvelopeEstimate:
    """Envelope over a list of points.

    Pass one runs the per-point searches independently (parallel when
    threads > 1; the random streams are keyed by point index, so the thread
    count never changes results).  Pass two sweeps the grid once in order,
    recentering each point's predecessor witness and descending without any
    randomness; improvements are kept.
    """
    b = budget if budget is not None else SearchBudget()
    qq = q if q is not None else QuadratureSpec()
    pts = [np.atleast_1d(np.asarray(p, dtype=complex)) for p in points]

    def one(i):
        return envelope_at(u, space, pts[i], b, qq, point_index=i)

    n = len(pts)
    results = [None] * n
    if threads > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            for i, res in enumerate(ex.map(one, range(n))):
                results[i] = res
    else:
        for i in range(n):
            results[i] = one(i)
    values = [r[0] for r in results]
    wits = [r[1] for r in results]
    diags = [r[2] for r in results]

    top_degree = b.degree_schedule[-1]
    for i in range(1, n):
        cand = _warm_candidate(wits[i - 1], space, pts[i])
        if cand is None:
            continue
        branch, coeffs = cand
        frame = _Frame(u, space, branch)
        coeffs = _project(frame, qq, _resize(coeffs, top_degree, frame.dim))
        cc, cv, ct = _descend(frame, qq, b, coeffs, top_degree, b.descent_iters)
        if cv < values[i] - max(ct, IMPROVE_TOL):
            values[i] = cv
            wits[i] = AnalyticDisc(cc, branch)
            diags[i]["warm_start"] = True
            diags[i]["rounds"] = list(diags[i]["rounds"]) + [cv]
    return EnvelopeEstimate(pts, values, wits, diags)


# ---------------------------------------------------------------------------
# A-posteriori checks on a computed grid.


class _SliceInterp:
    """Piecewise-linear interpolation of grid values over one complex slice.

    Full-rank point sets go through Delaunay triangulation; collinear sets
    fall back to interpolation along their line.  Queries outside the data
    raise InterpolationOutOfRange.
    """

    def __init__(self, params, values):
        pts = np.column_stack([np.real(params), np.imag(params)])
        self.values = np.asarray(values, dtype=float)
        ctr = pts.mean(axis=0)
        spread = pts - ctr
        _, s_svd, vt = np.linalg.svd(spread, full_matrices=False)
        scale = max(1.0, float(s_svd[0]))
        if len(s_svd) > 1 and s_svd[1] > 1e-9 * scale:
            self._nd = LinearNDInterpolator(pts, self.values)
            self._line = None
        else:
            self._nd = None
            axis = vt[0]
            coord = spread @ axis
            order = np.argsort(coord, kind="stable")
            self._line = (ctr, axis, coord[order], self.values[order])

    def __call__(self, params):
        params = np.asarray(params, dtype=complex)
        pts = np.column_stack([np.real(params), np.imag(params)])
        if self._nd is not None:
            out = self._nd(pts)
            if np.isnan(out).any():
                raise InterpolationOutOfRange(
                    "trial disc leaves the convex hull of the grid"
                )
            return np.asarray(out, dtype=float)
        ctr, axis, coord, vals = self._line
        rel = pts - ctr
        along = rel @ axis
        off = rel - np.outer(along, axis)
        if np.max(np.abs(off)) > 1e-9:
            raise InterpolationOutOfRange("trial disc leaves the grid line")
        if along.min() < coord[0] - 1e-12 or along.max() > coord[-1] + 1e-12:
            raise InterpolationOutOfRange("trial disc leaves the grid segment")
        return np.interp(along, coord, vals)


class _GridLookup:
    """Exact-match lookup for grids in C^N with N >= 2."""

    def __init__(self, points, values):
        self.table = {self._key(p): float(v) for p, v in zip(points, values)}

    @staticmethod
    def _key(p):
        return tuple((round(z.real, 9), round(z.imag, 9)) for z in np.ravel(p))

    def __call__(self, pts):
        out = np.empty(len(pts), dtype=float)
        for i, p in enumerate(pts):
            k = self._key(p)
            if k not in self.table:
                raise InterpolationOutOfRange(
                    "trial disc visits a point that is not on the value grid"
                )
            out[i] = self.table[k]
        return out


def check_submean(
    estimate: EnvelopeEstimate,
    space: SpaceModel,
    trial_discs,
    q: QuadratureSpec | None = None,
    tol: float = 1e-9,
) -> list:
    """Violations of the center-below-boundary-average inequality.

    Interpolates the estimate's values along each trial disc and compares the
    center value against the boundary mean.  A plurisubharmonic-like estimate
    passes every disc; a report entry is returned for each disc whose center
    value exceeds the averaged boundary by more than tol.  Failures of upper
    semicontinuity show up here through discs crossing the offending point.
    """
    qq = q if q is not None else QuadratureSpec()
    by_branch = {}
    euclid = None
    if space.kind == "curve":
        for p, v in zip(estimate.points, estimate.values):
            for label, t in lift_point(space, p):
                by_branch.setdefault(label, ([], []))
                by_branch[label][0].append(t)
                by_branch[label][1].append(v)
        interps = {
            label: _SliceInterp(np.asarray(ts), vs)
            for label, (ts, vs) in by_branch.items()
        }
    elif space.ambient_dim == 1:
        euclid = _SliceInterp(
            np.asarray([p[0] for p in estimate.points]), estimate.values
        )
    else:
        euclid = _GridLookup(estimate.points, estimate.values)

    reports = []
    for idx, f in enumerate(trial_discs):
        if space.kind == "curve" and f.branch is None:
            raise ValueError("trial discs on a curve space must carry a branch")
        if f.branch is not None:
            if f.branch.label not in interps:
                raise InterpolationOutOfRange(
                    f"no grid values on branch {f.branch.label!r}"
                )
            terp = interps[f.branch.label]
            ring = boundary_from_coeffs(f.coeffs, qq.M)[:, 0]
            center = f.coeffs[0, 0]
            vc = float(terp(np.array([center]))[0])
            boundary = terp(ring)
        else:
            terp = euclid
            ring = f.boundary_values(qq.M)
            center = f.center()
            if space.ambient_dim == 1:
                vc = float(terp(np.array([center[0]]))[0])
                boundary = terp(ring[:, 0])
            else:
                vc = float(terp([center])[0])
                boundary = terp(list(ring))
        avg = float(np.mean(boundary))
        if vc > avg + tol:
            reports.append(
                {
                    "disc_index": idx,
                    "center": f.center(),
                    "center_value": vc,
                    "boundary_average": avg,
                    "excess": vc - avg,
                }
            )
    return reports


def upper_regularize(
    estimate: EnvelopeEstimate,
    space: SpaceModel,
    p,
    radii,
    singular_tol: float = 1e-7,
):
    """Shell maxima of the estimate around p over regular grid points.

    Returns (value, report) where report maps each radius to the max of the
    estimate over grid points within that distance of p, excluding p itself
    and (on curves) anything within singular_tol of the singular-locus hint;
    value is the max at the smallest radius.  Raises EmptyShell when a shell
    contains no usable grid point.
    """
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    radii = sorted(float(r) for r in radii)
    if not radii or radii[0] <= 0:
        raise ValueError("radii must be positive")
    pts = np.stack(estimate.points)
    vals = np.asarray(estimate.values, dtype=float)
    dist = np.sqrt(np.sum(np.abs(pts - p[None, :]) ** 2, axis=1))
    keep = dist > 1e-12
    if space.kind == "curve":
        for s in singular_locus_hint(space):
            keep &= np.max(np.abs(pts - s[None, :]), axis=1) > singular_tol
    report = {}
    for r in radii:
        shell = keep & (dist <= r)
        if not shell.any():
            raise EmptyShell(f"no regular grid points within {r} of the point")
        report[r] = float(np.max(vals[shell]))
    return report[radii[0]], report
