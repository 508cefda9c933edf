"""Outer search over the trial energy in polar form.

|eps| is scanned along a ray until |lambda(eps)| crosses lambda_ex, refined by
secant, and then the phase of eps is moved until phase(lambda) = 0.  Each
phase move is followed by a fresh magnitude refinement, so the phase secant
runs along the curve |lambda| = lambda_ex rather than at frozen |eps|.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (BracketFailure, DegenerateDenominator, InputError, NoBracket,
                     NumericalError, SecantStall, SingularResolvent)
from .iteration import EigenProblem, InnerConfig, InnerResult, run_fixed_point
from .linalg import PolarScalar, norm_inf, to_polar
from .oracle import residual_norm
from .resolvent import _make as _make_resolvent

log = logging.getLogger(__name__)

RESIDUAL_RTOL = 1e-8
_NAN_POLAR = PolarScalar(math.nan, math.nan)


@dataclass(frozen=True)
class SearchConfig:
    """Outer-search settings.  ``None`` window entries are derived from the problem:
    the scan covers (0, ||T|| + lambda_ex ||V||] in ``scan_points`` steps."""

    eps_mag_start: float | None = None
    eps_mag_step: float | None = None
    eps_mag_stop: float | None = None
    scan_points: int = 100
    tol_mag: float = 1e-9
    tol_phase: float = 1e-9
    max_outer_cycles: int = 40
    max_secant_steps: int = 30
    phase_start: float = 0.0
    phase_rays: int = 8
    phase_trial_step: float = 1e-3
    max_phase_step: float = 0.5
    singular_nudge: float = 1e-8

    def __post_init__(self):
        for name in ("tol_mag", "tol_phase", "singular_nudge", "phase_trial_step",
                     "max_phase_step"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        for name in ("eps_mag_start", "eps_mag_step", "eps_mag_stop"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise InputError(f"{name} must be positive")
        for name in ("scan_points", "max_outer_cycles", "max_secant_steps", "phase_rays"):
            if int(getattr(self, name)) < 1:
                raise InputError(f"{name} must be a positive integer")

    def window(self, problem: EigenProblem):
        """(start, stop, step) of the magnitude scan."""
        stop = self.eps_mag_stop
        if stop is None:
            stop = 1.05 * (norm_inf(problem.T) + problem.lambda_ex * norm_inf(problem.V))
        step = self.eps_mag_step if self.eps_mag_step is not None else stop / self.scan_points
        start = self.eps_mag_start if self.eps_mag_start is not None else step
        if not start < stop:
            raise InputError(f"empty scan window [{start}, {stop}]")
        return start, stop, step


class ScanSample(NamedTuple):
    eps: PolarScalar
    lam: PolarScalar
    inner_iterations: int
    converged: bool


@dataclass
class ScanCurve:
    samples: list = field(default_factory=list)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def column(self, name) -> np.ndarray:
        """One of abs_eps, phase_eps, abs_lambda, phase_lambda, inner_iters, converged."""
        pick = {
            "abs_eps": lambda s: s.eps.magnitude,
            "phase_eps": lambda s: s.eps.phase,
            "abs_lambda": lambda s: s.lam.magnitude,
            "phase_lambda": lambda s: s.lam.phase,
            "inner_iters": lambda s: s.inner_iterations,
            "converged": lambda s: s.converged,
        }[name]
        return np.array([pick(s) for s in self.samples])


@dataclass
class SolveReport:
    epsilon: complex
    u: np.ndarray
    lambda_achieved: complex
    residual: float
    outer_cycles: int
    trace: ScanCurve
    converged: bool
    lambda_ex: float = math.nan
    tol_mag: float = math.nan
    tol_phase: float = math.nan
    residual_tol: float = math.nan
    secant_log: list = field(default_factory=list)
    inner_iterations: int = 0
    perturbed_epsilon: complex | None = None
    warnings: list = field(default_factory=list)

    @property
    def magnitude_error(self) -> float:
        return abs(abs(self.lambda_achieved) - self.lambda_ex) / self.lambda_ex

    @property
    def phase_error(self) -> float:
        return abs(to_polar(self.lambda_achieved).phase)


class _Sampler:
    """Evaluates lambda(eps) with warm starts and records every sample."""

    def __init__(self, problem, cfg_inner, nudge, u0=None, projector=None, trace=None):
        self.problem = problem
        self.cfg_inner = cfg_inner or InnerConfig()
        self.nudge = nudge
        self.start = u0
        self.u = u0
        self.projector = projector
        self.trace = trace if trace is not None else ScanCurve()
        self.inner_iterations = 0
        self.strikes = 0
        self.t_norm = norm_inf(problem.T)

    def reset(self, u=None):
        self.u = self.start if u is None else u

    def __call__(self, mag, phase) -> InnerResult | None:
        eps = cmath.rect(mag, phase)
        try:
            res = _make_resolvent(self.problem.T, eps, self.t_norm)
        except SingularResolvent:
            mag = mag * (1.0 + self.nudge)
            eps = cmath.rect(mag, phase)
            try:
                res = _make_resolvent(self.problem.T, eps, self.t_norm)
            except SingularResolvent:
                self._record(mag, phase, None)
                return None
        try:
            out = run_fixed_point(self.problem, eps, self.u, self.cfg_inner,
                                  resolvent=res, projector=self.projector)
        except DegenerateDenominator:
            self._record(mag, phase, None)
            return None
        if np.all(np.isfinite(out.u)):
            self.u = out.u
        self.inner_iterations += out.iterations
        self._record(mag, phase, out)
        return out

    def _record(self, mag, phase, out):
        eps = PolarScalar(mag, phase)
        if out is None or not cmath.isfinite(out.lam):
            self.trace.samples.append(ScanSample(eps, _NAN_POLAR, 0, False))
        else:
            self.trace.samples.append(
                ScanSample(eps, to_polar(out.lam), out.iterations, out.converged))


def _grid(lo, hi, step):
    if not lo < hi or not step > 0:
        raise InputError(f"need lo < hi and step > 0, got [{lo}, {hi}] step {step}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def _scan(sampler, coords, fixed, sweep_magnitude):
    curve = ScanCurve()
    warm = []
    for x in coords:
        mag, phase = (x, fixed) if sweep_magnitude else (fixed, x)
        out = sampler(mag, phase)
        curve.samples.append(sampler.trace.samples[-1])
        warm.append(sampler.u)
    return curve, warm


def scan_magnitude(problem: EigenProblem, phase_eps, mag_range, step,
                   cfg_inner: InnerConfig = None, *, u0=None, projector=None,
                   singular_nudge=1e-8) -> ScanCurve:
    """Sample |lambda| and phase(lambda) along the ray ``arg eps = phase_eps``.

    Inner solves warm-start from the previous grid point.  Failed samples
    (singular resolvent after one nudge, degenerate denominator,
    non-convergence) are kept with ``converged=False``.
    """
    lo, hi = mag_range
    sampler = _Sampler(problem, cfg_inner, singular_nudge, u0, projector)
    curve, _ = _scan(sampler, _grid(lo, hi, step), float(phase_eps), True)
    return curve


def scan_phase(problem: EigenProblem, eps_mag, phase_range, step,
               cfg_inner: InnerConfig = None, *, u0=None, projector=None,
               singular_nudge=1e-8) -> ScanCurve:
    """Sample lambda along the circle ``|eps| = eps_mag``."""
    lo, hi = phase_range
    sampler = _Sampler(problem, cfg_inner, singular_nudge, u0, projector)
    curve, _ = _scan(sampler, _grid(lo, hi, step), float(eps_mag), False)
    return curve


def _secant(f, x0, f0, x1, f1, tol, max_steps, max_step=None, positive=False):
    """Secant iteration on a scalar function.  Once a sign change is known the
    iterates are kept inside it (bisection when the secant step leaves).
    Returns ``(x, fx, steps)``."""
    bracket = (x0, f0, x1, f1) if f0 * f1 < 0 else None
    if abs(f0) < abs(f1):
        x0, f0, x1, f1 = x1, f1, x0, f0
    steps = 0
    while not abs(f1) <= tol:
        if steps >= max_steps:
            raise SecantStall(f"no convergence after {steps} secant steps (|f| = {abs(f1):.3e})")
        if f1 == f0:
            raise BracketFailure("secant slope vanished")
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if max_step is not None and abs(x2 - x1) > max_step:
            x2 = x1 + math.copysign(max_step, x2 - x1)
        if bracket is not None:
            a, _, b, _ = bracket
            if not min(a, b) < x2 < max(a, b):
                x2 = 0.5 * (a + b)
        if positive and not x2 > 0:
            x2 = 0.5 * x1
        if not math.isfinite(x2):
            raise BracketFailure("secant iterate is not finite")
        f2 = f(x2)
        steps += 1
        if bracket is not None:
            a, fa, b, fb = bracket
            bracket = (a, fa, x2, f2) if fa * f2 < 0 else (x2, f2, b, fb)
        elif f1 * f2 < 0:
            bracket = (x1, f1, x2, f2)
        x0, f0, x1, f1 = x1, f1, x2, f2
    return x1, f1, steps


# non-converged inner solves tolerated within one polish before giving up
STRIKES = 3


class _Evaluation:
    """Scalar objective over inner solves; keeps the inner result of every point."""

    def __init__(self, value, sampler):
        self.value = value
        self.sampler = sampler
        self.outs = {}

    def __call__(self, x):
        out, v = self.value(x)
        if out is None or not math.isfinite(v):
            raise BracketFailure("inner solve failed inside the refinement")
        if not out.converged:
            # lambda is unreliable here, typically near a crossing of the two
            # leading branches; chase it only so far
            self.sampler.strikes += 1
            if self.sampler.strikes > STRIKES:
                raise BracketFailure(f"inner iteration keeps failing to converge (x={x!r})")
        self.outs[x] = out
        return v


def _mag_objective(sampler, phase, lam_ex):
    def value(m):
        out = sampler(m, phase)
        if out is None:
            return None, math.nan
        return out, abs(out.lam) / lam_ex - 1.0
    return value


def _refine_mag(sampler, phase, m0, m1, cfg, lam_ex):
    ev = _Evaluation(_mag_objective(sampler, phase, lam_ex), sampler)
    f0 = ev(m0)
    f1 = ev(m1)
    m, fm, steps = _secant(ev, m0, f0, m1, f1, cfg.tol_mag, cfg.max_secant_steps,
                           positive=True)
    out = ev.outs[m]
    sampler.u = out.u
    return m, fm, steps, out


def _sign_change(xs, fs):
    for a, b, fa, fb in zip(xs, xs[1:], fs, fs[1:]):
        if math.isfinite(fa) and math.isfinite(fb) and fa * fb <= 0:
            return a, b
    return None


def refine_magnitude(problem: EigenProblem, phase_eps, bracket, cfg: SearchConfig = None,
                     cfg_inner: InnerConfig = None, *, u0=None, projector=None) -> float:
    """|eps| on the ray ``phase_eps`` where |lambda(eps)| = lambda_ex.

    If the endpoints of ``bracket`` do not straddle the target, the bracket is
    subdivided in search of a sign change; BracketFailure if there is none.
    """
    cfg = cfg or SearchConfig()
    m1, m2 = map(float, bracket)
    if not 0 < m1 < m2:
        raise InputError(f"magnitude bracket must satisfy 0 < m1 < m2, got {bracket}")
    sampler = _Sampler(problem, cfg_inner, cfg.singular_nudge, u0, projector)
    value = _mag_objective(sampler, phase_eps, problem.lambda_ex)
    fs = [value(x)[1] for x in (m1, m2)]
    if math.isfinite(fs[0]) and math.isfinite(fs[1]) and fs[0] * fs[1] <= 0:
        return _refine_mag(sampler, phase_eps, m1, m2, cfg, problem.lambda_ex)[0]
    xs = list(np.linspace(m1, m2, 21))
    sampler.reset()
    fs = [value(x)[1] for x in xs]
    found = _sign_change(xs, fs)
    if found is not None:
        return _refine_mag(sampler, phase_eps, *found, cfg, problem.lambda_ex)[0]
    # no sign change: the level may only be touched (a tangent ray), so try
    # an unbracketed secant from the two samples nearest the target
    best = sorted((abs(f), x) for x, f in zip(xs, fs) if math.isfinite(f))[:2]
    if len(best) == 2:
        try:
            m = _refine_mag(sampler, phase_eps, best[0][1], best[1][1], cfg,
                            problem.lambda_ex)[0]
        except (SecantStall, BracketFailure):
            m = math.nan
        if m1 <= m <= m2:
            return m
    raise BracketFailure(f"|lambda| - lambda_ex keeps its sign on [{m1}, {m2}]")


def _phase_objective(sampler, mag):
    def value(p):
        out = sampler(mag, p)
        if out is None:
            return None, math.nan
        return out, to_polar(out.lam).phase
    return value


def refine_phase(problem: EigenProblem, eps_mag, phase_bracket=None, cfg: SearchConfig = None,
                 cfg_inner: InnerConfig = None, *, u0=None, projector=None) -> float:
    """phase(eps) at fixed |eps| = eps_mag where phase(lambda) = 0.

    The default bracket is [-pi/2, pi/2], widened once to [-pi, pi] when it
    holds no sign change.  Jumps of phase(lambda) across the negative real
    axis are not treated as roots.
    """
    cfg = cfg or SearchConfig()
    brackets = [phase_bracket] if phase_bracket is not None else \
        [(-math.pi / 2, math.pi / 2), (-math.pi, math.pi)]
    sampler = _Sampler(problem, cfg_inner, cfg.singular_nudge, u0, projector)
    value = _phase_objective(sampler, float(eps_mag))
    for lo, hi in brackets:
        xs = list(np.linspace(lo, hi, 25))
        sampler.reset()
        fs = [value(x)[1] for x in xs]
        for x, fx in zip(xs, fs):
            if abs(fx) <= cfg.tol_phase:
                return float(x)
        found = None
        for a, b, fa, fb in zip(xs, xs[1:], fs, fs[1:]):
            if math.isfinite(fa) and math.isfinite(fb) and fa * fb < 0 and abs(fa - fb) < math.pi:
                found = (a, b, fa, fb)
                break
        if found is None:
            continue
        a, b, fa, fb = found
        ev = _Evaluation(value, sampler)
        p, _, _ = _secant(ev, a, fa, b, fb, cfg.tol_phase, cfg.max_secant_steps)
        return float(p)
    raise BracketFailure("phase(lambda) has no sign change over the phase bracket")


def _rays(cfg):
    k = np.arange(cfg.phase_rays)
    phases = cfg.phase_start + 2 * math.pi * k / cfg.phase_rays
    return [math.remainder(p, 2 * math.pi) for p in phases]


class _Attempt:
    """One polish from a scan bracket: magnitude refine, then the phase secant
    along the |lambda| = lambda_ex curve."""

    def __init__(self, sampler, problem, cfg):
        self.sampler = sampler
        self.problem = problem
        self.cfg = cfg
        self.secant_log = []
        self.cycles = 0
        self.mag = math.nan
        self.fmag = math.nan
        self.out = None

    def magnitude_step(self, phase, m0, m1):
        m, fm, steps, out = _refine_mag(self.sampler, phase, m0, m1, self.cfg,
                                        self.problem.lambda_ex)
        self.secant_log.append(("magnitude", steps))
        self.mag, self.fmag, self.out = m, fm, out
        self.cycles += 1
        return to_polar(out.lam).phase

    def run(self, phase0, bracket):
        cfg = self.cfg
        g0 = self.magnitude_step(phase0, *bracket)
        p0 = phase0
        if abs(g0) <= cfg.tol_phase:
            return p0

        last = [g0]

        def along_curve(p):
            if self.cycles >= cfg.max_outer_cycles:
                raise SecantStall(f"max_outer_cycles={cfg.max_outer_cycles} exhausted")
            m = self.mag
            g = self.magnitude_step(p, m, m * (1.0 + 1e-4))
            # unwrap across the negative real axis so a jump from pi to -pi
            # is not taken for a sign change
            g += 2 * math.pi * round((last[0] - g) / (2 * math.pi))
            last[0] = g
            return g

        p1 = p0 + cfg.phase_trial_step
        g1 = along_curve(p1)
        # bracketing: secant-extrapolate along the curve until phase(lambda)
        # changes sign, then polish inside the bracket
        bracket_steps = 0
        while g0 * g1 > 0 and abs(g1) > cfg.tol_phase:
            if g1 == g0:
                raise BracketFailure("phase(lambda) does not move with phase(eps)")
            p2 = p1 - g1 * (p1 - p0) / (g1 - g0)
            if abs(p2 - p1) > cfg.max_phase_step:
                p2 = p1 + math.copysign(cfg.max_phase_step, p2 - p1)
            p0, g0, p1, g1 = p1, g1, p2, along_curve(p2)
            bracket_steps += 1
        self.secant_log.append(("phase-bracketing", bracket_steps))
        if abs(g1) <= cfg.tol_phase:
            self.secant_log.append(("phase", 0))
            return p1

        def at(p):
            g = along_curve(p)
            return self.out, g

        ev = _Evaluation(at, self.sampler)
        p, _, steps = _secant(ev, p0, g0, p1, g1, cfg.tol_phase, cfg.max_secant_steps,
                              max_step=cfg.max_phase_step)
        self.secant_log.append(("phase", steps))
        if p in ev.outs:
            self.out = ev.outs[p]
        return p


def _best_samples(samples, lam_ex):
    """The two finite samples closest to lambda = lambda_ex, as (eps, lam) pairs."""
    pts = {}
    for s in samples:
        if math.isfinite(s.lam.magnitude):
            eps = cmath.rect(*s.eps)
            pts[eps] = cmath.rect(*s.lam)
    ranked = sorted(pts.items(), key=lambda kv: abs(kv[1] - lam_ex))
    return ranked[:2]


def _complex_polish(sampler, start, lam_ex, cfg):
    """Secant on ``lambda(eps) - lambda_ex`` in the complex eps plane.

    Used when the polar polish stalls: at a root where a ray or a circle of
    constant |eps| is tangent to the level curves, the polar coordinates fold
    although lambda(eps) is still analytic.  Returns ``(out, steps)``.
    """
    if len(start) < 2:
        raise BracketFailure("need two samples to start the complex secant")
    (z0, l0), (z1, l1) = start[1], start[0]
    f0, f1 = l0 - lam_ex, l1 - lam_ex
    for steps in range(1, cfg.max_secant_steps + 1):
        if f1 == f0:
            raise BracketFailure("complex secant slope vanished")
        z2 = z1 - f1 * (z1 - z0) / (f1 - f0)
        if not cmath.isfinite(z2):
            raise BracketFailure("complex secant iterate is not finite")
        p = to_polar(z2)
        out = sampler(p.magnitude, p.phase)
        if out is None or not cmath.isfinite(out.lam):
            raise BracketFailure("inner solve failed inside the complex secant")
        if not out.converged:
            sampler.strikes += 1
            if sampler.strikes > STRIKES:
                raise BracketFailure("inner iteration keeps failing to converge")
        z0, f0, z1, f1 = z1, f1, out.epsilon, out.lam - lam_ex
        if (abs(abs(out.lam) / lam_ex - 1.0) <= cfg.tol_mag
                and abs(to_polar(out.lam).phase) <= cfg.tol_phase):
            return out, steps
    raise SecantStall(f"complex secant did not converge in {cfg.max_secant_steps} steps")


def solve_ground(problem: EigenProblem, cfg: SearchConfig = None, cfg_inner: InnerConfig = None,
                 *, u0=None, projector=None, exclude=()) -> SolveReport:
    """Find eps with lambda(eps) = lambda_ex by the alternating polar search.

    Rays ``phase_start + 2 pi k / phase_rays`` are scanned in turn; every
    sign change of |lambda| - lambda_ex is polished until both the magnitude
    and phase criteria hold and the eigen-residual is below
    ``1e-8 ||T||_inf``.  Roots within ``1e-6 ||T||`` of an eps in ``exclude``
    are skipped.  Returns the first accepted root; if none is accepted the
    best attempt is returned with ``converged=False``.
    """
    cfg = cfg or SearchConfig()
    cfg_inner = cfg_inner or InnerConfig()
    lo, hi, step = cfg.window(problem)
    t_norm = norm_inf(problem.T)
    residual_tol = RESIDUAL_RTOL * t_norm
    distinct_tol = 1e-6 * t_norm
    trace = ScanCurve()
    sampler = _Sampler(problem, cfg_inner, cfg.singular_nudge, u0, projector, trace)
    secant_log = []
    best = None
    cycles_total = 0
    found_bracket = False

    grid = _grid(lo, hi, step)
    for ray in _rays(cfg):
        sampler.reset()
        prev = None
        # the scan is consumed lazily: each sign change is polished as soon
        # as it appears, and the scan resumes from its own warm vector
        for i, mag in enumerate(grid):
            sampler(mag, ray)
            here = (sampler.trace.samples[-1].lam.magnitude - problem.lambda_ex, sampler.u)
            last, prev = prev, here
            if last is None:
                continue
            fa, fb = last[0], here[0]
            if not (math.isfinite(fa) and math.isfinite(fb) and fa * fb < 0):
                continue
            found_bracket = True
            sampler.reset(last[1])
            attempt = _Attempt(sampler, problem, cfg)
            sampler.strikes = 0
            first = len(trace.samples)
            try:
                attempt.run(ray, (grid[i - 1], grid[i]))
                out = attempt.out
            except (NumericalError, ZeroDivisionError) as exc:
                log.debug("polar polish from ray %.3f bracket %d failed: %s", ray, i, exc)
                start = _best_samples(trace.samples[first:], problem.lambda_ex)
                sampler.strikes = 0
                try:
                    out, steps = _complex_polish(sampler, start, problem.lambda_ex, cfg)
                except NumericalError as exc2:
                    log.debug("complex polish failed too: %s", exc2)
                    out = None
                else:
                    attempt.secant_log.append(("complex", steps))
            cycles_total += attempt.cycles
            secant_log.extend(attempt.secant_log)
            sampler.reset(here[1])
            if out is None:
                continue
            eps = out.epsilon
            residual = residual_norm(problem.T, problem.V, problem.lambda_ex, eps, out.u)
            report = SolveReport(
                epsilon=eps, u=out.u, lambda_achieved=out.lam, residual=residual,
                outer_cycles=cycles_total, trace=trace, converged=False,
                lambda_ex=problem.lambda_ex, tol_mag=cfg.tol_mag, tol_phase=cfg.tol_phase,
                residual_tol=residual_tol, secant_log=list(secant_log),
                inner_iterations=sampler.inner_iterations)
            duplicate = any(abs(eps - e) <= distinct_tol for e in exclude)
            ok = (out.converged and report.magnitude_error <= cfg.tol_mag
                  and report.phase_error <= cfg.tol_phase and residual <= residual_tol)
            if ok and not duplicate:
                report.converged = True
                return report
            log.debug("rejected root %r (converged=%s residual=%.3e duplicate=%s)",
                      eps, out.converged, residual, duplicate)
            if not duplicate and (best is None or residual < best.residual):
                best = report

    if not found_bracket:
        raise NoBracket(
            f"|lambda| never crossed lambda_ex={problem.lambda_ex} for |eps| in "
            f"[{lo:.4g}, {hi:.4g}] on {cfg.phase_rays} rays")
    if best is None:
        best = SolveReport(
            epsilon=complex(math.nan, math.nan), u=np.full(problem.n, np.nan, dtype=complex),
            lambda_achieved=complex(math.nan, math.nan), residual=math.inf,
            outer_cycles=cycles_total, trace=trace, converged=False,
            lambda_ex=problem.lambda_ex, tol_mag=cfg.tol_mag, tol_phase=cfg.tol_phase,
            residual_tol=residual_tol, secant_log=secant_log,
            inner_iterations=sampler.inner_iterations)
    best.inner_iterations = sampler.inner_iterations
    best.outer_cycles = cycles_total
    return best
