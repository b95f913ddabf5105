"""Critical-frontier extraction and extrapolation fits.

For each coupling with complex levels, the frontier is the smallest real part
among them; the divergence point of a curve through those points estimates the
critical coupling.  Two forms are supported, a power law a*(g-b)^c and a log
law a*(-log(g-b))^d, both fitted by a damped Gauss-Newton (Levenberg-
Marquardt) loop with analytic Jacobians and a multi-start over b, the one
parameter with a treacherous landscape (the singularity sits at g = b).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FitFailureError
from .scan import ScanResult

FORM_POWER = "power"
FORM_LOG = "log"
FORM_NESTED = "nested"  # a*(g-b)^c*(-log(g-b))^d, model-selection diagnostic

LM_LAMBDA0 = 1e-3
LM_FACTOR = 10.0
LM_STEP_RTOL = 1e-10
LM_COST_RTOL = 1e-12
LM_MAX_ITER = 400


@dataclass(frozen=True)
class FrontierPoint:
    g: float
    f: float  # minimum real part among complex-classified levels at this g


@dataclass
class FrontierFit:
    form: str
    params: tuple[float, ...]  # (a, b, c) or (a, b, d); nested: (a, b, c, d)
    sigmas: tuple[float, ...]
    residual_norm: float
    n_points: int
    degenerate: bool = False  # b pinned against its g_min bound
    extrapolated: bool = False  # b far below the fitted points
    start_b: float = field(default=math.nan)  # provenance: winning start value

    @property
    def b(self) -> float:
        return self.params[1]


def frontier(result: ScanResult) -> list[FrontierPoint]:
    """One point per complex-bearing coupling: the left edge of the complex
    region in the (g, Re) plane, sorted by g."""
    points = []
    for p in result.points:
        if p.status != "ok":
            continue
        res = [l.re for l in p.levels if l.is_complex]
        if res:
            points.append(FrontierPoint(g=p.g, f=min(res)))
    points.sort(key=lambda q: q.g)
    return points


# ---------------------------------------------------------------------------
# model forms
# ---------------------------------------------------------------------------

def _model_power(g, a, b, c):
    return a * (g - b) ** c


def _model_log(g, a, b, d):
    return a * (-np.log(g - b)) ** d


def _residual_jacobian(form: str, x: np.ndarray, g: np.ndarray, f: np.ndarray):
    """Residuals f - model(g) and the Jacobian of the *model* w.r.t. params."""
    if form == FORM_POWER:
        a, b, c = x
        t = g - b
        tc = t**c
        model = a * tc
        J = np.column_stack([tc, -a * c * t ** (c - 1.0), a * tc * np.log(t)])
    elif form == FORM_LOG:
        a, b, d = x
        t = g - b
        L = -np.log(t)
        Ld = L**d
        model = a * Ld
        J = np.column_stack([Ld, a * d * L ** (d - 1.0) / t, a * Ld * np.log(L)])
    elif form == FORM_NESTED:
        a, b, c, d = x
        t = g - b
        L = -np.log(t)
        tc = t**c
        Ld = L**d
        model = a * tc * Ld
        J = np.column_stack(
            [
                tc * Ld,
                a * tc * Ld * (-c / t + d / (L * t)),
                a * tc * Ld * np.log(t),
                a * tc * Ld * np.log(L),
            ]
        )
    else:
        raise DomainError(f"unknown fit form {form!r}")
    return f - model, J


def _in_domain(form: str, x: np.ndarray, g_min: float, g_max: float) -> bool:
    b = x[1]
    if not np.all(np.isfinite(x)):
        return False
    if g_min - b <= 1e-12:
        return False
    if form in (FORM_LOG, FORM_NESTED) and g_max - b >= 1.0 - 1e-12:
        return False  # -log(g-b) must stay positive
    return True


def _init_linear(form: str, b: float, g: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Closed-form start for the non-b parameters: the model is log-linear in
    them once b is fixed."""
    if form == FORM_POWER:
        X = np.log(g - b)
    elif form == FORM_LOG:
        X = np.log(-np.log(g - b))
    else:  # nested: regress on both log terms
        X = np.column_stack([np.log(g - b), np.log(-np.log(g - b))])
    y = np.log(f)
    if X.ndim == 1:
        A = np.column_stack([np.ones_like(X), X])
    else:
        A = np.column_stack([np.ones(len(y)), X])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    a = math.exp(coef[0])
    if form == FORM_NESTED:
        return np.array([a, b, coef[1], coef[2]])
    return np.array([a, b, coef[1]])


def _lm_minimize(form: str, x0: np.ndarray, g: np.ndarray, f: np.ndarray):
    """Classic damped least squares: lambda starts at 1e-3 and moves by
    factors of 10; stops on relative step < 1e-10 or relative cost change
    < 1e-12."""
    g_min, g_max = float(g.min()), float(g.max())
    if not _in_domain(form, x0, g_min, g_max):
        return None
    x = x0.copy()
    r, J = _residual_jacobian(form, x, g, f)
    cost = 0.5 * float(r @ r)
    lam = LM_LAMBDA0
    for _ in range(LM_MAX_ITER):
        JtJ = J.T @ J
        Jtr = J.T @ r
        diag = np.maximum(np.diag(JtJ), 1e-12 * max(np.max(np.diag(JtJ)), 1e-300))
        stepped = False
        for _ in range(60):
            try:
                delta = np.linalg.solve(JtJ + lam * np.diag(diag), Jtr)
            except np.linalg.LinAlgError:
                lam *= LM_FACTOR
                continue
            x_new = x + delta
            if not _in_domain(form, x_new, g_min, g_max):
                lam *= LM_FACTOR
                continue
            r_new, J_new = _residual_jacobian(form, x_new, g, f)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                step_small = np.linalg.norm(delta) <= LM_STEP_RTOL * (
                    np.linalg.norm(x) + LM_STEP_RTOL
                )
                cost_small = abs(cost - cost_new) <= LM_COST_RTOL * max(cost, 1e-300)
                x, r, J, cost = x_new, r_new, J_new, cost_new
                lam = max(lam / LM_FACTOR, 1e-15)
                stepped = True
                if step_small or cost_small:
                    return x, cost, r, J
                break
            lam *= LM_FACTOR
            if lam > 1e14:
                return x, cost, r, J
        if not stepped:
            return x, cost, r, J
    return x, cost, r, J


def _b_starts(g: np.ndarray) -> list[float]:
    g_min = float(g.min())
    span = float(g.max() - g.min())
    deltas = span * np.array([3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0])
    return [g_min - d for d in deltas]


def fit_frontier(points: list[FrontierPoint], form: str = FORM_POWER) -> FrontierFit:
    """Least-squares fit of the frontier curve, multi-started over b.

    Parameter sigmas come from the Jacobian-based covariance at the optimum;
    ties between equally good starts break toward the lowest b.
    """
    if form not in (FORM_POWER, FORM_LOG, FORM_NESTED):
        raise DomainError(f"form must be {FORM_POWER!r}, {FORM_LOG!r} or {FORM_NESTED!r}")
    if len(points) < 5:
        raise DomainError("need at least five frontier points to fit")
    g = np.array([p.g for p in points], dtype=float)
    f = np.array([p.f for p in points], dtype=float)
    if g.max() == g.min():
        raise DomainError("frontier points need a nonzero spread in g")
    if np.any(f <= 0):
        raise DomainError("frontier values must be positive")

    attempts = []
    best = None
    for b0 in _b_starts(g):
        if form in (FORM_LOG, FORM_NESTED) and float(g.max()) - b0 >= 1.0 - 1e-9:
            b0 = float(g.max()) - (1.0 - 1e-6)
            if float(g.min()) - b0 <= 1e-9:
                continue
        try:
            x0 = _init_linear(form, b0, g, f)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError):
            continue
        out = _lm_minimize(form, x0, g, f)
        if out is None:
            attempts.append({"b0": b0, "status": "out-of-domain"})
            continue
        x, cost, r, J = out
        attempts.append({"b0": b0, "cost": cost, "b": float(x[1])})
        # deterministic tie-break: lowest b wins among near-equal costs
        if (
            best is None
            or cost < best[1] * (1.0 - 1e-12)
            or (abs(cost - best[1]) <= 1e-12 * max(best[1], 1e-300) and x[1] < best[0][1])
        ):
            best = (x, cost, r, J, b0)
    if best is None:
        raise FitFailureError(
            "no start point produced a valid fit", diagnostics={"attempts": attempts}
        )
    x, cost, r, J, b0 = best
    n, p = len(g), len(x)
    ssr = 2.0 * cost
    dof = max(n - p, 1)
    try:
        cov = (ssr / dof) * np.linalg.pinv(J.T @ J)
        sigmas = tuple(float(s) for s in np.sqrt(np.maximum(np.diag(cov), 0.0)))
    except np.linalg.LinAlgError:
        sigmas = tuple(float("nan") for _ in x)
    span = float(g.max() - g.min())
    degenerate = bool((float(g.min()) - x[1]) <= 1e-8 * max(span, 1.0))
    extrapolated = bool(x[1] < float(g.min()) - 0.5 * span)
    return FrontierFit(
        form=form,
        params=tuple(float(v) for v in x),
        sigmas=sigmas,
        residual_norm=float(math.sqrt(ssr)),
        n_points=n,
        degenerate=degenerate,
        extrapolated=extrapolated,
        start_b=float(b0),
    )


def nested_exponent_diagnostic(points: list[FrontierPoint]) -> tuple[float, float]:
    """Fit the four-parameter nested form and report (c, sigma_c).

    When the data follow the pure log law, c comes out consistent with zero;
    this is the model-selection check that motivates the log form.
    """
    fit = fit_frontier(points, form=FORM_NESTED)
    return fit.params[2], fit.sigmas[2]


def evaluate_form(form: str, params, g):
    g = np.asarray(g, dtype=float)
    if form == FORM_POWER:
        return _model_power(g, *params)
    if form == FORM_LOG:
        return _model_log(g, *params)
    if form == FORM_NESTED:
        a, b, c, d = params
        return a * (g - b) ** c * (-np.log(g - b)) ** d
    raise DomainError(f"unknown fit form {form!r}")
