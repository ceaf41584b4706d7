"""Two-stage inferential pipeline for exposure logs.

Stage one models the participation threshold (engage vs. read-only) with
binary logistic regression fitted by iteratively reweighted least squares.
Stage two models engagement allocation (like vs. repost vs. quote) with
multinomial logistic regression fitted by joint Newton-Raphson over both
non-reference equations. Both use the same 24-column design: intercept,
the popularity composite, dummy-coded load and norm conditions, and all
two- and three-way products.

Standard errors come from the inverse observed information at the MLE,
odds ratios are exp(B), p-values are two-tailed Wald tests, and model fit
is summarized by the likelihood-ratio chi-square against the intercept-only
model, McFadden's pseudo R-square, and AIC.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy.special import expit, logsumexp
from scipy.stats import norm as _norm

from .core import (
    ActionKind,
    ExposureRecord,
    LoadLevel,
    NormRegime,
    popularity_composite,
)

# ---------------------------------------------------------------------------
# Design matrix
# ---------------------------------------------------------------------------

# Reference levels: LOWEST load, NO_NORM regime, LIKE as allocation baseline.
_LOAD_DUMMIES = (LoadLevel.LOW, LoadLevel.MEDIUM, LoadLevel.HIGH)
_NORM_DUMMIES = (NormRegime.LIKE_DOMINANT, NormRegime.REPOST_DOMINANT)
_NORM_SHORT = {NormRegime.LIKE_DOMINANT: "like_norm", NormRegime.REPOST_DOMINANT: "repost_norm"}

ALLOCATION_ACTIONS = (ActionKind.LIKE, ActionKind.REPOST, ActionKind.QUOTE)
ALLOCATION_EQUATIONS = ("repost_vs_like", "quote_vs_like")


def design_columns() -> list[str]:
    """Fixed column order of the 24-column design (intercept first)."""
    names = ["intercept", "popularity"]
    names += [f"{lv.value}_load" for lv in _LOAD_DUMMIES]
    names += [_NORM_SHORT[nr] for nr in _NORM_DUMMIES]
    names += [f"popularity:{lv.value}_load" for lv in _LOAD_DUMMIES]
    names += [f"popularity:{_NORM_SHORT[nr]}" for nr in _NORM_DUMMIES]
    names += [f"{lv.value}_load:{_NORM_SHORT[nr]}" for nr in _NORM_DUMMIES for lv in _LOAD_DUMMIES]
    names += [
        f"popularity:{lv.value}_load:{_NORM_SHORT[nr]}"
        for nr in _NORM_DUMMIES
        for lv in _LOAD_DUMMIES
    ]
    return names


DESIGN_COLUMNS = design_columns()
N_COLUMNS = len(DESIGN_COLUMNS)  # 24: intercept + 23 predictors


def design_row(composite: float, load: LoadLevel, norm: NormRegime) -> np.ndarray:
    """One design row for a given popularity composite and condition cell."""
    load_d = [1.0 if load is lv else 0.0 for lv in _LOAD_DUMMIES]
    norm_d = [1.0 if norm is nr else 0.0 for nr in _NORM_DUMMIES]
    row = [1.0, composite]
    row += load_d
    row += norm_d
    row += [composite * d for d in load_d]
    row += [composite * d for d in norm_d]
    row += [l * n for n in norm_d for l in load_d]
    row += [composite * l * n for n in norm_d for l in load_d]
    return np.asarray(row, dtype=np.float64)


def build_design_matrix(
    records: Iterable[ExposureRecord],
    stage: Literal["threshold", "allocation"],
) -> tuple[np.ndarray, list[str], np.ndarray]:
    """Assemble (X, column names, y) from exposure records.

    Threshold stage: every record, y = 1 for any engagement.
    Allocation stage: engaged records only, y in {0: like, 1: repost, 2: quote}.
    """
    comp: list[float] = []
    loads: list[LoadLevel] = []
    norms: list[NormRegime] = []
    ys: list[int] = []
    for r in records:
        if stage == "allocation":
            if not r.action.is_engagement:
                continue
            ys.append(ALLOCATION_ACTIONS.index(r.action))
        else:
            ys.append(1 if r.action.is_engagement else 0)
        comp.append(popularity_composite(r.likes, r.reshares))
        loads.append(r.load)
        norms.append(r.norm)
    if not ys:
        raise ValueError(f"no usable records for stage {stage!r}")

    n = len(ys)
    c = np.asarray(comp, dtype=np.float64)
    X = np.zeros((n, N_COLUMNS), dtype=np.float64)
    X[:, 0] = 1.0
    X[:, 1] = c
    load_cols = {lv: np.fromiter((1.0 if l is lv else 0.0 for l in loads), dtype=np.float64, count=n) for lv in _LOAD_DUMMIES}
    norm_cols = {nr: np.fromiter((1.0 if m is nr else 0.0 for m in norms), dtype=np.float64, count=n) for nr in _NORM_DUMMIES}
    j = 2
    for lv in _LOAD_DUMMIES:
        X[:, j] = load_cols[lv]
        j += 1
    for nr in _NORM_DUMMIES:
        X[:, j] = norm_cols[nr]
        j += 1
    for lv in _LOAD_DUMMIES:
        X[:, j] = c * load_cols[lv]
        j += 1
    for nr in _NORM_DUMMIES:
        X[:, j] = c * norm_cols[nr]
        j += 1
    for nr in _NORM_DUMMIES:
        for lv in _LOAD_DUMMIES:
            X[:, j] = load_cols[lv] * norm_cols[nr]
            j += 1
    for nr in _NORM_DUMMIES:
        for lv in _LOAD_DUMMIES:
            X[:, j] = c * load_cols[lv] * norm_cols[nr]
            j += 1
    assert j == N_COLUMNS
    return X, list(DESIGN_COLUMNS), np.asarray(ys, dtype=np.int64)


# ---------------------------------------------------------------------------
# Log-likelihoods and analytic gradients (exposed for finite-difference checks)
# ---------------------------------------------------------------------------


def binary_loglik(X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    """Bernoulli log-likelihood with a numerically stable log(1 + e^eta)."""
    eta = X @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def binary_score(X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Gradient of the Bernoulli log-likelihood: X'(y - p)."""
    p = expit(X @ beta)
    return X.T @ (y - p)


def multinomial_loglik(X: np.ndarray, y: np.ndarray, coef: np.ndarray) -> float:
    """Log-likelihood with a fixed zero linear predictor for the reference class.

    coef has shape (n_eq, k); class c >= 1 has eta_c = X @ coef[c-1].
    """
    eta = X @ coef.T  # (n, n_eq)
    full = np.concatenate([np.zeros((X.shape[0], 1)), eta], axis=1)
    denom = logsumexp(full, axis=1)
    picked = full[np.arange(X.shape[0]), y]
    return float(np.sum(picked - denom))


def multinomial_probs(X: np.ndarray, coef: np.ndarray) -> np.ndarray:
    eta = X @ coef.T
    full = np.concatenate([np.zeros((X.shape[0], 1)), eta], axis=1)
    full -= full.max(axis=1, keepdims=True)
    e = np.exp(full)
    return e / e.sum(axis=1, keepdims=True)


def multinomial_score(X: np.ndarray, y: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Gradient, flattened over equations: [X'(1[y=c] - p_c)] for c = 1..n_eq."""
    p = multinomial_probs(X, coef)
    parts = [X.T @ ((y == c).astype(np.float64) - p[:, c]) for c in range(1, coef.shape[0] + 1)]
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# Fitted model container
# ---------------------------------------------------------------------------

SEPARATION_BOUND = 15.0


@dataclass
class FitStatistics:
    chi2: float
    df: int
    mcfadden: float
    aic: float


def fit_statistics(ll_full: float, ll_null: float, k: int, k_null: int) -> FitStatistics:
    """Likelihood-ratio chi-square, its df, McFadden R-square, and AIC."""
    return FitStatistics(
        chi2=2.0 * (ll_full - ll_null),
        df=k - k_null,
        mcfadden=1.0 - ll_full / ll_null,
        aic=2.0 * k - 2.0 * ll_full,
    )


@dataclass
class FittedModel:
    """Estimates, uncertainty, and fit diagnostics for one fitted stage."""

    stage: Literal["threshold", "allocation"]
    terms: list[str]
    equations: list[str]                # ["engage"] or ["repost_vs_like", "quote_vs_like"]
    coef: np.ndarray                    # (n_eq, k)
    se: np.ndarray                      # (n_eq, k)
    cov: np.ndarray                     # (n_eq * k, n_eq * k)
    ll_full: float
    ll_null: float
    k_null: int
    n_obs: int
    n_iter: int
    converged: bool
    diagnostics: list[str] = field(default_factory=list)
    composite_max: float = 0.0

    @property
    def k(self) -> int:
        return int(self.coef.size)

    @property
    def metrics(self) -> FitStatistics:
        return fit_statistics(self.ll_full, self.ll_null, self.k, self.k_null)

    def odds_ratios(self) -> np.ndarray:
        return np.exp(self.coef)

    def p_values(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(self.coef / self.se)
        return 2.0 * _norm.sf(z)

    def coefficient_rows(self) -> list[dict]:
        """Flat per-coefficient rows: term, B, SE, OR, p, converged."""
        ors = self.odds_ratios()
        ps = self.p_values()
        rows = []
        for e, eq in enumerate(self.equations):
            prefix = "" if self.stage == "threshold" else f"{eq}:"
            for j, term in enumerate(self.terms):
                rows.append(
                    {
                        "term": f"{prefix}{term}",
                        "B": float(self.coef[e, j]),
                        "SE": float(self.se[e, j]),
                        "OR": float(ors[e, j]),
                        "p": float(ps[e, j]),
                        "converged": self.converged,
                    }
                )
        return rows

    def to_json_obj(self) -> dict:
        m = self.metrics
        return {
            "stage": self.stage,
            "terms": self.terms,
            "equations": self.equations,
            "coef": self.coef.tolist(),
            "se": self.se.tolist(),
            "cov": self.cov.tolist(),
            "ll_full": self.ll_full,
            "ll_null": self.ll_null,
            "k": self.k,
            "k_null": self.k_null,
            "n_obs": self.n_obs,
            "n_iter": self.n_iter,
            "converged": self.converged,
            "diagnostics": self.diagnostics,
            "composite_max": self.composite_max,
            "metrics": {"chi2": m.chi2, "df": m.df, "mcfadden": m.mcfadden, "aic": m.aic},
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "FittedModel":
        return cls(
            stage=obj["stage"],
            terms=list(obj["terms"]),
            equations=list(obj["equations"]),
            coef=np.asarray(obj["coef"], dtype=np.float64),
            se=np.asarray(obj["se"], dtype=np.float64),
            cov=np.asarray(obj["cov"], dtype=np.float64),
            ll_full=float(obj["ll_full"]),
            ll_null=float(obj["ll_null"]),
            k_null=int(obj["k_null"]),
            n_obs=int(obj["n_obs"]),
            n_iter=int(obj["n_iter"]),
            converged=bool(obj["converged"]),
            diagnostics=list(obj.get("diagnostics", [])),
            composite_max=float(obj.get("composite_max", 0.0)),
        )


def save_model(model: FittedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_json_obj(), indent=1), encoding="utf-8")


def load_model(path: str | Path) -> FittedModel:
    return FittedModel.from_json_obj(json.loads(Path(path).read_text(encoding="utf-8")))


def write_coefficient_csv(model: FittedModel, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["term", "B", "SE", "OR", "p", "converged"])
        writer.writeheader()
        for row in model.coefficient_rows():
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


def _newton(
    loglik,
    score,
    information,
    theta0: np.ndarray,
    *,
    max_iter: int = 100,
    tol: float = 1e-8,
    ridge_fallback: float = 1e-6,
) -> tuple[np.ndarray, float, int, bool, list[str]]:
    """Newton ascent with step halving and a ridge retry on singular systems.

    For the canonical-link models here the Newton iteration coincides with
    iteratively reweighted least squares. Convergence is declared when the
    log-likelihood improves by less than `tol` between iterations.
    """
    theta = theta0.copy()
    diagnostics: list[str] = []
    ll = loglik(theta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = score(theta)
        info = information(theta)
        try:
            step = np.linalg.solve(info, g)
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError("non-finite step")
        except np.linalg.LinAlgError:
            diagnostics.append(f"iteration {it}: singular information matrix, ridge {ridge_fallback:g} added")
            step = np.linalg.solve(info + ridge_fallback * np.eye(info.shape[0]), g)
        new_theta = theta + step
        new_ll = loglik(new_theta)
        halvings = 0
        while (not math.isfinite(new_ll) or new_ll < ll) and halvings < 30:
            step *= 0.5
            new_theta = theta + step
            new_ll = loglik(new_theta)
            halvings += 1
        theta = new_theta
        if abs(new_ll - ll) < tol:
            ll = new_ll
            converged = True
            break
        ll = new_ll
    if not converged:
        diagnostics.append(f"no convergence within {max_iter} iterations")
    return theta, ll, it, converged, diagnostics


def fit_binary_logistic(
    X: np.ndarray,
    y: np.ndarray,
    *,
    terms: Sequence[str] | None = None,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> FittedModel:
    """Maximum-likelihood binary logistic fit via IRLS.

    The intercept-only null model is fitted by the same routine. Quasi-
    separation (any |B| > 15) is reported through `converged=False` plus a
    diagnostic; estimates are still returned.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < X.shape[1]:
        raise ValueError(f"need at least as many rows as columns, got {X.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("binary outcome must be coded 0/1")

    def info(beta: np.ndarray) -> np.ndarray:
        p = expit(X @ beta)
        w = p * (1.0 - p)
        return X.T @ (w[:, None] * X)

    beta, ll_full, it, converged, diags = _newton(
        lambda b: binary_loglik(X, y, b),
        lambda b: binary_score(X, y, b),
        info,
        np.zeros(X.shape[1]),
        max_iter=max_iter,
        tol=tol,
    )

    ones = np.ones((X.shape[0], 1))

    def null_info(b: np.ndarray) -> np.ndarray:
        p = expit(ones @ b)
        return ones.T @ ((p * (1.0 - p))[:, None] * ones)

    _, ll_null, _, _, _ = _newton(
        lambda b: binary_loglik(ones, y, b),
        lambda b: binary_score(ones, y, b),
        null_info,
        np.zeros(1),
        max_iter=max_iter,
        tol=tol,
    )

    if np.any(np.abs(beta) > SEPARATION_BOUND):
        worst = int(np.argmax(np.abs(beta)))
        diags.append(f"possible separation: |B| > {SEPARATION_BOUND:g} at column {worst}")
        converged = False

    cov = _safe_inverse(info(beta), diags)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    terms = list(terms) if terms is not None else [f"x{j}" for j in range(X.shape[1])]
    return FittedModel(
        stage="threshold",
        terms=terms,
        equations=["engage"],
        coef=beta.reshape(1, -1),
        se=se.reshape(1, -1),
        cov=cov,
        ll_full=ll_full,
        ll_null=ll_null,
        k_null=1,
        n_obs=X.shape[0],
        n_iter=it,
        converged=converged,
        diagnostics=diags,
        composite_max=float(X[:, 1].max()) if X.shape[1] > 1 else 0.0,
    )


def fit_multinomial_logistic(
    X: np.ndarray,
    y: np.ndarray,
    *,
    terms: Sequence[str] | None = None,
    n_classes: int = 3,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> FittedModel:
    """Maximum-likelihood multinomial logistic fit via joint Newton-Raphson.

    Class 0 is the reference outcome; each remaining class gets its own
    coefficient block. An outcome class absent from the data makes its
    equation inestimable: the block is returned as NaN with a diagnostic.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if np.any((y < 0) | (y >= n_classes)):
        raise ValueError(f"outcome codes must lie in [0, {n_classes})")
    n, k = X.shape
    n_eq = n_classes - 1
    counts = np.bincount(y, minlength=n_classes)
    diags: list[str] = []
    missing = [c for c in range(n_classes) if counts[c] == 0]
    estimable = not missing
    for c in missing:
        diags.append(f"outcome class {c} has no observations; equation inestimable")

    def unflat(theta: np.ndarray) -> np.ndarray:
        return theta.reshape(n_eq, k)

    def info(theta: np.ndarray) -> np.ndarray:
        return _mn_info(X, unflat(theta), n_classes)

    if estimable:
        theta, ll_full, it, converged, newton_diags = _newton(
            lambda t: multinomial_loglik(X, y, unflat(t)),
            lambda t: multinomial_score(X, y, unflat(t)),
            info,
            np.zeros(n_eq * k),
            max_iter=max_iter,
            tol=tol,
        )
        diags.extend(newton_diags)
        coef = unflat(theta)
        if np.any(np.abs(coef) > SEPARATION_BOUND):
            diags.append(f"possible separation: |B| > {SEPARATION_BOUND:g}")
            converged = False
        cov = _safe_inverse(info(theta), diags)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None)).reshape(n_eq, k)
    else:
        coef = np.full((n_eq, k), np.nan)
        se = np.full((n_eq, k), np.nan)
        cov = np.full((n_eq * k, n_eq * k), np.nan)
        ll_full = float("nan")
        it, converged = 0, False

    # Intercept-only null model, same routine.
    ones = np.ones((n, 1))
    if estimable:
        theta0, ll_null, _, _, _ = _newton(
            lambda t: multinomial_loglik(ones, y, t.reshape(n_eq, 1)),
            lambda t: multinomial_score(ones, y, t.reshape(n_eq, 1)),
            lambda t: _mn_info(ones, t.reshape(n_eq, 1), n_classes),
            np.zeros(n_eq),
            max_iter=max_iter,
            tol=tol,
        )
    else:
        ll_null = float("nan")

    terms = list(terms) if terms is not None else [f"x{j}" for j in range(k)]
    return FittedModel(
        stage="allocation",
        terms=terms,
        equations=list(ALLOCATION_EQUATIONS[:n_eq]) if n_eq == 2 else [f"class{c}_vs_ref" for c in range(1, n_classes)],
        coef=coef,
        se=se,
        cov=cov,
        ll_full=ll_full,
        ll_null=ll_null,
        k_null=n_eq,
        n_obs=n,
        n_iter=it,
        converged=converged,
        diagnostics=diags,
        composite_max=float(X[:, 1].max()) if k > 1 else 0.0,
    )


def _mn_info(X: np.ndarray, coef: np.ndarray, n_classes: int) -> np.ndarray:
    n, k = X.shape
    n_eq = n_classes - 1
    p = multinomial_probs(X, coef)
    out = np.zeros((n_eq * k, n_eq * k))
    for c in range(1, n_classes):
        for d in range(1, n_classes):
            w = p[:, c] * ((1.0 if c == d else 0.0) - p[:, d])
            out[(c - 1) * k : c * k, (d - 1) * k : d * k] = X.T @ (w[:, None] * X)
    return out


def _safe_inverse(info: np.ndarray, diags: list[str], ridge: float = 1e-6) -> np.ndarray:
    try:
        return np.linalg.inv(info)
    except np.linalg.LinAlgError:
        diags.append(f"information matrix singular at optimum; covariance from ridge {ridge:g}")
        return np.linalg.inv(info + ridge * np.eye(info.shape[0]))


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


@dataclass(slots=True, frozen=True)
class Scenario:
    composite: float
    load: LoadLevel
    norm: NormRegime


def predicted_probabilities(model: FittedModel, scenarios: Sequence[Scenario]) -> list[dict]:
    """Predicted probabilities with 95% delta-method bands per scenario.

    Threshold models yield one row per scenario; allocation models yield one
    row per scenario and action (probabilities summing to 1). Scenarios that
    touch an inestimable equation are flagged instead of silently dropped.
    """
    rows: list[dict] = []
    k = len(model.terms)
    for sc in scenarios:
        x = design_row(sc.composite, sc.load, sc.norm)[:k]
        base = {"composite": sc.composite, "load": sc.load.value, "norm": sc.norm.value}
        if not np.all(np.isfinite(model.coef)):
            if model.stage == "threshold":
                rows.append({**base, "p": float("nan"), "lo": float("nan"), "hi": float("nan"), "flagged": True})
            else:
                for a in ALLOCATION_ACTIONS:
                    rows.append({**base, "action": a.value, "p": float("nan"), "lo": float("nan"), "hi": float("nan"), "flagged": True})
            continue
        if model.stage == "threshold":
            eta = float(x @ model.coef[0])
            se_eta = math.sqrt(max(float(x @ model.cov @ x), 0.0))
            p = float(expit(eta))
            half = 1.96 * p * (1.0 - p) * se_eta
            rows.append({**base, "p": p, "lo": max(p - half, 0.0), "hi": min(p + half, 1.0), "flagged": False})
        else:
            n_eq = model.coef.shape[0]
            eta = model.coef @ x
            full = np.concatenate([[0.0], eta])
            full -= full.max()
            e = np.exp(full)
            probs = e / e.sum()
            for a_idx, action in enumerate(ALLOCATION_ACTIONS):
                grad = np.zeros(n_eq * k)
                for c in range(1, n_eq + 1):
                    dpd_eta = probs[a_idx] * ((1.0 if a_idx == c else 0.0) - probs[c])
                    grad[(c - 1) * k : c * k] = dpd_eta * x
                var = float(grad @ model.cov @ grad)
                half = 1.96 * math.sqrt(max(var, 0.0))
                p = float(probs[a_idx])
                rows.append(
                    {**base, "action": action.value, "p": p, "lo": max(p - half, 0.0), "hi": min(p + half, 1.0), "flagged": False}
                )
    return rows


def read_scenario_csv(path: str | Path) -> list[Scenario]:
    """Scenario grid CSV with columns composite, load, norm."""
    scenarios = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            scenarios.append(
                Scenario(
                    composite=float(row["composite"]),
                    load=LoadLevel(row["load"].strip().lower()),
                    norm=NormRegime(row["norm"].strip().lower()),
                )
            )
    return scenarios


# ---------------------------------------------------------------------------
# Reference coefficient tables (previously reported estimates, used as
# consistency fixtures: exp(B) must reproduce the reported odds ratio and
# the Wald z must land in the reported p band).
# ---------------------------------------------------------------------------

REFERENCE_THRESHOLD_TABLE: list[tuple[str, float, float, float, str]] = [
    ("intercept", -2.787, 0.041, 0.062, "<.001"),
    ("popularity", 4.624, 0.115, 101.871, "<.001"),
    ("low_load", -0.438, 0.056, 0.645, "<.001"),
    ("medium_load", -0.758, 0.051, 0.469, "<.001"),
    ("high_load", -1.297, 0.049, 0.273, "<.001"),
    ("like_norm", 0.291, 0.057, 1.338, "<.001"),
    ("repost_norm", -0.465, 0.064, 0.628, "<.001"),
    ("popularity:low_load", -0.066, 0.146, 0.936, ".653"),
    ("popularity:medium_load", -1.156, 0.123, 0.315, "<.001"),
    ("popularity:high_load", -0.808, 0.122, 0.446, "<.001"),
    ("popularity:like_norm", -0.159, 0.143, 0.853, ".268"),
    ("popularity:repost_norm", 0.525, 0.178, 1.691, ".003"),
    ("low_load:like_norm", -0.011, 0.077, 0.989, ".887"),
    ("medium_load:like_norm", -0.013, 0.070, 0.987, ".850"),
    ("high_load:like_norm", 0.472, 0.066, 1.603, "<.001"),
    ("low_load:repost_norm", -0.182, 0.090, 0.834, ".044"),
    ("medium_load:repost_norm", -0.425, 0.084, 0.654, "<.001"),
    ("high_load:repost_norm", -0.298, 0.080, 0.742, "<.001"),
    ("popularity:low_load:like_norm", -0.279, 0.180, 0.757, ".121"),
    ("popularity:medium_load:like_norm", -0.126, 0.154, 0.882, ".412"),
    ("popularity:high_load:like_norm", -0.711, 0.151, 0.491, "<.001"),
    ("popularity:low_load:repost_norm", 2.639, 0.286, 13.995, "<.001"),
    ("popularity:medium_load:repost_norm", 3.326, 0.243, 27.815, "<.001"),
    ("popularity:high_load:repost_norm", 3.649, 0.226, 38.427, "<.001"),
]

REFERENCE_ALLOCATION_TABLE: dict[str, list[tuple[str, float, float, float, str]]] = {
    "quote_vs_like": [
        ("intercept", -0.180, 0.081, 0.835, ".027"),
        ("popularity", -0.935, 0.098, 0.392, "<.001"),
        ("low_load", -0.418, 0.112, 0.658, "<.001"),
        ("medium_load", -1.522, 0.122, 0.218, "<.001"),
        ("high_load", -1.683, 0.116, 0.186, "<.001"),
        ("like_norm", -1.687, 0.141, 0.185, "<.001"),
        ("repost_norm", -0.542, 0.177, 0.582, ".002"),
        ("popularity:low_load", 0.467, 0.124, 1.596, "<.001"),
        ("popularity:medium_load", 0.731, 0.128, 2.076, "<.001"),
        ("popularity:high_load", 0.982, 0.120, 2.671, "<.001"),
        ("popularity:like_norm", 0.204, 0.154, 1.226, ".185"),
        ("popularity:repost_norm", 0.477, 0.192, 1.611, ".013"),
        ("low_load:like_norm", -0.308, 0.174, 0.735, ".076"),
        ("medium_load:like_norm", -0.237, 0.161, 0.789, ".140"),
        ("high_load:like_norm", 0.217, 0.144, 1.242, ".131"),
        ("low_load:repost_norm", 0.570, 0.214, 1.768, ".008"),
        ("medium_load:repost_norm", 1.179, 0.206, 3.252, "<.001"),
        ("high_load:repost_norm", 1.368, 0.191, 3.929, "<.001"),
        ("popularity:low_load:like_norm", 0.512, 0.218, 1.668, ".019"),
        ("popularity:medium_load:like_norm", 0.582, 0.188, 1.790, ".002"),
        ("popularity:high_load:like_norm", 0.191, 0.184, 1.211, ".300"),
        ("popularity:low_load:repost_norm", -0.858, 0.299, 0.424, ".004"),
        ("popularity:medium_load:repost_norm", -1.246, 0.270, 0.288, "<.001"),
        ("popularity:high_load:repost_norm", -1.515, 0.246, 0.220, "<.001"),
    ],
    "repost_vs_like": [
        ("intercept", -4.108, 0.380, 0.016, "<.001"),
        ("popularity", 0.141, 0.338, 1.152, ".676"),
        ("low_load", -0.084, 0.498, 0.919, ".865"),
        ("medium_load", 0.262, 0.537, 1.300, ".626"),
        ("high_load", -0.595, 0.528, 0.552, ".259"),
        ("like_norm", -1.773, 0.697, 0.170, ".011"),
        ("repost_norm", 4.490, 0.395, 89.100, "<.001"),
        ("popularity:low_load", 0.515, 0.566, 1.674, ".363"),
        ("popularity:medium_load", -1.714, 0.576, 0.180, ".003"),
        ("popularity:high_load", -2.765, 0.585, 0.063, "<.001"),
        ("popularity:like_norm", -0.135, 0.821, 0.874, ".870"),
        ("popularity:repost_norm", -1.827, 0.483, 0.161, "<.001"),
        ("low_load:like_norm", 1.232, 0.787, 3.428, ".118"),
        ("medium_load:like_norm", 0.837, 0.772, 2.309, ".278"),
        ("high_load:like_norm", 0.521, 0.751, 1.684, ".489"),
        ("low_load:repost_norm", 0.828, 0.532, 2.290, ".120"),
        ("medium_load:repost_norm", 0.598, 0.530, 1.818, ".259"),
        ("high_load:repost_norm", 1.451, 0.522, 4.267, ".006"),
        ("popularity:low_load:like_norm", -0.677, 0.990, 0.508, ".493"),
        ("popularity:medium_load:like_norm", 1.358, 0.975, 3.890, ".165"),
        ("popularity:high_load:like_norm", 2.007, 0.952, 7.440, ".035"),
        ("popularity:low_load:repost_norm", 0.697, 0.571, 2.008, ".222"),
        ("popularity:medium_load:repost_norm", 3.167, 0.580, 23.728, "<.001"),
        ("popularity:high_load:repost_norm", 4.334, 0.574, 76.282, "<.001"),
    ],
}

# Reported fit statistics for the threshold stage, used by the identity
# back-solve check: AIC and the LR chi-square/McFadden pair must all follow
# from these two log-likelihoods and parameter counts.
REFERENCE_THRESHOLD_FIT = {
    "ll_full": -72_042.0,
    "ll_null": -142_968.27,
    "k": 24,
    "k_null": 1,
    "aic": 144_132.0,
    "chi2": 141_852.5,
    "chi2_df": 23,
    "mcfadden": 0.496,
}


@dataclass
class ConsistencyReport:
    rows: list[dict]

    @property
    def failures(self) -> list[dict]:
        return [r for r in self.rows if not r["ok"]]

    @property
    def ok(self) -> bool:
        return not self.failures


def table_consistency_check(
    *,
    rel_tol: float = 0.01,
    abs_tol: float = 5e-4,
) -> ConsistencyReport:
    """Verify exp(B) against every reported odds ratio in both reference tables.

    Reported ORs carry three decimals, so the check passes when exp(B) is
    within 1% of the reported value or within half of the last printed digit
    (0.0005), whichever is looser; without the absolute floor a tiny OR such
    as 0.016 could never match its own source. Rows reported as p < .001
    must also reproduce that band from B/SE.
    """
    rows = []

    def check(table: str, eq: str | None, term: str, b: float, se: float, or_: float, p: str) -> None:
        exp_b = math.exp(b)
        or_ok = abs(exp_b - or_) <= max(rel_tol * or_, abs_tol)
        wald_ok = True
        if p == "<.001":
            wald_ok = 2.0 * _norm.sf(abs(b / se)) < 0.001
        rows.append(
            {
                "table": table,
                "equation": eq,
                "term": term,
                "B": b,
                "exp_B": exp_b,
                "reported_OR": or_,
                "or_ok": or_ok,
                "wald_ok": wald_ok,
                "ok": or_ok and wald_ok,
            }
        )

    for term, b, se, or_, p in REFERENCE_THRESHOLD_TABLE:
        check("threshold", None, term, b, se, or_, p)
    for eq, table in REFERENCE_ALLOCATION_TABLE.items():
        for term, b, se, or_, p in table:
            check("allocation", eq, term, b, se, or_, p)
    return ConsistencyReport(rows)
