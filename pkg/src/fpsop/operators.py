"""Matrix realizations of the series operators, with norm bound machinery.

Operators act on coefficient vectors in the monomial basis.  A matrix stores
its columns sparsely (column ``L`` is the image of ``z**L``), so monomial
symbols scale to large truncations while general polynomial symbols stay
within a guarded dense budget.  Norm estimates are certified lower bounds:
truncation can only shrink an operator norm, never inflate it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .series import (
    EXACT,
    FLOAT,
    PolynomialSymbol,
    TruncatedSeries,
    cauchy_product,
)
from .weights import DeltaSequence, ValidationError, WeightSequence

__all__ = [
    "BoundCertificate",
    "MATRIX_KINDS",
    "OperatorMatrix",
    "ResourceLimitError",
    "apply",
    "build_matrix",
    "column_lower_bound",
    "norm_estimate_l2",
    "norm_lower_search",
]

MATRIX_KINDS = ("composition", "diamond-mult", "substitution")

DENSE_ENTRY_LIMIT = 10_000_000

CERTIFICATE_KINDS = ("lower", "upper", "exact")


class ResourceLimitError(RuntimeError):
    """A requested build exceeds the configured size guard."""


def _safe_float(value) -> float:
    try:
        return float(value)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class BoundCertificate:
    """A certified bound on an operator norm, with truncation diagnostics.

    ``value`` is the bound (may be ``inf``); ``kind`` says which side it
    certifies.  ``tail_delta`` is how much the running value moved over the
    final stretch of the scan and ``converged`` records whether that movement
    stayed within tolerance.  ``attained_at`` is the smallest index achieving
    the value, when one exists inside the scanned range.
    """

    value: float
    kind: str
    attained_at: Optional[int]
    truncation_degree: int
    tail_delta: float
    converged: bool
    notes: tuple = ()

    def __post_init__(self):
        if self.kind not in CERTIFICATE_KINDS:
            raise ValidationError(f"certificate kind must be one of {CERTIFICATE_KINDS}")
        value = float(self.value)
        if math.isnan(value) or value < 0:
            raise ValidationError(f"certificate value must be nonnegative, got {value!r}")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "tail_delta", float(self.tail_delta))
        if self.attained_at is not None and (
            not isinstance(self.attained_at, int) or self.attained_at < 0
        ):
            raise ValidationError("attained_at must be None or a nonnegative index")
        if not isinstance(self.truncation_degree, int) or self.truncation_degree < 0:
            raise ValidationError("truncation_degree must be a nonnegative integer")
        object.__setattr__(self, "converged", bool(self.converged))
        object.__setattr__(self, "notes", tuple(str(n) for n in self.notes))

    def as_report_dict(self) -> dict:
        return {
            "value": "inf" if math.isinf(self.value) else self.value,
            "kind": self.kind,
            "attained_at": self.attained_at,
            "truncation_degree": self.truncation_degree,
            "tail_delta": "inf" if math.isinf(self.tail_delta) else self.tail_delta,
            "converged": self.converged,
            "notes": list(self.notes),
        }


def _top_nonzero(coeffs: Sequence) -> int:
    top = 0
    for i, c in enumerate(coeffs):
        if c != 0:
            top = i
    return top


@dataclass(frozen=True)
class OperatorMatrix:
    """Column-sparse operator matrix over rows ``0..n_rows``, cols ``0..n_cols``.

    ``columns[L]`` lists ``(row, value)`` pairs of the image of ``z**L``.
    ``mode`` mirrors the scalar mode of the data that built it.
    """

    kind: str
    n_rows: int
    n_cols: int
    columns: tuple
    mode: str
    delta: DeltaSequence
    u: Optional[TruncatedSeries] = None
    phi: Optional[PolynomialSymbol] = None
    warnings: tuple = ()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows + 1, self.n_cols + 1)

    @property
    def nnz(self) -> int:
        return sum(len(col) for col in self.columns)

    def entry(self, n: int, L: int):
        if not (0 <= n <= self.n_rows and 0 <= L <= self.n_cols):
            raise ValidationError(f"entry ({n},{L}) outside shape {self.shape}")
        for row, value in self.columns[L]:
            if row == n:
                return value
        return 0.0 if self.mode == FLOAT else 0

    def column_series(self, L: int) -> TruncatedSeries:
        zero = 0.0 if self.mode == FLOAT else 0
        out = [zero] * (self.n_rows + 1)
        for row, value in self.columns[L]:
            out[row] = value
        return TruncatedSeries(tuple(out))

    def scaled_array(self, beta: WeightSequence) -> sp.csr_matrix:
        """Float matrix of the operator in norm-isometric coordinates.

        Entry ``(n, L)`` is ``w(n) * T[n, L] / w(L)``; p-norm ratios of this
        matrix equal weighted-norm ratios of the operator, for every p.
        """
        rows, cols, data = [], [], []
        for L, col in enumerate(self.columns):
            inv = beta.as_float(L)
            for row, value in col:
                rows.append(row)
                cols.append(L)
                data.append(_safe_float(value) * beta.as_float(row) / inv)
        return sp.csr_matrix(
            (data, (rows, cols)), shape=self.shape, dtype=np.float64
        )


def _check_dims(n_rows: int, n_cols: int) -> None:
    for name, v in (("N_rows", n_rows), ("N_cols", n_cols)):
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ValidationError(f"{name} must be a nonnegative integer, got {v!r}")


def _guard(estimate: int, label: str) -> None:
    if estimate > DENSE_ENTRY_LIMIT:
        raise ResourceLimitError(
            f"{label} needs ~{estimate} entries; the guard allows {DENSE_ENTRY_LIMIT}"
        )


def _u_support(u: TruncatedSeries) -> list[tuple[int, object]]:
    return [(k, c) for k, c in enumerate(u.coeffs) if c != 0]


def _power_nonzeros(phi: PolynomialSymbol, n_rows: int, n_cols: int):
    """Yield, for L = 0..n_cols, the nonzeros of ``phi**L`` truncated at n_rows."""
    mono = phi.monomial_degree()
    unit = 1.0 if phi.mode == FLOAT else 1
    if mono is not None:
        for L in range(n_cols + 1):
            pos = mono * L
            yield [(pos, unit)] if pos <= n_rows else []
        return
    base = phi.as_series()
    power = TruncatedSeries.unity(0)
    if phi.mode == FLOAT:
        power = power.to_float()
    for L in range(n_cols + 1):
        yield [(i, c) for i, c in enumerate(power.coeffs) if c != 0]
        if L < n_cols:
            power = cauchy_product(power, base, n_rows)


def build_matrix(kind: str, u: Optional[TruncatedSeries], phi: Optional[PolynomialSymbol],
                 delta: DeltaSequence, n_rows: int, n_cols: int) -> OperatorMatrix:
    """Assemble the truncated matrix of a composition / diamond-mult /
    substitution operator.

    Column ``L`` holds the coefficients of the operator applied to ``z**L``.
    Monomial symbols build sparsely; general polynomial symbols are guarded
    by an entry-count limit.  A warning is attached when ``n_rows`` is too
    small to hold every column untruncated.
    """
    if kind not in MATRIX_KINDS:
        raise ValidationError(f"kind must be one of {MATRIX_KINDS}, got {kind!r}")
    _check_dims(n_rows, n_cols)
    if kind in ("diamond-mult", "substitution") and u is None:
        raise ValidationError(f"{kind} operators require the series u")
    if kind in ("composition", "substitution") and phi is None:
        raise ValidationError(f"{kind} operators require the symbol phi")

    modes = set()
    if u is not None and kind != "composition":
        modes.add(u.mode)
    if phi is not None and kind != "diamond-mult":
        modes.add(phi.mode)
    if len(modes) > 1:
        raise ValidationError("u and phi must share one scalar mode")
    mode = modes.pop() if modes else EXACT

    warnings = []
    u_top = _top_nonzero(u.coeffs) if u is not None else 0
    phi_deg = phi.degree if phi is not None else 0

    if kind == "composition":
        needed = phi_deg * n_cols
        if phi.monomial_degree() is None:
            _guard((n_rows + 1) * (n_cols + 1), "dense composition build")
        columns = tuple(
            tuple(nz) for nz in _power_nonzeros(phi, n_rows, n_cols)
        )
    elif kind == "diamond-mult":
        needed = n_cols + u_top
        support = _u_support(u)
        _guard(max(len(support), 1) * (n_cols + 1), "diamond-mult build")
        cols = []
        for L in range(n_cols + 1):
            col = []
            for k, c in support:
                row = k + L
                if row > n_rows:
                    break
                col.append((row, delta.kernel(row, k) * c))
            cols.append(tuple(col))
        columns = tuple(cols)
    else:
        needed = phi_deg * n_cols + u_top
        support = _u_support(u)
        if phi.monomial_degree() is None:
            _guard((n_rows + 1) * (n_cols + 1), "dense substitution build")
        else:
            _guard(max(len(support), 1) * (n_cols + 1), "substitution build")
        cols = []
        for nz in _power_nonzeros(phi, n_rows, n_cols):
            acc: dict[int, object] = {}
            for j, pc in nz:
                for k, c in support:
                    row = j + k
                    if row > n_rows:
                        continue
                    term = delta.kernel(row, k) * c * pc
                    acc[row] = acc.get(row, 0) + term
            cols.append(tuple(sorted((r, v) for r, v in acc.items() if v != 0)))
        columns = tuple(cols)

    if n_rows < needed:
        warnings.append(
            f"columns clipped: top column reaches row {needed} but N_rows={n_rows}; "
            "lower bounds may be deflated"
        )

    if mode == FLOAT:
        columns = tuple(
            tuple((r, float(v)) for r, v in col) for col in columns
        )
    return OperatorMatrix(
        kind=kind, n_rows=n_rows, n_cols=n_cols, columns=columns, mode=mode,
        delta=delta, u=u, phi=phi, warnings=tuple(warnings),
    )


def apply(T: OperatorMatrix, f: TruncatedSeries) -> TruncatedSeries:
    """Matrix-vector product on coefficient vectors."""
    if f.degree_bound > T.n_cols:
        raise ValidationError(
            f"series degree bound {f.degree_bound} exceeds the column range {T.n_cols}"
        )
    float_mode = T.mode == FLOAT or f.mode == FLOAT
    zero = 0.0 if float_mode else 0
    out = [zero] * (T.n_rows + 1)
    for L, c in enumerate(f.coeffs):
        if c == 0:
            continue
        for row, value in T.columns[L]:
            out[row] += value * c
    return TruncatedSeries(tuple(out))


def _tail_stats(trajectory: Sequence[float], window: int, tolerance: float
                ) -> tuple[float, bool]:
    hi = trajectory[-1]
    w = min(window, len(trajectory) - 1)
    lo = trajectory[-1 - w] if w >= 1 else hi
    if math.isinf(hi):
        return math.inf, False
    delta = hi - lo
    return delta, abs(delta) <= tolerance


def column_lower_bound(T: OperatorMatrix, beta: WeightSequence, p,
                       tail_window: int = 10, tolerance: float = 1e-7
                       ) -> BoundCertificate:
    """Best ratio ``norm(T z**L) / w(L)`` over all monomial columns.

    Always a valid lower bound on the operator norm; the certificate records
    the first column achieving the maximum.
    """
    pf = float(p)
    if not math.isfinite(pf) or pf < 1:
        raise ValidationError(f"exponent must satisfy 1 <= p < inf, got {p!r}")
    best, attained = -1.0, None
    trajectory = []
    for L in range(T.n_cols + 1):
        terms = []
        for row, value in T.columns[L]:
            x = abs(_safe_float(value)) * beta.as_float(row)
            try:
                terms.append(x ** pf)
            except OverflowError:
                terms.append(math.inf)
        total = math.fsum(terms) if terms else 0.0
        ratio = (total ** (1.0 / pf) if not math.isinf(total) else math.inf)
        ratio = ratio / beta.as_float(L)
        if ratio > best:
            best, attained = ratio, L
        trajectory.append(best)
    tail_delta, settled = _tail_stats(trajectory, tail_window, tolerance)
    return BoundCertificate(
        value=best, kind="lower", attained_at=attained,
        truncation_degree=T.n_cols, tail_delta=tail_delta,
        converged=settled and math.isfinite(best),
        notes=("monomial column scan",),
    )


def _finite_scaled(T: OperatorMatrix, beta: WeightSequence) -> sp.csr_matrix:
    A = T.scaled_array(beta)
    if A.nnz and not np.isfinite(A.data).all():
        raise ValidationError("operator has non-finite scaled entries")
    return A


def _power_run(A: sp.csr_matrix, x: np.ndarray, max_iters: int, tol: float):
    """Power iteration on the normal matrix from a given start vector.

    Returns ``(sigma, iterations, converged, delta, final_x)``; ``sigma`` is
    a Rayleigh-quotient value, hence a lower bound on the top singular value.
    """
    cols = A.shape[1]
    sigma_prev = 0.0
    sigma = 0.0
    delta = math.inf
    converged = False
    iterations = 0
    for k in range(max_iters):
        iterations = k + 1
        z = A @ x
        rq = float(z @ z) / float(x @ x)
        sigma = math.sqrt(max(rq, 0.0))
        delta = sigma - sigma_prev
        if k > 0 and abs(delta) <= tol:
            converged = True
            break
        sigma_prev = sigma
        w = A.T @ z
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            x = np.zeros(cols)
            x[k % cols] = 1.0
            sigma_prev = 0.0
        else:
            x = w / nw
    return sigma, iterations, converged, delta, x


def norm_estimate_l2(T: OperatorMatrix, beta: WeightSequence,
                     max_iters: int = 50_000, tol: float = 1e-12
                     ) -> BoundCertificate:
    """Largest singular value of the scaled matrix, by power iteration.

    Independent of the bound evaluators: works directly on the truncated
    matrix.  The primary run starts from the fixed all-ones vector; because
    that start can be orthogonal to the top singular pair (convolution-type
    matrices often oscillate), two fixed probe starts briefly iterate
    afterwards, and whichever probe beats the primary value continues to a
    full run.  Everything is deterministic.  Rayleigh quotients never exceed
    the true norm, so the estimate is a certified lower bound; ``converged``
    reports whether the reported run stabilized within ``tol``.
    """
    if max_iters < 1:
        raise ValidationError("max_iters must be positive")
    A = _finite_scaled(T, beta)
    cols = A.shape[1]
    if A.nnz == 0:
        return BoundCertificate(
            value=0.0, kind="lower", attained_at=None,
            truncation_degree=T.n_cols, tail_delta=0.0, converged=True,
            notes=("power iteration on the scaled normal matrix", "iterations=0"),
        )
    ones = np.full(cols, 1.0 / math.sqrt(cols))
    sigma, iterations, converged, delta, _ = _power_run(A, ones, max_iters, tol)
    total_iters = iterations
    notes = []

    alternating = ones * np.where(np.arange(cols) % 2 == 0, 1.0, -1.0)
    gaussian = np.random.default_rng(0).standard_normal(cols)
    probe_iters = min(max_iters, 80)
    for probe in (alternating, gaussian):
        n_probe = float(np.linalg.norm(probe))
        if n_probe == 0.0:
            continue
        p_sigma, p_iters, _, _, p_x = _power_run(
            A, probe / n_probe, probe_iters, tol)
        total_iters += p_iters
        if p_sigma > sigma + max(tol, 1e-13):
            r_sigma, r_iters, r_conv, r_delta, _ = _power_run(
                A, p_x, max_iters, tol)
            total_iters += r_iters
            if r_sigma > sigma:
                sigma, converged, delta = r_sigma, r_conv, r_delta
                if "restarted from a dominating probe start" not in notes:
                    notes.append("restarted from a dominating probe start")
    return BoundCertificate(
        value=sigma, kind="lower", attained_at=None,
        truncation_degree=T.n_cols,
        tail_delta=(0.0 if math.isinf(delta) else delta),
        converged=converged,
        notes=tuple(["power iteration on the scaled normal matrix",
                     f"iterations={total_iters}"] + notes),
    )


def _pnorm(x: np.ndarray, pf: float) -> float:
    if pf == 2.0:
        return float(np.linalg.norm(x))
    ax = np.abs(x)
    top = float(ax.max(initial=0.0))
    if top == 0.0:
        return 0.0
    return top * float(np.sum((ax / top) ** pf)) ** (1.0 / pf)


def norm_lower_search(T: OperatorMatrix, beta: WeightSequence, p,
                      budget: int = 500, seed: int = 0,
                      tolerance: float = 1e-9) -> BoundCertificate:
    """Best weighted ratio ``norm(T x) / norm(x)`` found within a budget.

    Candidates: every monomial column, dual-scaling fixed-point iterations
    from three fixed dense starts, seeded random sparse vectors, and
    coordinate ascent around the incumbent.  Deterministic for a fixed seed;
    the value never falls below the monomial column bound.
    """
    pf = float(p)
    if not math.isfinite(pf) or pf < 1:
        raise ValidationError(f"exponent must satisfy 1 <= p < inf, got {p!r}")
    if budget < 0:
        raise ValidationError("budget must be nonnegative")
    A = _finite_scaled(T, beta)
    At = A.T.tocsr()
    cols = A.shape[1]
    evals = 0

    def ratio(x: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        nx = _pnorm(x, pf)
        if nx == 0.0:
            return 0.0
        return _pnorm(A @ x, pf) / nx

    csc = A.tocsc()
    col_pows = np.abs(csc.data) ** pf if csc.nnz else np.array([])
    col_norms = np.zeros(cols)
    for L in range(cols):
        seg = col_pows[csc.indptr[L]:csc.indptr[L + 1]]
        col_norms[L] = float(np.sum(seg)) ** (1.0 / pf) if seg.size else 0.0
    col_best = int(np.argmax(col_norms))
    best = float(col_norms[col_best])
    best_x = np.zeros(cols)
    best_x[col_best] = 1.0
    last_gain = 0.0

    def consider(x: np.ndarray) -> bool:
        nonlocal best, best_x, last_gain
        r = ratio(x)
        if r > best:
            last_gain = r - best
            best, best_x = r, x.copy()
            return True
        return False

    def dual_iterate(x0: np.ndarray, rounds: int) -> None:
        if pf == 1.0:
            return
        qf = pf / (pf - 1.0)
        x = x0.astype(float)
        nx = _pnorm(x, pf)
        if nx == 0.0:
            return
        x /= nx
        for _ in range(rounds):
            if evals >= budget:
                return
            consider(x)
            y = A @ x
            s = np.sign(y) * np.abs(y) ** (pf - 1.0)
            z = At @ s
            if not np.any(z):
                return
            x = np.sign(z) * np.abs(z) ** (qf - 1.0)
            nx = _pnorm(x, pf)
            if nx == 0.0 or not np.isfinite(nx):
                return
            x /= nx

    starts = (
        np.ones(cols),
        np.where(np.arange(cols) % 2 == 0, 1.0, -1.0),
        np.random.default_rng(0).standard_normal(cols),
    )
    for x0 in starts:
        dual_iterate(x0, max(budget // 6, 1))

    rng = np.random.default_rng(seed)
    trials = 0
    while evals + 2 <= budget and trials < 32:
        trials += 1
        size = int(rng.integers(1, min(8, cols) + 1))
        idx = rng.choice(cols, size=size, replace=False)
        x = np.zeros(cols)
        x[idx] = rng.uniform(-1.0, 1.0, size=size)
        if consider(x):
            dual_iterate(x, 5)

    step = 0.5
    while evals + 2 <= budget and step > 1e-6:
        improved = False
        order = rng.permutation(cols)
        for i in order:
            if evals + 2 > budget:
                break
            for sign in (1.0, -1.0):
                x = best_x.copy()
                x[i] += sign * step
                if consider(x):
                    improved = True
                    break
        if not improved:
            step /= 2.0

    value = max(best, float(col_norms[col_best]))
    return BoundCertificate(
        value=value, kind="lower", attained_at=None,
        truncation_degree=T.n_cols, tail_delta=last_gain,
        converged=last_gain <= tolerance,
        notes=("randomized lower-bound search", f"evaluations={evals}",
               f"seed={seed}"),
    )
