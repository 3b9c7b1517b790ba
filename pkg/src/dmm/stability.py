"""Hellinger geometry, principal angles and computable perturbation bounds.

Bounds are returned as plain numbers so that they can be compared with
empirical deviations measured on small instances.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .operator import CLASS_NORMALIZED, AmplitudeMatrix, spectral_decompose

__all__ = [
    "bhattacharyya",
    "hellinger",
    "hellinger_direct",
    "principal_angle_sines",
    "davis_kahan_bound",
    "perturbation_epsilon",
    "operator_perturbation_bound",
    "imbalance_deviation_bound",
    "spectral_norm",
    "top_eigenspace",
    "operator_difference_norm",
    "procrustes_alignment_error",
    "PerturbationReport",
    "embedding_stability_report",
    "MonteCarloResult",
    "multinomial_bound_check",
]


def _simplex(p, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ConfigError(f"{name} must be a non-empty vector")
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
        raise ConfigError(f"{name} is not a probability vector")
    return p


def bhattacharyya(p, q) -> float:
    """``sum_i sqrt(p_i q_i)``, clamped to ``[0, 1]``."""
    p, q = _simplex(p, "p"), _simplex(q, "q")
    if p.shape != q.shape:
        raise ConfigError("p and q must have equal length")
    return float(min(max(np.sum(np.sqrt(p * q)), 0.0), 1.0))


def hellinger(p, q) -> float:
    """``sqrt(1 - BC(p, q))``."""
    return math.sqrt(max(1.0 - bhattacharyya(p, q), 0.0))


def hellinger_direct(p, q) -> float:
    """``||sqrt(p) - sqrt(q)||_2 / sqrt(2)``."""
    p, q = _simplex(p, "p"), _simplex(q, "q")
    if p.shape != q.shape:
        raise ConfigError("p and q must have equal length")
    return float(np.linalg.norm(np.sqrt(p) - np.sqrt(q)) / math.sqrt(2.0))


def _check_orthonormal(u: np.ndarray, name: str, tol: float = 1e-8) -> None:
    err = np.abs(u.T @ u - np.eye(u.shape[1])).max() if u.size else 0.0
    if err > tol:
        raise ConfigError(f"{name} columns are not orthonormal (error {err:.2e})")


def principal_angle_sines(u1, u2) -> np.ndarray:
    """Sines of the principal angles between ``span(u1)`` and ``span(u2)``, descending.

    Computed as singular values of ``(I - u1 u1^T) u2`` which, unlike
    ``sqrt(1 - cos^2)``, stays accurate for nearly aligned subspaces.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.ndim == 1:
        u1 = u1[:, None]
    if u2.ndim == 1:
        u2 = u2[:, None]
    if u1.shape != u2.shape:
        raise ConfigError(f"shape mismatch {u1.shape} vs {u2.shape}")
    _check_orthonormal(u1, "U1")
    _check_orthonormal(u2, "U2")
    r = u1.shape[1]
    resid = u2 - u1 @ (u1.T @ u2)
    s = np.linalg.svd(resid, compute_uv=False)
    out = np.zeros(r)
    out[: min(r, s.size)] = s[:r]
    return np.sort(np.clip(out, 0.0, 1.0))[::-1]


def davis_kahan_bound(perturbation_norm: float, gap: float) -> float:
    """``||E||_2 / gap``; requires a positive spectral gap."""
    if gap <= 0:
        raise ConfigError("Davis-Kahan bound needs a positive spectral gap")
    if perturbation_norm < 0:
        raise ConfigError("perturbation norm must be nonnegative")
    return perturbation_norm / gap


def perturbation_epsilon(k: int, d: int, p_min: float, n_min: int, delta: float = 0.05):
    """Radius ``eps`` of the amplitude perturbation and the positivity condition.

    ``eps = sqrt(k d log(4dk/delta) / (4 p_min n_min))``; the condition is
    ``sqrt(log(4dk/delta) / (2 n_min)) <= p_min / 2``.
    """
    if k < 1 or d < 1 or n_min < 1:
        raise ConfigError("k, d and n_min must be at least 1")
    if not 0 < p_min < 1:
        raise ConfigError("p_min must lie in (0, 1)")
    if not 0 < delta < 1:
        raise ConfigError("delta must lie in (0, 1)")
    log_term = math.log(4 * d * k / delta)
    eps = math.sqrt(k * d * log_term / (4 * p_min * n_min))
    ok = math.sqrt(log_term / (2 * n_min)) <= p_min / 2
    return eps, ok


def operator_perturbation_bound(psi_norm: float, epsilon: float, k: int) -> float:
    """``(2 ||Psi||_2 eps + eps^2) / k``."""
    if psi_norm < 0 or epsilon < 0 or k < 1:
        raise ConfigError("need psi_norm >= 0, epsilon >= 0, k >= 1")
    return (2.0 * psi_norm * epsilon + epsilon * epsilon) / k


def imbalance_deviation_bound(psi_norm_sq: float, weights) -> float:
    """``||Psi||_2^2 * max_y |w_y - 1/k|``."""
    w = _simplex(weights, "weights")
    return float(psi_norm_sq * np.max(np.abs(w - 1.0 / w.size)))


def spectral_norm(m) -> float:
    """Largest singular value of an explicit matrix (small inputs)."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def top_eigenspace(m, r: int):
    """Top-``r`` eigenvalues (all, descending) and eigenvectors of a dense symmetric matrix."""
    w, v = np.linalg.eigh(0.5 * (np.asarray(m, float) + np.asarray(m, float).T))
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order[:r]]


def operator_difference_norm(a: AmplitudeMatrix, b: AmplitudeMatrix) -> float:
    """``||rho_a - rho_b||_2`` from the thin factors, without ``d x d`` matrices.

    ``rho_a - rho_b = B D B^T`` with ``B = [A_a, A_b]``; after ``B = QR`` the
    norm is the largest absolute eigenvalue of ``R D R^T``.
    """
    fa = a.columns / math.sqrt(a.trace_normalizer)
    fb = b.columns / math.sqrt(b.trace_normalizer)
    stacked = np.hstack([fa, fb])
    _, rmat = np.linalg.qr(stacked)
    sign = np.concatenate([np.ones(fa.shape[1]), -np.ones(fb.shape[1])])
    core = (rmat * sign) @ rmat.T
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (core + core.T)))))


def procrustes_alignment_error(u_ref, u_hat, points) -> float:
    """``min_R max_x ||u_hat^T x - R^T u_ref^T x||`` over the Procrustes rotation
    and per-column sign flips; ``points`` are rows of normalized survey vectors."""
    u_ref = np.asarray(u_ref, float)
    u_hat = np.asarray(u_hat, float)
    x = np.atleast_2d(np.asarray(points, float))
    w, _, vt = np.linalg.svd(u_ref.T @ u_hat)
    candidates = [w @ vt]
    r = u_ref.shape[1]
    for mask in range(1 << r):
        candidates.append(np.diag([-1.0 if mask >> j & 1 else 1.0 for j in range(r)]))
    ref = x @ u_ref
    hat = x @ u_hat
    return min(float(np.max(np.linalg.norm(hat - ref @ rot, axis=1))) for rot in candidates)


@dataclass
class PerturbationReport:
    """Bounds and measured deviations for one truth/empirical operator pair."""

    gap: float
    dk_bound: float
    empirical_sin_theta: float
    empirical_operator_deviation: float
    epsilon: float | None = None
    positivity_condition_ok: bool | None = None
    operator_bound: float | None = None
    parameters: dict = field(default_factory=dict)

    @property
    def bound_holds(self) -> bool:
        return self.empirical_sin_theta <= self.dk_bound + 1e-12

    def to_dict(self) -> dict:
        out = asdict(self)
        out["bound_holds"] = self.bound_holds
        return out


def _gap(spectrum, r: int) -> float:
    sigma = spectrum.eigenvalues
    if r > sigma.size:
        raise ConfigError(f"r={r} exceeds the operator rank {sigma.size}")
    nxt = sigma[r] if r < sigma.size else 0.0
    return float(sigma[r - 1] - nxt)


def embedding_stability_report(
    truth: AmplitudeMatrix,
    empirical: AmplitudeMatrix,
    r: int,
    n_min: int | None = None,
    p_min: float | None = None,
    delta: float = 0.05,
) -> PerturbationReport:
    """Compare top-``r`` eigenspaces of two class-normalized operators.

    The Davis-Kahan bound uses the truth operator's gap and the measured
    ``||rho_hat - rho||_2``.  When ``n_min`` and ``p_min`` are given, the
    high-probability radius and operator bound are attached as well.
    """
    for name, amp in (("truth", truth), ("empirical", empirical)):
        if amp.variant != CLASS_NORMALIZED:
            raise ConfigError(f"{name} must be a class-normalized amplitude matrix")
    if truth.columns.shape != empirical.columns.shape:
        raise ConfigError("truth and empirical amplitudes differ in shape")
    spec_true = spectral_decompose(truth)
    spec_emp = spectral_decompose(empirical)
    gap = _gap(spec_true, r)
    if gap <= 0:
        raise ConfigError("truth operator has no spectral gap at r")
    if spec_emp.rank < r:
        raise ConfigError(f"empirical operator rank {spec_emp.rank} below r={r}")
    deviation = operator_difference_norm(empirical, truth)
    sines = principal_angle_sines(spec_true.eigenvectors[:, :r], spec_emp.eigenvectors[:, :r])
    report = PerturbationReport(
        gap=gap,
        dk_bound=davis_kahan_bound(deviation, gap),
        empirical_sin_theta=float(sines[0]),
        empirical_operator_deviation=deviation,
        parameters={"d": truth.d, "k": truth.k, "r": r, "delta": delta},
    )
    if n_min is not None and p_min is not None:
        eps, ok = perturbation_epsilon(truth.k, truth.d, p_min, n_min, delta)
        psi_norm = math.sqrt(spec_true.eigenvalues[0] * truth.k)
        report.epsilon = eps
        report.positivity_condition_ok = ok
        report.operator_bound = operator_perturbation_bound(psi_norm, eps, truth.k)
        report.parameters.update(n_min=int(n_min), p_min=float(p_min))
    return report


@dataclass
class MonteCarloResult:
    trials: int
    epsilon: float
    condition_ok: bool
    operator_bound: float
    subspace_bound: float | None
    operator_fraction: float
    subspace_fraction: float | None
    max_operator_deviation: float
    max_sin_theta: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def multinomial_bound_check(
    profiles,
    n_min: int,
    trials: int = 200,
    delta: float = 0.05,
    r: int | None = None,
    seed: int = 0,
) -> MonteCarloResult:
    """Frequency with which resampled profiles satisfy the operator bound.

    ``profiles`` is a list of per-block laws of shape ``(k, m_i)``; each class
    receives ``n_min`` samples per trial and trial ``t`` uses seed ``seed + t``.
    When ``r`` is given the Davis-Kahan subspace bound is checked as well.
    """
    laws = [np.asarray(p, dtype=float) for p in profiles]
    k = laws[0].shape[0]
    q = len(laws)
    p_true = np.vstack([law.T for law in laws]) / q
    d = p_true.shape[0]
    p_min = float(p_true.min())
    if p_min <= 0:
        raise ConfigError("profiles must be strictly positive")
    truth = AmplitudeMatrix(np.sqrt(p_true), CLASS_NORMALIZED)
    spec_true = spectral_decompose(truth)
    psi_norm = math.sqrt(spec_true.eigenvalues[0] * k)
    eps, ok = perturbation_epsilon(k, d, p_min, n_min, delta)
    op_bound = operator_perturbation_bound(psi_norm, eps, k)
    sub_bound = None
    if r is not None:
        sub_bound = davis_kahan_bound(op_bound, _gap(spec_true, r))

    op_hits = sub_hits = 0
    max_dev = 0.0
    max_sin = 0.0
    for t in range(trials):
        rng = np.random.Generator(np.random.PCG64(seed + t))
        counts = np.vstack([
            np.column_stack([rng.multinomial(n_min, law[y]) for y in range(k)]) for law in laws
        ]).astype(float)
        emp = AmplitudeMatrix(np.sqrt(counts / (n_min * q)), CLASS_NORMALIZED)
        dev = operator_difference_norm(emp, truth)
        max_dev = max(max_dev, dev)
        op_hits += dev <= op_bound
        if r is not None:
            spec_emp = spectral_decompose(emp)
            s = principal_angle_sines(spec_true.eigenvectors[:, :r], spec_emp.eigenvectors[:, :r])[0]
            max_sin = max(max_sin, float(s))
            sub_hits += s <= sub_bound
    return MonteCarloResult(
        trials=trials,
        epsilon=eps,
        condition_ok=ok,
        operator_bound=op_bound,
        subspace_bound=sub_bound,
        operator_fraction=op_hits / trials,
        subspace_fraction=None if r is None else sub_hits / trials,
        max_operator_deviation=max_dev,
        max_sin_theta=None if r is None else max_sin,
    )
