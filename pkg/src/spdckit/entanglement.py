"""Two-qubit polarization states: Bell states, correlations, CHSH and MLE tomography.

Basis order is {HH, HV, VH, VV}. An analyzer angle theta selects the linear
polarization cos(theta)|H> + sin(theta)|V>; D and A are theta = +/- pi/4.
Circular analyzers use |R> = (|H> - i|V>)/sqrt(2), |L> = (|H> + i|V>)/sqrt(2).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import NumericalError, PreconditionError

HERM_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10
LOG_EPS = 1e-12


@dataclass(frozen=True)
class DensityMatrix:
    data: np.ndarray

    def __post_init__(self):
        rho = np.array(self.data, dtype=complex)
        if rho.shape != (4, 4):
            raise PreconditionError("density matrix must be 4x4")
        object.__setattr__(self, "data", rho)
        report = self.check()
        bad = [k for k, ok in report.items() if not ok]
        if bad:
            raise PreconditionError(f"density matrix violates {', '.join(bad)}")

    def check(self) -> dict:
        rho = self.data
        return {
            "hermitian": bool(np.max(np.abs(rho - rho.conj().T)) <= HERM_TOL),
            "unit_trace": bool(abs(np.trace(rho) - 1) <= TRACE_TOL),
            "positive": bool(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() >= PSD_TOL),
        }

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))

    def expectation(self, op) -> float:
        return float(np.real(np.trace(self.data @ op)))

    def to_json_dict(self) -> dict:
        return {
            "basis": ["HH", "HV", "VH", "VV"],
            "rho": [[[float(z.real), float(z.imag)] for z in row] for row in self.data],
            "checks": self.check(),
            "purity": self.purity,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DensityMatrix":
        return cls(np.array([[complex(re, im) for re, im in row] for row in doc["rho"]]))


def _ket(theta: float | None = None, circ: str = ""):
    if circ == "R":
        return np.array([1, -1j]) / math.sqrt(2)
    if circ == "L":
        return np.array([1, 1j]) / math.sqrt(2)
    if circ:
        raise PreconditionError(f"unknown circular flag {circ!r}")
    return np.array([math.cos(theta), math.sin(theta)], dtype=complex)


@dataclass(frozen=True)
class MeasurementSetting:
    """Product analyzer; a circular flag ("R"/"L") overrides the linear angle."""

    theta_A: float = 0.0
    theta_B: float = 0.0
    circ_A: str = ""
    circ_B: str = ""
    label: str = ""

    @property
    def ket(self):
        return np.kron(_ket(self.theta_A, self.circ_A), _ket(self.theta_B, self.circ_B))

    @property
    def projector(self):
        k = self.ket
        return np.outer(k, k.conj())

    @property
    def flags(self) -> str:
        return (self.circ_A or "-") + (self.circ_B or "-")


_NAMED = {"H": (0.0, ""), "V": (math.pi / 2, ""), "D": (math.pi / 4, ""),
          "A": (-math.pi / 4, ""), "R": (0.0, "R"), "L": (0.0, "L")}


def setting(label: str) -> MeasurementSetting:
    """Setting from a two-letter label such as "HV" or "DR"."""
    a, b = _NAMED[label[0]], _NAMED[label[1]]
    return MeasurementSetting(a[0], b[0], a[1], b[1], label)


JAMES_16 = ("HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
            "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL")


def tomography_settings(kind: int = 16) -> list[MeasurementSetting]:
    if kind == 16:
        return [setting(s) for s in JAMES_16]
    if kind == 36:
        return [setting(a + b) for a in "HVDARL" for b in "HVDARL"]
    raise PreconditionError("setting set must be 16 or 36")


@dataclass(frozen=True)
class TomographyCounts:
    settings: tuple
    counts: np.ndarray
    N: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=float)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "settings", tuple(self.settings))
        if c.shape != (len(self.settings),):
            raise PreconditionError("one count per setting")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise PreconditionError("counts must be non-negative")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["setting_label", "theta_A_deg", "theta_B_deg", "basis_flags", "count"])
        for s, c in zip(self.settings, self.counts):
            cnt = int(c) if float(c).is_integer() else repr(float(c))
            w.writerow([s.label, repr(math.degrees(s.theta_A)), repr(math.degrees(s.theta_B)),
                        s.flags, cnt])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, N: float = 1.0) -> "TomographyCounts":
        settings, counts = [], []
        for row in csv.DictReader(io.StringIO(text)):
            flags = row.get("basis_flags") or "--"
            settings.append(MeasurementSetting(
                math.radians(float(row["theta_A_deg"])), math.radians(float(row["theta_B_deg"])),
                flags[0].strip("-"), flags[1].strip("-"), row.get("setting_label", "")))
            counts.append(float(row["count"]))
        return cls(tuple(settings), np.array(counts), N)


# -- states ------------------------------------------------------------------------

def bell_ket(kind: str = "phi+"):
    k = kind.lower().replace("Φ", "phi").replace("ψ", "psi")
    s = 1 / math.sqrt(2)
    kets = {"phi+": [s, 0, 0, s], "phi-": [s, 0, 0, -s],
            "psi+": [0, s, s, 0], "psi-": [0, s, -s, 0]}
    if k not in kets:
        raise PreconditionError(f"unknown Bell state {kind!r}")
    return np.array(kets[k], dtype=complex)


def bell_state(kind: str = "phi+") -> DensityMatrix:
    k = bell_ket(kind)
    return DensityMatrix(np.outer(k, k.conj()))


def werner(V: float, kind: str = "phi+") -> DensityMatrix:
    """V |Bell><Bell| + (1 - V) I/4."""
    return DensityMatrix(V * bell_state(kind).data + (1 - V) * np.eye(4) / 4)


def fidelity(rho: DensityMatrix, target: str = "phi+") -> float:
    k = bell_ket(target)
    return float(np.real(k.conj() @ rho.data @ k))


# -- correlations and CHSH ---------------------------------------------------------

def probability(rho: DensityMatrix, theta_A: float, theta_B: float) -> float:
    return rho.expectation(MeasurementSetting(theta_A, theta_B).projector)


@dataclass(frozen=True)
class CorrelationCurve:
    theta_B: np.ndarray
    values: np.ndarray
    visibility: float


def correlation_curve(rho: DensityMatrix, theta_A: float, theta_B_grid) -> CorrelationCurve:
    """Coincidence probability versus analyzer B, normalized to its maximum."""
    grid = np.asarray(theta_B_grid, dtype=float)
    p = np.array([probability(rho, theta_A, b) for b in grid])
    lo, hi = p.min(), p.max()
    if hi <= 0:
        raise NumericalError("no coincidences on this grid")
    return CorrelationCurve(grid, p / hi, float((hi - lo) / (hi + lo)))


def correlation(rho: DensityMatrix, a: float, b: float) -> float:
    """E(a, b) from the four outcomes of two polarizing beam splitters."""
    q = math.pi / 2
    return (probability(rho, a, b) + probability(rho, a + q, b + q)
            - probability(rho, a, b + q) - probability(rho, a + q, b))


CANONICAL_CHSH = ((0.0, math.pi / 8), (0.0, 3 * math.pi / 8),
                  (math.pi / 4, math.pi / 8), (math.pi / 4, 3 * math.pi / 8))


def chsh(rho: DensityMatrix, settings=CANONICAL_CHSH) -> float:
    """|E(a,b) - E(a,b') + E(a',b) + E(a',b')| for settings ordered (a,b),(a,b'),(a',b),(a',b')."""
    if len(settings) != 4:
        raise PreconditionError("CHSH needs four setting pairs")
    e = [correlation(rho, a, b) for a, b in settings]
    return abs(e[0] - e[1] + e[2] + e[3])


@dataclass(frozen=True)
class ChshEstimate:
    S: float
    sigma: float | None


def chsh_from_visibility(visibilities, totals=None) -> ChshEstimate:
    """S = 2 sqrt(2) mean(V); Poisson error when fringe count totals are given.

    For a visibility built from max and min counts a, b with N = a + b the
    shot-noise variance is (1 - V^2) / N.
    """
    v = np.asarray(visibilities, dtype=float)
    if v.shape != (4,):
        raise PreconditionError("need four visibilities")
    if np.any(v < 0) or np.any(v > 1):
        raise PreconditionError("visibilities must lie in [0, 1]")
    S = 2 * math.sqrt(2) * float(v.mean())
    sigma = None
    if totals is not None:
        n = np.asarray(totals, dtype=float)
        if n.shape != (4,) or np.any(n <= 0):
            raise PreconditionError("need four positive count totals")
        var_v = (1 - v**2) / n
        sigma = 2 * math.sqrt(2) / 4 * math.sqrt(float(var_v.sum()))
    return ChshEstimate(S, sigma)


# -- simulated data ----------------------------------------------------------------

def expected_counts(rho: DensityMatrix, settings, N: float) -> np.ndarray:
    return np.array([N * rho.expectation(s.projector) for s in settings])


def simulate_counts(rho: DensityMatrix, settings, N: float, seed: int | None = 0,
                    noiseless: bool = False) -> TomographyCounts:
    """Poisson counts with mean N Tr(rho Pi) per setting; deterministic per seed."""
    if not N > 0:
        raise PreconditionError("N must be > 0")
    settings = tuple(settings)
    mu = np.clip(expected_counts(rho, settings, N), 0, None)
    if noiseless:
        return TomographyCounts(settings, mu, N)
    rng = np.random.default_rng(seed)
    return TomographyCounts(settings, rng.poisson(mu).astype(float), N)


# -- maximum likelihood ------------------------------------------------------------

_TRIL = np.tril_indices(4)
_OFF = np.tril_indices(4, -1)


def _unpack(t):
    T = np.zeros((4, 4), dtype=complex)
    T[np.diag_indices(4)] = t[:4]
    T[_OFF] = t[4:10] + 1j * t[10:16]
    return T


def _pack(T):
    return np.concatenate([T.diagonal().real, T[_OFF].real, T[_OFF].imag])


def _hermitian_basis():
    mats = []
    for i in range(4):
        for j in range(4):
            m = np.zeros((4, 4), dtype=complex)
            if i == j:
                m[i, i] = 1
            elif i < j:
                m[i, j] = m[j, i] = 1
            else:
                m[i, j], m[j, i] = 1j, -1j
            mats.append(m)
    return mats


def is_complete(settings) -> bool:
    basis = _hermitian_basis()
    rows = [[np.real(np.trace(s.projector @ b)) for b in basis] for s in settings]
    return np.linalg.matrix_rank(np.array(rows), tol=1e-9) == 16


@dataclass(frozen=True)
class MleResult:
    rho: DensityMatrix
    converged: bool
    grad_norm: float
    iterations: int
    neg_log_likelihood: float
    extra: dict = field(default_factory=dict)


def tomography_mle(counts: TomographyCounts, max_iter: int = 10_000,
                   gtol: float = 1e-8) -> MleResult:
    """Poisson maximum-likelihood state with rho = T^dag T / Tr(T^dag T).

    T is lower triangular with a real diagonal (16 real parameters). The
    likelihood is the extended Poisson form sum(mu - n log(mu + eps)) with
    mu = Tr(T^dag T Pi), so the overall count scale is fitted along with the
    state. Counts are divided by their mean to keep the problem O(1).
    """
    settings = counts.settings
    if not is_complete(settings):
        raise PreconditionError("measurement settings are not informationally complete")
    n = counts.counts
    scale = n.mean()
    if not scale > 0:
        raise PreconditionError("all counts are zero")
    y = n / scale
    P = np.array([s.projector for s in settings])

    def nll(t):
        T = _unpack(t)
        M = T.conj().T @ T
        mu = np.real(np.einsum("kij,ji->k", P, M))
        f = float(np.sum(mu - y * np.log(mu + LOG_EPS)))
        G = np.einsum("k,kij->ij", 1 - y / (mu + LOG_EPS), P)
        TG = T @ G
        g = 2 * TG
        grad = np.concatenate([g.diagonal().real, g[_OFF].real, g[_OFF].imag])
        return f, grad

    # start from the maximally mixed state at the observed mean rate
    t0 = _pack(np.eye(4) * math.sqrt(4 * y.mean() / np.mean([np.trace(p).real for p in P])))
    x, used = t0, 0
    while True:
        # restarts drop stale curvature pairs, which L-BFGS needs near the optimum
        res = minimize(nll, x, jac=True, method="L-BFGS-B",
                       options={"maxiter": max_iter - used, "gtol": gtol * 1e-2,
                                "ftol": 1e-16, "maxcor": 30})
        x, used = res.x, used + max(int(res.nit), 1)
        f, g = nll(x)
        if np.linalg.norm(g) < gtol or used >= max_iter or res.nit == 0:
            break
    T = _unpack(x)
    M = T.conj().T @ T
    rho = M / np.trace(M).real
    rho = (rho + rho.conj().T) / 2
    gnorm = float(np.linalg.norm(g))
    return MleResult(DensityMatrix(rho), gnorm < gtol, gnorm, used, f,
                     {"count_scale": float(scale * np.trace(M).real)})


@dataclass(frozen=True)
class BootstrapResult:
    fidelity: float
    fidelity_std: float
    chsh: float
    chsh_std: float
    samples: int


def bootstrap(counts: TomographyCounts, target: str = "phi+", resamples: int = 200,
              seed: int = 0) -> BootstrapResult:
    """Parametric bootstrap of fidelity and CHSH from Poisson resampling of the MLE fit."""
    fit = tomography_mle(counts)
    mu = np.array([fit.extra["count_scale"] * fit.rho.expectation(s.projector)
                   for s in counts.settings]).clip(0, None)
    children = np.random.SeedSequence(seed).spawn(resamples)
    F, S = [], []
    for child in children:
        rng = np.random.default_rng(child)
        sample = TomographyCounts(counts.settings, rng.poisson(mu).astype(float), counts.N)
        rho = tomography_mle(sample).rho
        F.append(fidelity(rho, target))
        S.append(chsh(rho))
    return BootstrapResult(fidelity(fit.rho, target), float(np.std(F, ddof=1)),
                           chsh(fit.rho), float(np.std(S, ddof=1)), resamples)
