"""Rational system identification of a sampled response by vector fitting.

The response is known on an arc of the unit circle. Before fitting, the arc's
phase coordinate is remapped affinely so that ``K`` uniform samples sit at
``2*pi*k/K``; the model is then a pole-residue expansion in the remapped
variable ``w``:

    H(w) = d + sum_i c_i / (w - a_i)

Poles are relocated iteratively (Sanathanan-Koerner style linearisation with a
weighting function sharing the same poles) and reflected into the unit disc
whenever they leave it.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, RankDeficientError
from .spectral import TransmissionProfile, fit_percent

log = logging.getLogger(__name__)

AMPLITUDE_FLOOR = 1e-8
MAX_RADIUS = 1.0 - 1e-9


@dataclass(frozen=True, eq=False)
class ComplexResponse:
    """Complex samples ``values[k]`` at ``wavelengths[k]`` (metres, increasing)."""

    wavelengths: np.ndarray
    values: np.ndarray
    unit_length: float = 0.01

    def __post_init__(self):
        lam = np.asarray(self.wavelengths, dtype=float)
        val = np.asarray(self.values, dtype=complex)
        if lam.shape != val.shape:
            raise DomainError("wavelengths and values must have the same shape")
        object.__setattr__(self, "wavelengths", lam)
        object.__setattr__(self, "values", val)

    @property
    def phase(self) -> np.ndarray:
        """Unit-delay phase ``2*pi*u/lambda`` (not reduced)."""
        return 2 * np.pi * self.unit_length / self.wavelengths

    @property
    def zinv(self) -> np.ndarray:
        """Unit-circle coordinate ``exp(-1j * phase)``."""
        return np.exp(-1j * np.mod(self.phase, 2 * np.pi))

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2


def complexify_target(profile: TransmissionProfile, unit_length: float = 0.01,
                      taper: float = 0.02) -> ComplexResponse:
    """Attach a minimum-phase phase to an intensity-only profile.

    The amplitude is ``sqrt(intensity)`` exactly. The phase comes from the
    causally folded cepstrum of the log-amplitude, treating the window as one
    period; any jump between the two window ends is blended out over the
    outer ``taper`` fraction of samples before taking the cepstrum (only when
    that jump exceeds every second difference inside the window).
    """
    y = profile.intensity
    if np.any(y < 0):
        raise DomainError("intensity must be nonnegative")
    amp = np.sqrt(y)
    # increasing unit-delay phase runs opposite to increasing wavelength
    logamp = np.log(np.maximum(amp, AMPLITUDE_FLOOR))[::-1].copy()
    n = logamp.size
    m = int(taper * n)
    jump = logamp[0] - (2 * logamp[-1] - logamp[-2]) if n >= 3 else 0.0
    # only a wrap rougher than anything inside the window is treated as an edge
    if m >= 2 and abs(jump) > np.abs(np.diff(logamp, 2)).max():
        w = 0.5 * (1 + np.cos(np.pi * np.arange(m) / m))
        logamp[:m] -= 0.5 * jump * w
        logamp[-m:] += 0.5 * jump * w[::-1]
    # samples start at an arbitrary phase, so the cepstrum is complex (not even)
    ceps = np.fft.ifft(logamp)
    fold = np.zeros(n, dtype=complex)
    fold[0] = ceps[0]
    half = (n + 1) // 2
    fold[1:half] = 2 * ceps[1:half]
    if n % 2 == 0:
        fold[n // 2] = ceps[n // 2]
    phase = np.imag(np.fft.fft(fold))[::-1]
    return ComplexResponse(profile.wavelengths, amp * np.exp(1j * phase), unit_length)


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PoleResidueTF:
    """Estimated model ``d + sum c_i/(w - a_i)`` in the remapped coordinate ``w``.

    ``w = exp(1j * (phi - phase_origin) * phase_scale)`` with
    ``phi = 2*pi*unit_length/lambda``; real-coefficient fits use the raw
    coordinate (``phase_scale == 1``, origin 0).
    """

    poles: np.ndarray
    residues: np.ndarray
    constant: complex
    unit_length: float
    phase_origin: float
    phase_scale: float
    real: bool = False
    kind: str = field(default="estimated")

    def coordinate(self, wavelengths) -> np.ndarray:
        phi = 2 * np.pi * self.unit_length / np.asarray(wavelengths, dtype=float)
        if self.real:
            return np.exp(1j * np.mod(phi, 2 * np.pi))
        return np.exp(1j * (phi - self.phase_origin) * self.phase_scale)

    def __call__(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        return self.constant + (self.residues[None, :] / (w.reshape(-1, 1) - self.poles[None, :])).sum(
            axis=1).reshape(w.shape)

    def response(self, wavelengths) -> np.ndarray:
        return self(self.coordinate(np.atleast_1d(wavelengths)))

    @property
    def order(self) -> int:
        return int(self.poles.size)

    @property
    def denominator(self) -> np.ndarray:
        """Monic denominator coefficients in ``w`` (poorly conditioned for large orders)."""
        return np.poly(self.poles)

    @property
    def numerator(self) -> np.ndarray:
        den = self.denominator
        num = self.constant * den
        for i, (a, c) in enumerate(zip(self.poles, self.residues)):
            num[1:] += c * np.poly(np.delete(self.poles, i))
        return num


@dataclass(frozen=True)
class FitReport:
    order: int
    fit_percent: float
    mse: float
    iterations: int
    stabilized_pole_count: int
    converged: bool = True
    error: str | None = None


def _normalize(phi, real):
    if real:
        return np.mod(phi, 2 * np.pi), 0.0, 1.0
    lo, hi = phi.min(), phi.max()
    k = phi.size
    scale = 2 * np.pi * (k - 1) / (k * (hi - lo)) if hi > lo else 1.0
    return (phi - lo) * scale, float(lo), float(scale)


def _initial_poles(psi, order, radius, real):
    if real:
        lo = max(np.abs(np.angle(np.exp(1j * psi))).min(), 0.0)
        hi = min(np.abs(np.angle(np.exp(1j * psi))).max(), np.pi)
        npairs = order // 2
        ang = lo + (np.arange(npairs) + 0.5) * (hi - lo) / max(npairs, 1)
        upper = radius * np.exp(1j * ang)
        reals = np.full(order % 2, radius)
        return _assemble(reals, upper)
    ang = psi.min() + (np.arange(order) + 0.5) * (psi.max() - psi.min()) / order
    return radius * np.exp(1j * ang)


def _assemble(reals, upper):
    return np.concatenate([reals.astype(complex), upper, upper.conj()])


def _split(poles, order):
    """(real poles, upper-half poles) from a conjugate-closed set."""
    tol = 1e-10
    reals = poles[np.abs(poles.imag) <= tol].real
    upper = poles[poles.imag > tol]
    # keep the count consistent with the requested order
    while reals.size + 2 * upper.size < order:
        reals = np.append(reals, 0.0)
    return reals, upper


def _stabilize(poles):
    r = np.abs(poles)
    out = np.where(r >= 1.0, poles / np.where(r > 0, r * r, 1.0), poles)
    r = np.abs(out)
    out = np.where(r > MAX_RADIUS, out * (MAX_RADIUS / np.where(r > 0, r, 1.0)), out)
    return out, int(np.count_nonzero(np.abs(poles) >= 1.0))


def _basis(w, poles, real):
    """Columns of the partial-fraction basis; real mode returns the real-coefficient basis."""
    if not real:
        return 1.0 / (w[:, None] - poles[None, :])
    nreal = int(np.count_nonzero(poles.imag == 0))
    reals = poles[:nreal].real
    upper = poles[nreal:nreal + (poles.size - nreal) // 2]
    cols = [1.0 / (w[:, None] - reals[None, :])]
    p = 1.0 / (w[:, None] - upper[None, :])
    q = 1.0 / (w[:, None] - upper.conj()[None, :])
    cols += [p + q, 1j * (p - q)]
    return np.concatenate(cols, axis=1)


def _lstsq(A, b, real, iteration, strict=True):
    """Column-scaled least squares; ``strict`` raises on numerical rank loss."""
    if real:
        A = np.concatenate([A.real, A.imag])
        b = np.concatenate([b.real, b.imag])
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    sol, _, rank, _ = scipy.linalg.lstsq(A / norms, b, lapack_driver="gelsy", check_finite=False)
    if strict and rank < A.shape[1]:
        raise RankDeficientError(iteration, rank, A.shape[1])
    return sol / norms


def _relocate(poles, ctil, real):
    n = poles.size
    if not real:
        H = np.diag(poles) - np.outer(np.ones(n), ctil)
        return np.linalg.eigvals(H)
    nreal = int(np.count_nonzero(poles.imag == 0))
    npair = (n - nreal) // 2
    A = np.zeros((n, n))
    b = np.zeros(n)
    A[:nreal, :nreal] = np.diag(poles[:nreal].real)
    b[:nreal] = 1.0
    upper = poles[nreal:nreal + npair]
    # basis order: [reals | (p+q) for each pair | j(p-q) for each pair]
    for i, a in enumerate(upper):
        i1 = nreal + i
        i2 = nreal + npair + i
        A[i1, i1] = a.real
        A[i1, i2] = a.imag
        A[i2, i1] = -a.imag
        A[i2, i2] = a.real
        b[i1] = 2.0
    ev = np.linalg.eigvals(A - np.outer(b, ctil))
    reals, up = _split(ev, n)
    return _assemble(np.sort(reals), up[np.argsort(np.angle(up))])


def _movement(old, new):
    d = np.abs(old[:, None] - new[None, :])
    return float(max(d.min(axis=0).max(), d.min(axis=1).max()))


def _residues(w, f, poles, real, weights, iteration):
    phi = _basis(w, poles, real)
    A = np.concatenate([phi, np.ones((w.size, 1))], axis=1)
    sol = _lstsq(A * weights[:, None], f * weights, real, iteration)
    n = poles.size
    if not real:
        return sol[:n], sol[n]
    nreal = int(np.count_nonzero(poles.imag == 0))
    npair = (n - nreal) // 2
    cr = sol[:nreal]
    cp = sol[nreal:nreal + npair] + 1j * sol[nreal + npair:n]
    res = np.concatenate([cr.astype(complex), cp, cp.conj()])
    return res, complex(sol[n])


def _model(w, poles, residues, d):
    return d + (residues[None, :] / (w[:, None] - poles[None, :])).sum(axis=1)


def _score(y, yhat):
    ref = np.linalg.norm(y - y.mean())
    if ref == 0:
        return 100.0 if np.linalg.norm(y - yhat) <= 1e-12 * max(np.linalg.norm(y), 1.0) else 0.0
    return fit_percent(y, yhat)


def fit_rational(response: ComplexResponse, order: int, *, max_iter: int = 30, tol: float = 1e-6,
                 real: bool = False, weights=None, initial_radius: float = 0.98):
    """Vector-fit ``response`` with ``order`` poles.

    Returns ``(PoleResidueTF, FitReport)``. ``fit_percent`` and ``mse`` compare
    ``|H|^2`` with the sampled intensity ``|response|^2``. If pole movement
    stays above ``tol`` after ``max_iter`` relocations the best model seen is
    returned with ``converged=False``.
    """
    order = int(order)
    if order < 1:
        raise DomainError(f"order must be >= 1, got {order}")
    f = response.values
    if f.size < 4 * order:
        raise DomainError(f"need at least {4 * order} samples for order {order}, got {f.size}")
    psi, origin, scale = _normalize(response.phase, real)
    w = np.exp(1j * psi)
    wt = np.ones(f.size) if weights is None else np.asarray(weights, dtype=float)
    y = np.abs(f) ** 2

    poles = _initial_poles(psi, order, initial_radius, real)
    flipped = 0
    best = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        phi = _basis(w, poles, real)
        A = np.concatenate([phi, np.ones((f.size, 1)), -f[:, None] * phi], axis=1)
        # excess order leaves a null space here; the minimum-norm solution is fine
        sol = _lstsq(A * wt[:, None], f * wt, real, it, strict=False)
        ctil = sol[order + 1:]
        new = _relocate(poles, ctil, real)
        new, nflip = _stabilize(new)
        flipped += nflip
        move = _movement(poles, new)
        poles = new
        res, d = _residues(w, f, poles, real, wt, it)
        fit = _score(y, np.abs(_model(w, poles, res, d)) ** 2)
        if best is None or fit > best[0]:
            best = (fit, poles, res, d)
        log.debug("order %d iteration %d: movement %.3g fit %.6f%%", order, it, move, fit)
        if move < tol:
            converged = True
            best = (fit, poles, res, d)
            break

    fit, poles, res, d = best
    model = PoleResidueTF(poles, res, d, response.unit_length, origin, scale, real)
    yhat = np.abs(_model(w, poles, res, d)) ** 2
    report = FitReport(
        order=order,
        fit_percent=float(min(max(fit, 0.0), 100.0)),
        mse=float(np.mean((y - yhat) ** 2)),
        iterations=it,
        stabilized_pole_count=flipped,
        converged=converged,
    )
    if not converged:
        log.info("order %d did not converge in %d iterations (best fit %.4f%%)", order, max_iter, fit)
    return model, report


def order_sweep(response: ComplexResponse, orders, *, threads: int = 1, **fit_kwargs):
    """Fit each order; failures are recorded in the report and the sweep continues."""
    orders = [int(o) for o in orders]
    if not orders:
        raise DomainError("orders must be nonempty")
    if any(b <= a for a, b in zip(orders, orders[1:])):
        raise DomainError("orders must be strictly ascending")

    def run(order):
        try:
            return fit_rational(response, order, **fit_kwargs)[1]
        except (RankDeficientError, DomainError, np.linalg.LinAlgError) as exc:
            log.warning("order %d failed: %s", order, exc)
            return FitReport(order, float("nan"), float("nan"), 0, 0, False, str(exc))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(run, orders))
    return [run(o) for o in orders]


def select_order(reports, tolerance: float = 0.01) -> FitReport:
    """Smallest order whose fit is within ``tolerance`` percentage points of the best."""
    ok = [r for r in reports if r.error is None and np.isfinite(r.fit_percent)]
    if not ok:
        raise DomainError("no successful fits to select from")
    top = max(r.fit_percent for r in ok)
    return min((r for r in ok if r.fit_percent >= top - tolerance), key=lambda r: r.order)


def write_fit_reports_csv(path, reports) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("order,fit_percent,mse\n")
        for r in reports:
            fh.write(f"{r.order},{r.fit_percent:.12g},{r.mse:.12g}\n")
