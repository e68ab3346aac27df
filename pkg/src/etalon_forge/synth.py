"""Cavity-length synthesis for a fixed reflector stack.

With the reflectivities fixed, every coefficient of the structured model is
determined by the integer lengths ``x``; the search is therefore a scan over
length vectors, each scored against the estimated and desired profiles.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, GridMismatchError, OutOfReflectorsError, SearchSpaceTooLarge
from .model import (EtalonConfig, Reflector, RationalTF, physical_lengths, subset_coefficients,
                    unit_phase, z_transfer_function)
from .spectral import LOBE_DEPTH, TransmissionProfile

MAX_CANDIDATES = 10_000_000


def _stack(reflectors):
    return tuple(r if isinstance(r, Reflector) else Reflector(r) for r in reflectors)


def structured_tf(reflectors, x, unit_length: float = 0.01) -> RationalTF:
    return z_transfer_function(EtalonConfig(_stack(reflectors), tuple(x), unit_length))


def constraint_view(tf: RationalTF, den_length: int, num_length: int | None = None):
    """Dense (numerator, denominator) coefficient vectors of a structured model.

    Only the exponents produced by the power-set construction are nonzero, and
    they carry the fixed reflectivity products; this is the coefficient
    pattern a free-form estimate is constrained to.
    """
    num_length = den_length if num_length is None else num_length
    return tf.numerator.to_dense(num_length), tf.denominator.to_dense(den_length)


def lengths_from_x(x, unit_length: float = 0.01, group_index: float = 1.45) -> np.ndarray:
    """Physical fibre lengths in centimetres."""
    if not group_index > 1:
        raise DomainError(f"group index must exceed 1, got {group_index!r}")
    return physical_lengths(x, unit_length, group_index) * 100.0


def escalate(reflectors, inventory):
    """Insert the next inventory reflector in the middle of the stack.

    Returns ``(new_stack, remaining_inventory)``.
    """
    inventory = list(inventory)
    if not inventory:
        raise OutOfReflectorsError("out of reflectors: inventory is empty")
    stack = list(_stack(reflectors))
    nxt = inventory.pop(0)
    stack.insert(math.ceil(len(stack) / 2), nxt if isinstance(nxt, Reflector) else Reflector(nxt))
    return tuple(stack), tuple(inventory)


@dataclass(frozen=True)
class SearchSpec:
    """Scan ranges ``(min, max, step)`` per cavity plus groups of cavities forced equal.

    ``ties`` holds 0-based axis indices; axes not mentioned are free.
    """

    ranges: tuple
    ties: tuple = ()
    max_candidates: int = MAX_CANDIDATES

    def __post_init__(self):
        ranges = tuple(tuple(int(v) for v in r) for r in self.ranges)
        if not ranges:
            raise DomainError("search needs at least one axis")
        for lo, hi, step in ranges:
            if lo < 1 or hi < lo or step < 1:
                raise DomainError(f"invalid range (min={lo}, max={hi}, step={step})")
        ties = tuple(tuple(sorted(int(a) for a in cls)) for cls in self.ties)
        seen = set()
        for cls in ties:
            for a in cls:
                if not 0 <= a < len(ranges):
                    raise DomainError(f"tie refers to axis {a}, only {len(ranges)} axes")
                if a in seen:
                    raise DomainError(f"axis {a} appears in more than one tie class")
                seen.add(a)
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "ties", ties)

    @property
    def n(self) -> int:
        return len(self.ranges)

    def classes(self) -> list:
        """Partition of the axes, ordered by first axis."""
        tied = {a for cls in self.ties for a in cls}
        out = list(self.ties) + [(a,) for a in range(self.n) if a not in tied]
        return sorted(out, key=lambda c: c[0])

    def _values(self, cls):
        sets = [set(range(lo, hi + 1, step)) for lo, hi, step in (self.ranges[a] for a in cls)]
        vals = sorted(set.intersection(*sets))
        if not vals:
            raise DomainError(f"tied axes {cls} have no common value")
        return vals

    def size(self) -> int:
        return math.prod(len(self._values(c)) for c in self.classes())

    def candidates(self) -> np.ndarray:
        """All length vectors, lexicographic in the class order, shape ``(C, n)``."""
        size = self.size()
        if size > self.max_candidates:
            raise SearchSpaceTooLarge(
                f"{size} candidates exceeds the limit of {self.max_candidates}; "
                "use a coarser step or tie cavities together")
        classes = self.classes()
        grids = np.meshgrid(*[np.array(self._values(c), dtype=np.int64) for c in classes],
                            indexing="ij")
        out = np.empty((size, self.n), dtype=np.int64)
        for cls, g in zip(classes, grids):
            for a in cls:
                out[:, a] = g.ravel()
        return out


@dataclass(frozen=True)
class SynthesisCandidate:
    x: tuple
    mse_vs_estimate: float
    mse_vs_target: float
    pr_db: float
    physical_lengths_cm: tuple
    converged: bool = True

    def sort_key(self):
        return (self.mse_vs_estimate, self.pr_db, self.x)


class _Scorer:
    """Scores batches of length vectors against fixed target/estimate profiles."""

    def __init__(self, reflectors, target: TransmissionProfile, estimate: TransmissionProfile,
                 unit_length: float, pr_window=None, gain_fit: bool = False,
                 lobe_depth: float = LOBE_DEPTH):
        if not target.grid.same_as(estimate.grid):
            raise GridMismatchError("target and estimate must share a grid")
        stack = _stack(reflectors)
        r = np.array([f.r for f in stack])
        self.n = len(stack) - 1
        self.coeffs = subset_coefficients(r)
        self.gain = float(np.prod([f.t for f in stack]) ** 2)
        self.phase = unit_phase(target.wavelengths, unit_length)
        self.target = target.normalized().intensity
        self.estimate = estimate.normalized().intensity
        lam = target.wavelengths
        if pr_window is None:
            self.window = slice(None)
        else:
            idx = np.flatnonzero((lam >= pr_window[0]) & (lam <= pr_window[1]))
            if idx.size < 3:
                raise DomainError("PR window holds fewer than 3 samples")
            self.window = slice(int(idx[0]), int(idx[-1]) + 1)
        self.gain_fit = gain_fit
        self.lobe_depth = lobe_depth

    def intensities(self, X: np.ndarray) -> np.ndarray:
        return kernels.batch_intensity(np.ascontiguousarray(X, dtype=np.int64), self.coeffs,
                                       self.gain, self.phase)

    def score(self, X: np.ndarray):
        if X.shape[1] != self.n:
            raise DomainError(f"length vectors must have {self.n} entries")
        y = self.intensities(X)
        y /= y.max(axis=1, keepdims=True)
        if self.gain_fit:
            g = (y @ self.estimate) / np.einsum("ij,ij->i", y, y)
            y_est = y * g[:, None]
        else:
            y_est = y
        mse_est = np.mean((y_est - self.estimate) ** 2, axis=1)
        mse_tgt = np.mean((y - self.target) ** 2, axis=1)
        pr = kernels.rejection_batch(np.ascontiguousarray(y[:, self.window]), self.lobe_depth)
        return mse_est, mse_tgt, pr


def _candidate(x, mse_est, mse_tgt, pr, unit_length, group_index):
    x = tuple(int(v) for v in x)
    return SynthesisCandidate(
        x=x,
        mse_vs_estimate=float(mse_est),
        mse_vs_target=float(mse_tgt),
        pr_db=float(pr),
        physical_lengths_cm=tuple(float(v) for v in lengths_from_x(x, unit_length, group_index)),
    )


def score_candidate(x, reflectors, target: TransmissionProfile, estimate: TransmissionProfile,
                    pr_window=None, *, unit_length: float = 0.01, group_index: float = 1.45,
                    gain_fit: bool = False, lobe_depth: float = LOBE_DEPTH) -> SynthesisCandidate:
    """Score one length vector on the shared grid of ``target`` and ``estimate``.

    Profiles are compared after normalizing each to a peak of 1; with
    ``gain_fit`` the candidate is additionally least-squares scaled onto the
    estimate before ``mse_vs_estimate`` is taken. ``pr_db`` is measured on the
    candidate's own profile inside ``pr_window``.
    """
    scorer = _Scorer(reflectors, target, estimate, unit_length, pr_window, gain_fit, lobe_depth)
    X = np.asarray([x], dtype=np.int64)
    m1, m2, pr = scorer.score(X)
    return _candidate(X[0], m1[0], m2[0], pr[0], unit_length, group_index)


def search_lengths(spec: SearchSpec, reflectors, target: TransmissionProfile,
                   estimate: TransmissionProfile, pr_window=None, *, unit_length: float = 0.01,
                   group_index: float = 1.45, threads: int = 1, chunk: int = 256,
                   gain_fit: bool = False, lobe_depth: float = LOBE_DEPTH) -> list:
    """Score every candidate in ``spec`` and rank by (MSE vs estimate, PR, x)."""
    stack = _stack(reflectors)
    if spec.n != len(stack) - 1:
        raise DomainError(f"search has {spec.n} axes but the stack has {len(stack) - 1} cavities")
    X = spec.candidates()
    scorer = _Scorer(stack, target, estimate, unit_length, pr_window, gain_fit, lobe_depth)
    blocks = [X[i:i + chunk] for i in range(0, X.shape[0], chunk)]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(scorer.score, blocks))
    else:
        parts = [scorer.score(b) for b in blocks]
    mse_est = np.concatenate([p[0] for p in parts])
    mse_tgt = np.concatenate([p[1] for p in parts])
    pr = np.concatenate([p[2] for p in parts])
    out = [_candidate(X[i], mse_est[i], mse_tgt[i], pr[i], unit_length, group_index)
           for i in range(X.shape[0])]
    out.sort(key=SynthesisCandidate.sort_key)
    return out


def write_candidates_csv(path, candidates, limit: int | None = None) -> None:
    """Ranked rows: x_1..x_n, mse_vs_estimate, mse_vs_target, l_1..l_n (cm), pr_db."""
    rows = candidates if limit is None else candidates[:limit]
    if not rows:
        raise DomainError("no candidates to write")
    n = len(rows[0].x)
    head = ([f"x{i + 1}" for i in range(n)] + ["mse_vs_estimate", "mse_vs_target"]
            + [f"l{i + 1}_cm" for i in range(n)] + ["pr_db"])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(head) + "\n")
        for c in rows:
            vals = ([str(v) for v in c.x] + [f"{c.mse_vs_estimate:.12g}", f"{c.mse_vs_target:.12g}"]
                    + [f"{v:.2f}" for v in c.physical_lengths_cm] + [f"{c.pr_db:.12g}"])
            fh.write(",".join(vals) + "\n")


def read_candidates_csv(path) -> list:
    """Length vectors from a ranked-candidates CSV, in file order."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = sorted((c for c in reader.fieldnames or [] if c[:1] == "x" and c[1:].isdigit()),
                      key=lambda c: int(c[1:]))
        if not cols:
            raise DomainError(f"{path}: no x1..xn columns")
        return [tuple(int(row[c]) for c in cols) for row in reader]
