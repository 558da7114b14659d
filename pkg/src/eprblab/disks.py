"""Joint distributions embodied as labeled disk sectors, sampled by a
uniform pointer angle.

A joint disk partitions the circle [0, 2*pi) into sectors, each labeled
with an outcome pair; drawing one uniform angle and reading the containing
sector samples the joint distribution exactly. The same statistics survive
splitting the disk into one per-side copy as long as both sides index their
copies with the *same* draw. With independent draws per side only the
product of the marginals is realized, and when each side has to lay out its
own sectors from a guess about the remote analyzer setting, the target
joint is generally lost as well. The constructions here make each of those
regimes runnable and measurable.

Disks are immutable after construction; sampling takes an explicit seed and
is pure given (inputs, seed).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .domain import TWO_PI, CountTable, JointPmf, SingletKind, qm_joint_prediction, wrap_angle
from .intervals import overlap_length, unroll_arc

#: Tolerance for sector lengths covering the full circle.
PARTITION_TOL = 1e-9

_OUTCOMES = (-1, 1)


def _check_outcome(value: int, name: str) -> None:
    if value not in _OUTCOMES:
        raise ValueError(f"{name} must be +1 or -1, got {value!r}")


def _arc_contains(start: float, length: float, lam: float) -> bool:
    # Half-open arc [start, start + length) with wraparound.
    return (lam - start) % TWO_PI < length


@dataclass(frozen=True)
class Sector:
    """One labeled arc of a joint disk: [start, start + length) -> (a, b)."""

    start: float
    length: float
    outcome_a: int
    outcome_b: int

    def __post_init__(self) -> None:
        _check_outcome(self.outcome_a, "outcome_a")
        _check_outcome(self.outcome_b, "outcome_b")
        if not 0.0 <= self.length <= TWO_PI:
            raise ValueError(f"sector length {self.length!r} outside [0, 2*pi]")


@dataclass(frozen=True)
class SplitSector:
    """One labeled arc of a per-side disk: [start, start + length) -> outcome."""

    start: float
    length: float
    outcome: int

    def __post_init__(self) -> None:
        _check_outcome(self.outcome, "outcome")
        if not 0.0 <= self.length <= TWO_PI:
            raise ValueError(f"sector length {self.length!r} outside [0, 2*pi]")


def _check_partition(lengths: list[float]) -> None:
    total = math.fsum(lengths)
    if abs(total - TWO_PI) > PARTITION_TOL:
        raise ValueError(f"sector lengths sum to {total!r}, not 2*pi")


@dataclass(frozen=True)
class DiskPreparation:
    """An ordered set of sectors that partitions the circle exactly once."""

    sectors: tuple[Sector, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sectors", tuple(self.sectors))
        _check_partition([s.length for s in self.sectors])

    def sector_at(self, lam: float) -> Sector:
        """The unique sector containing the pointer angle lam."""
        lam = wrap_angle(lam)
        for s in self.sectors:
            if s.length > 0.0 and _arc_contains(s.start, s.length, lam):
                return s
        raise RuntimeError(f"no sector contains {lam!r}")

    def implied_pmf(self) -> JointPmf:
        """The joint distribution the sector areas encode (arc / 2*pi)."""
        acc = {(a, b): 0.0 for a in _OUTCOMES for b in _OUTCOMES}
        for s in self.sectors:
            acc[(s.outcome_a, s.outcome_b)] += s.length
        return JointPmf(
            acc[(1, 1)] / TWO_PI,
            acc[(1, -1)] / TWO_PI,
            acc[(-1, 1)] / TWO_PI,
            acc[(-1, -1)] / TWO_PI,
        )


@dataclass(frozen=True)
class SplitDisk:
    """One side's disk: same partition contract, one outcome per sector."""

    sectors: tuple[SplitSector, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sectors", tuple(self.sectors))
        _check_partition([s.length for s in self.sectors])

    def outcome_at(self, lam: float) -> int:
        lam = wrap_angle(lam)
        for s in self.sectors:
            if s.length > 0.0 and _arc_contains(s.start, s.length, lam):
                return s.outcome
        raise RuntimeError(f"no sector contains {lam!r}")


class SamplingMode(enum.Enum):
    """One shared pointer draw per trial, or an independent draw per side."""

    SHARED_LAMBDA = "shared-lambda"
    INDEPENDENT_LAMBDAS = "independent-lambdas"


def build_singlet_disk(theta: float, kind: SingletKind) -> DiskPreparation:
    """Four-sector disk whose implied joint matches the closed-form target.

    Sector order is fixed package-wide: (+,+), (+,-), (-,+), (-,-),
    contiguous counterclockwise from 0. Each arc is 2*pi times its target
    cell probability, so for anticorrelated pairs the lengths are
    (pi sin^2, pi cos^2, pi cos^2, pi sin^2) and for correlated pairs the
    sin/cos roles swap.
    """
    p_pp = qm_joint_prediction(theta, kind)
    arc_same = TWO_PI * p_pp               # (+,+) and (-,-)
    arc_diff = math.pi - arc_same          # (+,-) and (-,+)
    lengths = (arc_same, arc_diff, arc_diff, arc_same)
    labels = ((1, 1), (1, -1), (-1, 1), (-1, -1))
    sectors = []
    start = 0.0
    for length, (oa, ob) in zip(lengths, labels):
        sectors.append(Sector(start, length, oa, ob))
        start += length
    return DiskPreparation(tuple(sectors))


def sample_disk(disk: DiskPreparation, lam: float) -> tuple[int, int]:
    """Outcome pair of the sector containing lam (arcs are half-open)."""
    s = disk.sector_at(lam)
    return s.outcome_a, s.outcome_b


def sample_disk_many(disk: DiskPreparation, lams: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized sample_disk for an array of pointer angles."""
    lams = np.asarray(lams, dtype=float)
    a = np.zeros(lams.shape, dtype=np.int8)
    b = np.zeros(lams.shape, dtype=np.int8)
    assigned = np.zeros(lams.shape, dtype=bool)
    for s in disk.sectors:
        if s.length == 0.0:
            continue
        m = (lams - s.start) % TWO_PI < s.length
        a[m] = s.outcome_a
        b[m] = s.outcome_b
        assigned |= m
    if not assigned.all():
        raise RuntimeError("pointer angle fell outside every sector")
    return a, b


def sample_split(disk: SplitDisk, lam: float) -> int:
    """One side's outcome at pointer angle lam."""
    return disk.outcome_at(lam)


def sample_split_many(disk: SplitDisk, lams: np.ndarray) -> np.ndarray:
    """Vectorized sample_split for an array of pointer angles."""
    lams = np.asarray(lams, dtype=float)
    out = np.zeros(lams.shape, dtype=np.int8)
    assigned = np.zeros(lams.shape, dtype=bool)
    for s in disk.sectors:
        if s.length == 0.0:
            continue
        m = (lams - s.start) % TWO_PI < s.length
        out[m] = s.outcome
        assigned |= m
    if not assigned.all():
        raise RuntimeError("pointer angle fell outside every sector")
    return out


def split_disk(disk: DiskPreparation) -> tuple[SplitDisk, SplitDisk]:
    """Project a joint disk into its two per-side disks.

    Every pointer angle keeps exactly the per-side label the joint disk
    assigns; zero-length sectors are dropped. Adjacent same-outcome arcs are
    kept separate so each split arc reuses the joint sector's floats and the
    projection is exact angle by angle, not just in measure.
    """

    def project(side_a: bool) -> SplitDisk:
        arcs = [
            SplitSector(s.start, s.length, s.outcome_a if side_a else s.outcome_b)
            for s in disk.sectors
            if s.length > 0.0
        ]
        return SplitDisk(tuple(arcs))

    return project(True), project(False)


def tabulate_outcomes(a: np.ndarray, b: np.ndarray, n: int) -> CountTable:
    """CountTable for n trials of definite per-side outcomes (no misses)."""
    ap = a == 1
    bp = b == 1
    return CountTable(
        n_pp=int(np.count_nonzero(ap & bp)),
        n_pm=int(np.count_nonzero(ap & ~bp)),
        n_mp=int(np.count_nonzero(~ap & bp)),
        n_mm=int(np.count_nonzero(~ap & ~bp)),
        singles_a=n,
        singles_b=n,
        n_pairs=n,
    )


def _sample_separated_rng(
    disk_a: SplitDisk,
    disk_b: SplitDisk,
    mode: SamplingMode,
    n: int,
    rng: np.random.Generator,
) -> CountTable:
    if mode is SamplingMode.SHARED_LAMBDA:
        lam_a = lam_b = rng.uniform(0.0, TWO_PI, n)
    else:
        lam_a = rng.uniform(0.0, TWO_PI, n)
        lam_b = rng.uniform(0.0, TWO_PI, n)
    return tabulate_outcomes(
        sample_split_many(disk_a, lam_a), sample_split_many(disk_b, lam_b), n
    )


def sample_separated(
    disk_a: SplitDisk,
    disk_b: SplitDisk,
    mode: SamplingMode,
    n: int,
    seed: int,
) -> CountTable:
    """Sample n trials from two per-side disks.

    SHARED_LAMBDA draws one uniform pointer per trial used by both sides;
    INDEPENDENT_LAMBDAS draws one per side (A's array first). Every trial is
    a single on both sides, so the CountTable has no doubles or misses.
    """
    if n <= 0:
        raise ValueError(f"n must be positive, got {n!r}")
    return _sample_separated_rng(disk_a, disk_b, mode, n, np.random.default_rng(seed))


# --- parameter-knowledge policies -------------------------------------------

@dataclass(frozen=True)
class BothKnown:
    """Build with the true remote setting."""


@dataclass(frozen=True)
class AssumeZero:
    """Ignore the remote setting entirely, i.e. take it to be 0."""


@dataclass(frozen=True)
class AssumeFixed:
    """Use a fixed guess for the remote setting."""

    value: float


@dataclass(frozen=True)
class AssumeRandom:
    """Draw a fresh uniform guess on [0, 2*pi) for every trial."""


@dataclass(frozen=True)
class IntegrateOver:
    """Average over the unknown remote setting.

    Sampling-wise identical to AssumeRandom (a per-trial uniform draw); the
    distinct type records that the run is meant as an expectation over the
    unknown rather than a sequence of guesses.
    """


KnowledgePolicy = BothKnown | AssumeZero | AssumeFixed | AssumeRandom | IntegrateOver


def policy_is_per_trial(policy: KnowledgePolicy) -> bool:
    return isinstance(policy, (AssumeRandom, IntegrateOver))


def _assumed_remote(
    policy: KnowledgePolicy, true_value: float, rng: np.random.Generator | None
) -> float:
    if isinstance(policy, BothKnown):
        return true_value
    if isinstance(policy, AssumeZero):
        return 0.0
    if isinstance(policy, AssumeFixed):
        return policy.value
    if rng is None:
        raise ValueError(f"{type(policy).__name__} needs an rng for its per-trial draw")
    return float(rng.uniform(0.0, TWO_PI))


def build_param_disks(
    alpha: float,
    beta: float,
    policy_a: KnowledgePolicy,
    policy_b: KnowledgePolicy,
    kind: SingletKind,
    rng: np.random.Generator | None = None,
) -> tuple[SplitDisk, SplitDisk]:
    """Build the per-side disks each station lays out from what it knows.

    Side A knows alpha and fills in beta from policy_a; side B knows beta
    and fills in alpha from policy_b. Each side builds the standard disk at
    its own estimate of the relative angle (local setting minus assumed
    remote) and keeps its own projection. Under BothKnown/BothKnown both
    estimates equal alpha - beta, the two disks are projections of one
    joint disk, and shared-pointer sampling reproduces the target exactly.

    Per-trial policies (AssumeRandom, IntegrateOver) draw from rng, so one
    call realizes one trial's apparatus; draw order is side A then side B.
    """
    beta_hat = _assumed_remote(policy_a, beta, rng)
    alpha_hat = _assumed_remote(policy_b, alpha, rng)
    disk_for_a = build_singlet_disk(alpha - beta_hat, kind)
    disk_for_b = build_singlet_disk(alpha_hat - beta, kind)
    return split_disk(disk_for_a)[0], split_disk(disk_for_b)[1]


def sample_param_setup(
    alpha: float,
    beta: float,
    policy_a: KnowledgePolicy,
    policy_b: KnowledgePolicy,
    kind: SingletKind,
    n: int,
    seed: int,
    mode: SamplingMode = SamplingMode.SHARED_LAMBDA,
) -> CountTable:
    """Run n trials of the policy-built apparatus and tabulate outcomes.

    With only static policies the disks are built once and sampling is
    vectorized. With a per-trial policy each trial rebuilds its disks; the
    per-trial draw order is (A's guess, B's guess, pointer angle(s)).
    """
    if n <= 0:
        raise ValueError(f"n must be positive, got {n!r}")
    rng = np.random.default_rng(seed)
    if not (policy_is_per_trial(policy_a) or policy_is_per_trial(policy_b)):
        da, db = build_param_disks(alpha, beta, policy_a, policy_b, kind)
        return _sample_separated_rng(da, db, mode, n, rng)

    counts = {(oa, ob): 0 for oa in _OUTCOMES for ob in _OUTCOMES}
    for _ in range(n):
        da, db = build_param_disks(alpha, beta, policy_a, policy_b, kind, rng=rng)
        if mode is SamplingMode.SHARED_LAMBDA:
            lam_a = lam_b = float(rng.uniform(0.0, TWO_PI))
        else:
            lam_a = float(rng.uniform(0.0, TWO_PI))
            lam_b = float(rng.uniform(0.0, TWO_PI))
        counts[(da.outcome_at(lam_a), db.outcome_at(lam_b))] += 1
    return CountTable(
        n_pp=counts[(1, 1)],
        n_pm=counts[(1, -1)],
        n_mp=counts[(-1, 1)],
        n_mm=counts[(-1, -1)],
        singles_a=n,
        singles_b=n,
        n_pairs=n,
    )


def build_bell_special(alpha: float) -> tuple[SplitDisk, SplitDisk]:
    """The fixed-remote-setting construction that recovers the harmonic joint.

    Side B's setting is pinned to 0 by construction: B is + on [0, pi).
    Side A offsets its + half-circle to start at pi*cos^2(alpha). Shared
    pointer sampling then reproduces the anticorrelated joint at relative
    angle alpha, i.e. p_pp = sin^2(alpha)/2, for every alpha; the harmonic
    dependence comes entirely from the nonlinear offset.
    """
    offset = math.pi * math.cos(alpha) ** 2
    side_a = SplitDisk(
        (
            SplitSector(offset, math.pi, 1),
            SplitSector(wrap_angle(offset + math.pi), math.pi, -1),
        )
    )
    side_b = SplitDisk(
        (
            SplitSector(0.0, math.pi, 1),
            SplitSector(math.pi, math.pi, -1),
        )
    )
    return side_a, side_b


def joint_pmf_from_splits(disk_a: SplitDisk, disk_b: SplitDisk) -> JointPmf:
    """Exact joint table of shared-pointer sampling, by arc-overlap integration.

    For each pair of arcs the shared pointer lands in both with probability
    overlap/2*pi, so accumulating overlaps per outcome pair integrates the
    sampled joint exactly (to float rounding), with no Monte Carlo error.
    """
    acc = {(oa, ob): 0.0 for oa in _OUTCOMES for ob in _OUTCOMES}
    segs_b = [(s.outcome, unroll_arc(s.start, s.length, TWO_PI)) for s in disk_b.sectors]
    for sa in disk_a.sectors:
        segs_a = unroll_arc(sa.start, sa.length, TWO_PI)
        for ob, sb in segs_b:
            acc[(sa.outcome, ob)] += overlap_length(segs_a, sb)
    return JointPmf(
        acc[(1, 1)] / TWO_PI,
        acc[(1, -1)] / TWO_PI,
        acc[(-1, 1)] / TWO_PI,
        acc[(-1, -1)] / TWO_PI,
    )


def disk_to_text(disk: DiskPreparation) -> str:
    """Serialize a joint disk, one sector per line."""
    lines = ["# start_rad,length_rad,outcome_a,outcome_b"]
    for s in disk.sectors:
        lines.append(f"{float(s.start)!r},{float(s.length)!r},{s.outcome_a},{s.outcome_b}")
    return "\n".join(lines) + "\n"


def split_to_text(disk: SplitDisk) -> str:
    """Serialize a per-side disk, one sector per line."""
    lines = ["# start_rad,length_rad,outcome"]
    for s in disk.sectors:
        lines.append(f"{float(s.start)!r},{float(s.length)!r},{s.outcome}")
    return "\n".join(lines) + "\n"
