"""Station network and demand domain types.

Sign convention used throughout the package: the net-flow of a station is
net(i) = sum_j (counts[i][j] - counts[j][i]), a station with positive net
sends rebalancing flow out, and dual prices satisfy alpha_i - alpha_j <= tau_ij.
This is the one orientation under which the two-node closed form
RC = max{tau * (mu - lambda), lambda - mu} and the four-node golden instances
all come out right.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

#: "zero" threshold for flows and balance checks, relative to ||b||_1
FLOW_TOL = 1e-9


class ValidationError(ValueError):
    """Raised when an input violates a documented invariant."""


# ---------------------------------------------------------------------------
# graph validation


@dataclass
class GraphValidationReport:
    """Every violation found in a candidate travel-cost matrix."""

    negative_entries: list  # (i, j, value)
    nonzero_diagonal: list  # (i, value)
    triangle_violations: list  # (i, k, j, tau_ij, tau_ik + tau_kj)

    @property
    def ok(self) -> bool:
        return not (self.negative_entries or self.nonzero_diagonal
                    or self.triangle_violations)

    def summary(self) -> str:
        if self.ok:
            return "valid"
        parts = []
        if self.negative_entries:
            parts.append(f"{len(self.negative_entries)} negative entries")
        if self.nonzero_diagonal:
            parts.append(f"{len(self.nonzero_diagonal)} nonzero diagonal entries")
        if self.triangle_violations:
            parts.append(f"{len(self.triangle_violations)} triangle violations")
        return ", ".join(parts)


def validate_graph(tau) -> GraphValidationReport:
    """Check a travel-cost matrix; returns (never raises) the violation list.

    Triangle inequality is checked exhaustively over all (i, k, j) triples,
    with a small relative slack so metrics computed in floating point
    (e.g. Manhattan distances) are not rejected for round-off.
    """
    if isinstance(tau, StationGraph):
        tau = tau.tau
    t = np.asarray(tau, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValidationError(f"tau must be a square matrix, got shape {t.shape}")
    n = t.shape[0]
    tol = 1e-9 * max(1.0, float(np.max(np.abs(t))) if n else 1.0)

    neg = [(int(i), int(j), float(t[i, j]))
           for i, j in zip(*np.nonzero(t < -tol))]
    diag = [(int(i), float(t[i, i])) for i in range(n) if abs(t[i, i]) > tol]
    # tau[i,j] <= tau[i,k] + tau[k,j] for all triples
    two_leg = t[:, :, None] + t[None, :, :]          # [i, k, j]
    bad = t[:, None, :] > two_leg + tol              # [i, k, j]
    tri = [(int(i), int(k), int(j), float(t[i, j]), float(t[i, k] + t[k, j]))
           for i, k, j in zip(*np.nonzero(bad))
           if i != k and k != j and i != j]
    return GraphValidationReport(neg, diag, tri)


@dataclass(frozen=True)
class StationGraph:
    """A complete directed network of stations with travel costs tau.

    tau may be asymmetric but must be nonnegative, zero on the diagonal,
    and satisfy the triangle inequality (validated on construction).
    """

    tau: np.ndarray
    coords: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.tau, dtype=float)
        object.__setattr__(self, "tau", t)
        report = validate_graph(t)
        if not report.ok:
            raise ValidationError(f"invalid travel-cost matrix: {report.summary()}")
        if self.coords is not None:
            c = np.asarray(self.coords, dtype=float)
            if c.shape != (t.shape[0], 2):
                raise ValidationError(
                    f"coords must have shape ({t.shape[0]}, 2), got {c.shape}")
            object.__setattr__(self, "coords", c)
        t.setflags(write=False)

    @property
    def n(self) -> int:
        return self.tau.shape[0]

    def to_json(self) -> dict:
        return {"n": self.n, "tau": self.tau.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "StationGraph":
        if "tau" not in obj:
            raise ValidationError("graph JSON must contain a 'tau' field")
        tau = np.asarray(obj["tau"], dtype=float)
        if "n" in obj and int(obj["n"]) != tau.shape[0]:
            raise ValidationError(
                f"graph JSON 'n'={obj['n']} does not match tau shape {tau.shape}")
        return cls(tau=tau)


@dataclass(frozen=True)
class DemandMatrix:
    """Integer O-D trip counts over one time window.

    Diagonal entries (same pickup and dropoff station) are dropped at
    construction; the number removed is kept in ``dropped_diagonal``.
    """

    counts: np.ndarray
    window: dict | None = None
    dropped_diagonal: int = 0

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValidationError(f"counts must be square, got shape {c.shape}")
        if not np.issubdtype(c.dtype, np.integer):
            rounded = np.rint(np.asarray(c, dtype=float))
            if not np.allclose(c, rounded, rtol=0, atol=1e-9):
                raise ValidationError("demand counts must be integers")
            c = rounded.astype(np.int64)
        else:
            c = c.astype(np.int64)
        if np.any(c < 0):
            raise ValidationError("demand counts must be nonnegative")
        dropped = int(np.trace(c))
        if dropped:
            c = c.copy()
            np.fill_diagonal(c, 0)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "dropped_diagonal",
                           self.dropped_diagonal + dropped)

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @property
    def total_trips(self) -> int:
        return int(self.counts.sum())

    def to_json(self) -> dict:
        return {"n": self.n, "counts": self.counts.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "DemandMatrix":
        if "counts" not in obj:
            raise ValidationError("demand JSON must contain a 'counts' field")
        counts = np.asarray(obj["counts"])
        if "n" in obj and int(obj["n"]) != counts.shape[0]:
            raise ValidationError(
                f"demand JSON 'n'={obj['n']} does not match counts shape {counts.shape}")
        return cls(counts=counts)


@dataclass(frozen=True)
class NetFlowVector:
    """Per-station net demand flow b with sum(b) = 0.

    Real-valued so that expected splits (share-weighted demand) are
    representable alongside integer realizations.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        tol = FLOW_TOL * max(1.0, float(np.abs(v).sum()))
        if abs(v.sum()) > tol:
            raise ValidationError(
                f"net flow must sum to zero, got {v.sum():.3e}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def net_flow(demand) -> NetFlowVector:
    """Net flow b_i = sum_j (counts[i][j] - counts[j][i]).

    Accepts a DemandMatrix or a raw (square, real) O-D matrix; the latter
    admits share-weighted expected demands.
    """
    c = demand.counts if isinstance(demand, DemandMatrix) else np.asarray(demand)
    if np.issubdtype(c.dtype, np.integer):
        b = c.sum(axis=1) - c.sum(axis=0)  # exact in integer arithmetic
        return NetFlowVector(values=b.astype(float))
    return NetFlowVector(values=c.sum(axis=1) - c.sum(axis=0))


def scale_demand(demand: DemandMatrix, theta: int) -> DemandMatrix:
    """Multiply every O-D count by an integer factor theta >= 1."""
    if int(theta) != theta or theta < 1:
        raise ValidationError(f"theta must be a positive integer, got {theta}")
    theta = int(theta)
    counts = demand.counts
    cmax = int(counts.max()) if counts.size else 0
    if cmax and theta > np.iinfo(np.int64).max // cmax:
        raise ValidationError(
            f"scaling by theta={theta} overflows 64-bit demand counts")
    return DemandMatrix(counts=counts * theta, window=demand.window)


def load_json_file(path):
    """Parse a JSON file, turning syntax errors into ValidationError."""
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
