"""Model structure, parameters and edge activation times."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import ValidationError
from .events import EventIndex, GraphShape

TAU_STRATEGIES = ("mle", "zero", "adjacency")


class Kind(str, Enum):
    """Structural choice of a model component.

    The memory order r counts how many past events each excitation sum
    retains: poisson keeps none (baseline only), markov the most recent one,
    hawkes the full history.
    """

    ABSENT = "absent"
    POISSON = "poisson"
    MARKOV = "markov"
    HAWKES = "hawkes"

    @property
    def present(self) -> bool:
        return self is not Kind.ABSENT

    @property
    def excites(self) -> bool:
        return self in (Kind.MARKOV, Kind.HAWKES)

    @property
    def r(self) -> float:
        return {Kind.ABSENT: 0, Kind.POISSON: 0, Kind.MARKOV: 1, Kind.HAWKES: math.inf}[self]


@dataclass(frozen=True)
class ModelSpec:
    """Which components the intensity carries and how edges activate."""

    main: Kind = Kind.HAWKES
    interaction: Kind = Kind.ABSENT
    d: int = 1
    tau_strategy: str = "mle"

    def __post_init__(self):
        object.__setattr__(self, "main", Kind(self.main))
        object.__setattr__(self, "interaction", Kind(self.interaction))
        if not self.main.present and not self.interaction.present:
            raise ValidationError("main effects and interactions cannot both be absent")
        if self.interaction.present and self.d < 1:
            raise ValidationError("interaction dimension d must be >= 1")
        if self.tau_strategy not in TAU_STRATEGIES:
            raise ValidationError(f"unknown tau strategy {self.tau_strategy!r}")

    def to_dict(self) -> dict:
        return {
            "main": self.main.value,
            "interaction": self.interaction.value,
            "d": self.d,
            "tau_strategy": self.tau_strategy,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        return cls(
            main=Kind(data["main"]),
            interaction=Kind(data["interaction"]),
            d=int(data.get("d", 1)),
            tau_strategy=data.get("tau_strategy", "mle"),
        )


# Canonical parameter block order; matrices are flattened row-major.
BLOCK_ORDER = (
    "alpha", "mu", "phi", "beta", "mu_p", "phi_p",
    "gamma", "nu", "theta", "gamma_p", "nu_p", "theta_p",
)


@dataclass
class Params:
    """All node-specific parameters, strictly positive.

    Baselines alpha/beta are event rates; mu/mu_p are excitation jump sizes
    with decay rates mu+phi and mu_p+phi_p. The interaction carries d latent
    factors per node: baselines gamma/gamma_p, jumps nu/nu_p and decay
    offsets theta/theta_p, combined per dimension as nu*nu_p with decay
    (nu+theta)*(nu_p+theta_p). Absent blocks are None.
    """

    alpha: np.ndarray | None = None
    mu: np.ndarray | None = None
    phi: np.ndarray | None = None
    beta: np.ndarray | None = None
    mu_p: np.ndarray | None = None
    phi_p: np.ndarray | None = None
    gamma: np.ndarray | None = None
    nu: np.ndarray | None = None
    theta: np.ndarray | None = None
    gamma_p: np.ndarray | None = None
    nu_p: np.ndarray | None = None
    theta_p: np.ndarray | None = None

    def __post_init__(self):
        for name in BLOCK_ORDER:
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, np.ascontiguousarray(val, dtype=np.float64))

    def blocks(self, spec: ModelSpec) -> list[tuple[str, np.ndarray]]:
        """(name, array) pairs for every block the spec requires, in order."""
        return [(name, getattr(self, name)) for name in _required_blocks(spec)]

    def validate(self, shape: GraphShape, spec: ModelSpec) -> None:
        required = _required_blocks(spec)
        for name in BLOCK_ORDER:
            val = getattr(self, name)
            if name in required:
                if val is None:
                    raise ValidationError(f"parameter block {name!r} is required but missing")
                want = _block_shape(name, shape, spec)
                if val.shape != want:
                    raise ValidationError(
                        f"parameter block {name!r} has shape {val.shape}, expected {want}"
                    )
                if not np.all(np.isfinite(val)):
                    raise ValidationError(f"parameter block {name!r} contains non-finite entries")
                if np.any(val <= 0):
                    raise ValidationError(f"parameter block {name!r} must be strictly positive")
            elif val is not None:
                raise ValidationError(f"parameter block {name!r} not allowed by the model spec")

    def copy(self) -> "Params":
        return Params(**{
            name: (None if getattr(self, name) is None else getattr(self, name).copy())
            for name in BLOCK_ORDER
        })

    def to_dict(self) -> dict:
        return {
            name: getattr(self, name).tolist()
            for name in BLOCK_ORDER
            if getattr(self, name) is not None
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Params":
        return cls(**{name: np.asarray(val) for name, val in data.items()})

    @classmethod
    def constant(cls, shape: GraphShape, spec: ModelSpec, value: float = 1.0) -> "Params":
        """All required blocks filled with one value; handy in tests."""
        fields = {}
        for name in _required_blocks(spec):
            fields[name] = np.full(_block_shape(name, shape, spec), value)
        return cls(**fields)


def _required_blocks(spec: ModelSpec) -> tuple[str, ...]:
    names: list[str] = []
    if spec.main.present:
        names += ["alpha", "beta"]
        if spec.main.excites:
            names += ["mu", "phi", "mu_p", "phi_p"]
    if spec.interaction.present:
        names += ["gamma", "gamma_p"]
        if spec.interaction.excites:
            names += ["nu", "theta", "nu_p", "theta_p"]
    return tuple(n for n in BLOCK_ORDER if n in names)


def _block_shape(name: str, shape: GraphShape, spec: ModelSpec) -> tuple[int, ...]:
    src_side = name in ("alpha", "mu", "phi", "gamma", "nu", "theta")
    n = shape.n_src if src_side else shape.n_dst
    if name in ("alpha", "mu", "phi", "beta", "mu_p", "phi_p"):
        return (n,)
    return (n, spec.d)


@dataclass(frozen=True)
class TauMatrix:
    """Per-edge activation times.

    ``default`` applies to every pair without an explicit entry and is
    either 0.0 (everything active from the start) or inf (inactive unless
    listed). ``strategy`` records how the matrix was produced.
    """

    default: float
    entries: dict[tuple[int, int], float]
    strategy: str | None = None

    def __post_init__(self):
        if self.default not in (0.0, math.inf):
            raise ValidationError("TauMatrix default must be 0 or inf")

    def __getitem__(self, edge: tuple[int, int]) -> float:
        return self.entries.get(edge, self.default)

    def finite_entries(self) -> list[tuple[tuple[int, int], float]]:
        return sorted((e, v) for e, v in self.entries.items() if math.isfinite(v))

    def validate(self, index: EventIndex) -> None:
        for edge, value in self.entries.items():
            first = index.first_edge_time(edge)
            if math.isinf(value) and math.isfinite(first):
                raise ValidationError(f"edge {edge} has events but tau is inf")
            if math.isfinite(value) and value > first:
                raise ValidationError(
                    f"edge {edge}: tau={value} exceeds its first event time {first}"
                )

    def to_dict(self) -> dict:
        return {
            "default": "inf" if math.isinf(self.default) else self.default,
            "strategy": self.strategy,
            "entries": [
                [int(i), int(j), "inf" if math.isinf(v) else v]
                for (i, j), v in sorted(self.entries.items())
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TauMatrix":
        def num(x):
            return math.inf if x == "inf" else float(x)

        return cls(
            default=num(data["default"]),
            entries={(int(i), int(j)): num(v) for i, j, v in data["entries"]},
            strategy=data.get("strategy"),
        )


def pack_params(params: Params, spec: ModelSpec) -> np.ndarray:
    """Flatten all required blocks into one vector in canonical order."""
    blocks = [arr.ravel() for _, arr in params.blocks(spec)]
    return np.concatenate(blocks) if blocks else np.zeros(0)


def unpack_params(vector: np.ndarray, shape: GraphShape, spec: ModelSpec) -> Params:
    """Inverse of :func:`pack_params`."""
    fields = {}
    pos = 0
    for name in _required_blocks(spec):
        want = _block_shape(name, shape, spec)
        size = int(np.prod(want))
        fields[name] = np.asarray(vector[pos:pos + size], dtype=np.float64).reshape(want)
        pos += size
    if pos != len(vector):
        raise ValidationError(f"parameter vector has length {len(vector)}, expected {pos}")
    return Params(**fields)


def n_free_params(shape: GraphShape, spec: ModelSpec) -> int:
    return sum(int(np.prod(_block_shape(name, shape, spec))) for name in _required_blocks(spec))


def estimate_tau(index: EventIndex, shape: GraphShape, strategy: str) -> TauMatrix:
    """Edge activation times under one of the three supported strategies.

    mle sets each edge's tau to its first observed event time (inf on
    eventless edges, which then never contribute); zero activates every pair
    at time 0; adjacency activates exactly the observed edges at time 0.
    """
    if strategy == "mle":
        entries = {e: float(ev.times[0]) for e, ev in index.edges.items() if len(ev)}
        return TauMatrix(default=math.inf, entries=entries, strategy="mle")
    if strategy == "zero":
        return TauMatrix(default=0.0, entries={}, strategy="zero")
    if strategy == "adjacency":
        entries = {e: 0.0 for e, ev in index.edges.items() if len(ev)}
        return TauMatrix(default=math.inf, entries=entries, strategy="adjacency")
    raise ValidationError(f"unknown tau strategy {strategy!r}")
