"""Channel verification and eavesdropper models.

Two tamper models are simulated: an intercept in which Eve jointly
measures the in-transit qubits B, C against her own GHZ triplet and
forwards substitutes, and a general probe coupling in which Eve entangles
an ancilla register with the channel triplet. Two verification procedures
detect them: the Z-basis correlation test and the local X/Y parity test,
whose honest channel passes with the exact eigenvalue signature
(XXX, YXY, YYX, XYY) = (-1, +1, +1, +1).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from . import qsim
from .protocol import ALICE, BOB, CHARLIE, prepare_ghz
from .qsim import PauliString, StateVector

EVE_LABELS = ("E", "F", "G")
PROBE_LABELS = ("E", "F", "G", "H")  # ancilla register, up to 16 dimensions

PARITY_OPERATORS = ("XXX", "YXY", "YYX", "XYY")
HONEST_PARITY = {"XXX": -1.0, "YXY": 1.0, "YYX": 1.0, "XYY": 1.0}

# Outcome triples (one ±1 per party) consistent with the honest channel:
# the product of the three results always equals the honest eigenvalue.
ALLOWED_TRIPLES = {
    op: frozenset(
        (a, b, c)
        for a in (1, -1)
        for b in (1, -1)
        for c in (1, -1)
        if a * b * c == HONEST_PARITY[op]
    )
    for op in PARITY_OPERATORS
}

CHANNEL_OK = "CHANNEL-OK"
EAVESDROPPER_DETECTED = "EAVESDROPPER-DETECTED"


class SourceKind(Enum):
    HONEST = "honest"
    GHZ_INTERCEPT = "ghz-intercept"
    PROBE_COUPLED = "probe-coupled"


@dataclass(frozen=True, eq=False)
class ProbeState:
    """Eve's coupling spec: one ancilla vector per channel basis state.

    ``components`` holds eight rows, one per ABC basis state ijk in binary
    order; rows need not be normalized or mutually orthogonal. The ancilla
    dimension may be any value in 1..16 and is embedded into the smallest
    qubit register that holds it.
    """

    eve_dimension: int
    components: np.ndarray  # shape (8, eve_dimension)

    def __post_init__(self):
        if not 1 <= self.eve_dimension <= 16:
            raise ValueError("eve_dimension must be in 1..16")
        comps = np.array(self.components, dtype=complex)
        if comps.shape != (8, self.eve_dimension):
            raise ValueError(
                f"components must have shape (8, {self.eve_dimension}), "
                f"got {comps.shape}"
            )
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_mapping(cls, mapping: dict, eve_dimension: int) -> "ProbeState":
        """Build from a {'ijk': vector} dict; missing keys are zero vectors."""
        comps = np.zeros((8, eve_dimension), dtype=complex)
        for key, vec in mapping.items():
            if len(key) != 3 or any(c not in "01" for c in key):
                raise ValueError(f"component key must be 3 bits, got {key!r}")
            comps[int(key, 2)] = np.asarray(vec, dtype=complex)
        return cls(eve_dimension, comps)


@dataclass(frozen=True, eq=False)  # identity hash keyed for per-source caching
class ChannelSource:
    """Generator of channel triplets, honest or tampered."""

    kind: SourceKind
    description: str
    probe: ProbeState | None = None
    sign_pattern: tuple[int, ...] | None = None

    @classmethod
    def honest(cls) -> "ChannelSource":
        return cls(SourceKind.HONEST, "honest GHZ source")

    @classmethod
    def ghz_intercept(cls) -> "ChannelSource":
        return cls(
            SourceKind.GHZ_INTERCEPT,
            "Eve intercepts B,C and measures them against her own GHZ triplet",
        )

    @classmethod
    def probe_coupled(
        cls,
        probe: ProbeState,
        sign_pattern=None,
        description: str = "Eve couples an ancilla register to the triplet",
    ) -> "ChannelSource":
        signs = tuple(int(s) for s in sign_pattern) if sign_pattern is not None else None
        source = cls(SourceKind.PROBE_COUPLED, description, probe, signs)
        build_probe_state(probe, signs)  # surface malformed specs immediately
        return source

    def sample(self, rng: np.random.Generator) -> StateVector:
        return sample_channel_triplet(self, rng)


@dataclass(frozen=True)
class CorrelationStats:
    """Z-basis test tally: how many triplets gave three equal outcomes."""

    samples: int
    all_equal_count: int

    @property
    def fraction(self) -> float:
        return self.all_equal_count / self.samples


@dataclass
class OperatorTally:
    """Per-operator parity tally: outcome-product mean and observed triples."""

    samples: int = 0
    product_sum: int = 0
    triples: Counter = field(default_factory=Counter)

    @property
    def mean(self) -> float | None:
        return self.product_sum / self.samples if self.samples else None

    def record(self, triple: tuple[int, int, int]) -> None:
        self.samples += 1
        self.product_sum += triple[0] * triple[1] * triple[2]
        self.triples[triple] += 1


@dataclass(frozen=True)
class ParityStats:
    per_operator: dict[str, OperatorTally]


class SeparabilityVerdict(Enum):
    SEPARABLE_GHZ = "Separable-GHZ"
    TAMPERED = "Tampered"


@dataclass(frozen=True)
class SeparabilityReport:
    verdict: SeparabilityVerdict
    parities: dict[str, float]
    ghz_fidelity: float
    tolerance: float


@dataclass(frozen=True)
class DetectionCurve:
    """Estimated probability of catching the source within k tested triplets."""

    trials: int
    ks: tuple[int, ...]
    detections: tuple[int, ...]

    @property
    def estimates(self) -> tuple[float, ...]:
        return tuple(d / self.trials for d in self.detections)


def eve_measurement_basis(labels=(BOB, CHARLIE, "E")) -> qsim.OrthonormalBasis:
    """Eve's 8-element entangled basis: (|b> -+ |~b>)/sqrt(2) for b in
    {000, 001, 010, 100}, complement ~b, minus sign listed first."""
    half = 1.0 / np.sqrt(2.0)
    vectors = []
    names = []
    for base in (0b000, 0b001, 0b010, 0b100):
        comp = base ^ 0b111
        for sign, symbol in ((-1.0, "-"), (1.0, "+")):
            vec = np.zeros(8, dtype=complex)
            vec[base] = half
            vec[comp] = sign * half
            vectors.append(vec)
            names.append(f"{base:03b}{symbol}{comp:03b}")
    return qsim.OrthonormalBasis(tuple(labels), tuple(names), np.array(vectors))


def _require_ghz(state: StateVector, labels: tuple[str, ...], who: str) -> None:
    if state.labels != labels:
        raise ValueError(f"{who} triplet must carry labels {labels}, got {state.labels}")
    if not qsim.equal_up_to_global_phase(state, prepare_ghz(labels)):
        raise ValueError(f"{who} triplet is not an exact GHZ state")


def eve_ghz_intercept(
    channel: StateVector,
    eve_triplet: StateVector,
    rng: np.random.Generator | None = None,
    *,
    force: str | None = None,
) -> tuple[str, StateVector]:
    """Eve's intercept: joint measurement of B, C and her qubit E.

    Measures qubits B, C, E of channel (x) eve_triplet in the 8-element
    entangled basis and returns (outcome name, post-measurement state over
    A,B,C,E,F,G). The collapsed B and C are what Bob and Charlie receive.
    """
    _require_ghz(channel, (ALICE, BOB, CHARLIE), "channel")
    _require_ghz(eve_triplet, EVE_LABELS, "eavesdropper")
    joint = qsim.tensor(channel, eve_triplet)
    basis = eve_measurement_basis()
    if force is not None:
        prob, collapsed = qsim.force_outcome(joint, basis, force)
        return force, collapsed
    name, _, collapsed = qsim.measure_in_basis(joint, basis, rng)
    return name, collapsed


@lru_cache(maxsize=1)
def _intercept_outcome_table():
    """All intercept outcomes with probabilities and post-measurement states."""
    joint = qsim.tensor(prepare_ghz(), prepare_ghz(EVE_LABELS))
    basis = eve_measurement_basis()
    names, probs, states = [], [], []
    for name in basis.names:
        try:
            prob, collapsed = qsim.force_outcome(joint, basis, name)
        except qsim.ZeroProbabilityError:
            prob, collapsed = 0.0, None
        names.append(name)
        probs.append(prob)
        states.append(collapsed)
    probs = np.asarray(probs)
    return tuple(names), probs / probs.sum(), tuple(states)


def sample_channel_triplet(source: ChannelSource, rng: np.random.Generator) -> StateVector:
    """Draw one fresh channel state from the source.

    Honest sources emit the exact GHZ triplet; the intercept source emits
    the 6-qubit post-attack state for a freshly sampled Eve outcome; probe
    sources emit their fixed coupled state. States are immutable, so the
    returned value is safe to share.
    """
    if source.kind is SourceKind.HONEST:
        return _honest_triplet()
    if source.kind is SourceKind.GHZ_INTERCEPT:
        names, probs, states = _intercept_outcome_table()
        return states[qsim.sample_index(rng, probs)]
    return _probe_state_cached(source)


@lru_cache(maxsize=1)
def _honest_triplet() -> StateVector:
    return prepare_ghz()


@lru_cache(maxsize=32)
def _probe_state_cached(source: ChannelSource) -> StateVector:
    return build_probe_state(source.probe, source.sign_pattern)


def build_probe_state(spec: ProbeState, sign_pattern=None) -> StateVector:
    """Assemble sum_ijk |ijk>|e_ijk> over A,B,C plus Eve's register, normalized."""
    comps = np.array(spec.components, dtype=complex)
    if sign_pattern is not None:
        signs = np.asarray(sign_pattern, dtype=float)
        if signs.shape != (8,) or not set(np.abs(signs)) <= {1.0}:
            raise ValueError("sign_pattern must be eight values of +1 or -1")
        comps *= signs[:, None]
    n_eve = 0 if spec.eve_dimension == 1 else int(np.ceil(np.log2(spec.eve_dimension)))
    padded = np.zeros((8, 2 ** n_eve), dtype=complex)
    padded[:, : spec.eve_dimension] = comps
    amps = padded.reshape(-1)
    norm = np.linalg.norm(amps)
    if norm < qsim.ZERO_PROB:
        raise ValueError("probe components are all zero")
    labels = (ALICE, BOB, CHARLIE) + PROBE_LABELS[:n_eve]
    return StateVector(labels, amps / norm)


_ROW_BASIS = {
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "Y": np.array([[1, -1j], [1, 1j]], dtype=complex) / np.sqrt(2),
    "Z": np.eye(2, dtype=complex),
}


def _sample_local_outcomes(
    state: StateVector, letters: str, rng: np.random.Generator
) -> tuple[int, int, int]:
    """Measure qubits A, B, C each in its own local Pauli basis.

    Returns one outcome bit per party (0 = +1 eigenstate, 1 = -1); any
    remaining qubits are traced over. The post-measurement state is not
    needed by the verification tests, so it is not formed.
    """
    psi = state.tensor_view()
    axes = []
    for label, letter in zip((ALICE, BOB, CHARLIE), letters):
        ax = state.axis(label)
        axes.append(ax)
        psi = np.moveaxis(np.tensordot(_ROW_BASIS[letter], psi, axes=([1], [ax])), 0, ax)
    weights = np.abs(psi) ** 2
    others = tuple(i for i in range(state.num_qubits) if i not in axes)
    if others:
        weights = weights.sum(axis=others)
    order = np.argsort(axes)  # marginal axes keep ascending positions
    probs = weights.transpose(np.argsort(order)).reshape(-1)
    index = qsim.sample_index(rng, probs)
    return (index >> 2) & 1, (index >> 1) & 1, index & 1


def z_basis_test(
    source: ChannelSource, n: int, rng: np.random.Generator
) -> CorrelationStats:
    """Measure A, B, C of n fresh triplets in the Z basis; count equal triples.

    The honest channel only ever yields 000 or 111, so a single unequal
    triple is proof of tampering.
    """
    if n < 1:
        raise ValueError("z_basis_test needs at least one sample")
    all_equal = 0
    for _ in range(n):
        triplet = sample_channel_triplet(source, rng)
        a, b, c = _sample_local_outcomes(triplet, "ZZZ", rng)
        all_equal += a == b == c
    return CorrelationStats(samples=n, all_equal_count=all_equal)


def parity_test(source: ChannelSource, n: int, rng: np.random.Generator) -> ParityStats:
    """Run n parity rounds, each measuring a uniformly chosen operator product.

    Every round draws a fresh triplet, picks one of XXX, YXY, YYX, XYY,
    measures each party's qubit in its local basis, and records the ±1
    triple and its product.
    """
    if n < 4:
        raise ValueError("parity_test needs at least 4 samples")
    tallies = {op: OperatorTally() for op in PARITY_OPERATORS}
    for _ in range(n):
        op = PARITY_OPERATORS[int(rng.integers(len(PARITY_OPERATORS)))]
        triplet = sample_channel_triplet(source, rng)
        bits = _sample_local_outcomes(triplet, op, rng)
        tallies[op].record(tuple(1 - 2 * b for b in bits))
    return ParityStats(per_operator=tallies)


def channel_verdict(corr: CorrelationStats, parity: ParityStats) -> str:
    """Accept or reject a channel from test statistics.

    Zero tolerance on impossible events: any unequal Z triple or any parity
    triple outside the allowed set rejects outright. Parity means must also
    sit within 3 sigma (binomial error) of the honest eigenvalues.
    """
    if corr.all_equal_count != corr.samples:
        return EAVESDROPPER_DETECTED
    for op, tally in parity.per_operator.items():
        if any(t not in ALLOWED_TRIPLES[op] for t in tally.triples):
            return EAVESDROPPER_DETECTED
        if tally.samples:
            sigma = np.sqrt(max(0.0, 1.0 - tally.mean ** 2) / tally.samples)
            if abs(tally.mean - HONEST_PARITY[op]) > 3.0 * sigma:
                return EAVESDROPPER_DETECTED
    return CHANNEL_OK


def check_probe_separability(joint: StateVector, tol: float = 1e-8) -> SeparabilityReport:
    """Parity-signature check with the GHZ fidelity of the reduced ABC state.

    The channel passes only when all four parity expectations match the
    honest eigenvalues within ``tol``; states that pass are necessarily a
    GHZ triplet in product with Eve's register, so the reported fidelity
    is 1 for every passing state.
    """
    for role in (ALICE, BOB, CHARLIE):
        if role not in joint.labels:
            raise qsim.LabelError(f"joint state is missing role label {role!r}")
    parities = {
        op: qsim.pauli_expectation(joint, PauliString((ALICE, BOB, CHARLIE), op))
        for op in PARITY_OPERATORS
    }
    if set(joint.labels) == {ALICE, BOB, CHARLIE}:
        overlap = np.vdot(prepare_ghz(joint.labels).amplitudes, joint.amplitudes)
        fidelity = float(min(abs(overlap) ** 2, 1.0))
    else:
        fidelity = qsim.projection_fidelity(joint, prepare_ghz())
    passed = all(abs(parities[op] - HONEST_PARITY[op]) <= tol for op in PARITY_OPERATORS)
    verdict = SeparabilityVerdict.SEPARABLE_GHZ if passed else SeparabilityVerdict.TAMPERED
    return SeparabilityReport(verdict, parities, fidelity, tol)


def detection_curve(
    source: ChannelSource, k_max: int, trials: int, rng: np.random.Generator
) -> DetectionCurve:
    """Estimate, for each k in 1..k_max, the chance that testing k triplets
    in the Z basis exposes the source. A trial stops at the first unequal
    triple; the honest source is never exposed."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    detections = []
    for k in range(1, k_max + 1):
        caught = 0
        for _ in range(trials):
            for _ in range(k):
                triplet = sample_channel_triplet(source, rng)
                a, b, c = _sample_local_outcomes(triplet, "ZZZ", rng)
                if not (a == b == c):
                    caught += 1
                    break
        detections.append(caught)
    return DetectionCurve(trials=trials, ks=tuple(range(1, k_max + 1)),
                          detections=tuple(detections))
