"""Three-party direct communication over GHZ triplets.

Alice encodes each message bit in an X-eigenstate carrier qubit and
teleports it to Bob through a shared GHZ triplet, supervised by Charlie:
Alice Bell-measures her pair and broadcasts two classical bits, Charlie
X-measures his qubit and sends one, and Bob applies the matching fix-up
before reading the bit out in the X basis.

Role labels are fixed: D carries the signal, A/B/C are Alice's, Bob's,
and Charlie's shares of the channel triplet.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import qsim
from .qsim import StateVector, UnitaryGate

SIGNAL = "D"
ALICE = "A"
BOB = "B"
CHARLIE = "C"

_SQRT_HALF = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class SignalBit:
    """A classical bit together with the phase sign of its carrier state."""

    bit: int
    sign: int

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {self.bit!r}")
        if self.sign != (1 if self.bit else -1):
            raise ValueError("bit=1 pairs with sign +1, bit=0 with sign -1")

    @classmethod
    def from_bit(cls, bit: int) -> "SignalBit":
        return cls(bit, 1 if bit else -1)


class BellOutcome(Enum):
    """Alice's four Bell results with their fixed 2-bit broadcast encoding."""

    PHI_PLUS = "00"
    PHI_MINUS = "01"
    PSI_PLUS = "10"
    PSI_MINUS = "11"

    @property
    def bits(self) -> str:
        return self.value


class CharlieOutcome(Enum):
    """Charlie's X-basis result with its 1-bit classical encoding."""

    PLUS = "0"
    MINUS = "1"

    @property
    def bit(self) -> str:
        return self.value


@dataclass(frozen=True)
class CorrectionPair:
    """Local fix-ups for Bob and Charlie after Alice's broadcast."""

    bob_gate: UnitaryGate
    charlie_gate: UnitaryGate


@dataclass(frozen=True)
class BitRecord:
    """Classical traffic for one transmitted bit: 2 Bell bits + 1 Charlie bit."""

    bell: BellOutcome
    charlie: CharlieOutcome | None
    decoded: int

    def line(self) -> str:
        charlie = self.charlie.bit if self.charlie is not None else "-"
        return f"{self.bell.bits}{charlie}{self.decoded}"


@dataclass(frozen=True)
class SessionTranscript:
    """Ordered classical log of a session, one record per message bit."""

    records: tuple[BitRecord, ...]
    source_description: str
    channel_test_ref: str | None = None

    @property
    def recovered(self) -> str:
        return "".join(str(r.decoded) for r in self.records)

    def to_bytes(self) -> bytes:
        header = f"source={self.source_description}\n"
        return (header + "".join(r.line() + "\n" for r in self.records)).encode()

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


def encode_bit(bit: int) -> StateVector:
    """Carrier state for one message bit: (|0> + sign|1>)/sqrt(2) on qubit D."""
    sign = SignalBit.from_bit(bit).sign
    return StateVector((SIGNAL,), np.array([1.0, float(sign)]) * _SQRT_HALF)


def prepare_ghz(labels=(ALICE, BOB, CHARLIE)) -> StateVector:
    """Fresh channel triplet (|000> - |111>)/sqrt(2)."""
    labels = tuple(labels)
    if len(labels) != 3:
        raise ValueError("a channel triplet needs exactly three labels")
    amps = np.zeros(8, dtype=complex)
    amps[0] = _SQRT_HALF
    amps[7] = -_SQRT_HALF
    return StateVector(labels, amps)


def bell_basis(first: str = SIGNAL, second: str = ALICE) -> qsim.OrthonormalBasis:
    """The four maximally entangled two-qubit states, named by BellOutcome."""
    vecs = np.array(
        [
            [1, 0, 0, 1],   # PHI_PLUS
            [1, 0, 0, -1],  # PHI_MINUS
            [0, 1, 1, 0],   # PSI_PLUS
            [0, 1, -1, 0],  # PSI_MINUS
        ],
        dtype=complex,
    ) * _SQRT_HALF
    names = tuple(o.name for o in BellOutcome)
    return qsim.OrthonormalBasis((first, second), names, vecs)


_K01 = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
_K10 = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|

# Fix-up table keyed by Alice's broadcast. Each pair maps the post-measurement
# BC state to the common carrier form (|00> + sign|11>)/sqrt(2) exactly,
# signs included, for both sign values.
_CORRECTIONS = {
    BellOutcome.PHI_PLUS: CorrectionPair(
        qsim.IDENTITY_GATE, UnitaryGate(qsim.PAULI_Z)
    ),
    BellOutcome.PHI_MINUS: CorrectionPair(qsim.IDENTITY_GATE, qsim.IDENTITY_GATE),
    BellOutcome.PSI_PLUS: CorrectionPair(
        UnitaryGate(_K01 + _K10), UnitaryGate(-_K01 + _K10)
    ),
    BellOutcome.PSI_MINUS: CorrectionPair(
        UnitaryGate(-_K01 - _K10), UnitaryGate(_K01 + _K10)
    ),
}


def corrections_for_bell(outcome: BellOutcome) -> CorrectionPair:
    """Bob's and Charlie's local gates for a given Bell broadcast."""
    return _CORRECTIONS[outcome]


def alice_bell_measure(
    joint: StateVector,
    rng: np.random.Generator | None = None,
    *,
    force: BellOutcome | None = None,
) -> tuple[BellOutcome, StateVector]:
    """Bell measurement on qubits D,A; returns the outcome and the rest.

    The measured pair is dropped from the returned state, which keeps
    B, C and any bystander qubits.
    """
    basis = bell_basis()
    if force is not None:
        prob, collapsed = qsim.force_outcome(joint, basis, force.name)
        name = force.name
    else:
        name, prob, collapsed = qsim.measure_in_basis(joint, basis, rng)
    outcome = BellOutcome[name]
    pair_state = StateVector(basis.target_labels, basis.vectors[basis.index_of(name)])
    return outcome, qsim.factor_out(collapsed, pair_state)


def charlie_measure(
    bc: StateVector,
    rng: np.random.Generator | None = None,
    *,
    force: CharlieOutcome | None = None,
) -> tuple[CharlieOutcome, StateVector]:
    """X-basis measurement of Charlie's qubit; returns outcome and the rest."""
    basis = qsim.x_basis(CHARLIE)
    forced_name = {CharlieOutcome.PLUS: "+", CharlieOutcome.MINUS: "-"}
    if force is not None:
        prob, collapsed = qsim.force_outcome(bc, basis, forced_name[force])
        name = forced_name[force]
    else:
        name, prob, collapsed = qsim.measure_in_basis(bc, basis, rng)
    outcome = CharlieOutcome.PLUS if name == "+" else CharlieOutcome.MINUS
    qubit_state = StateVector((CHARLIE,), basis.vectors[basis.index_of(name)])
    return outcome, qsim.factor_out(collapsed, qubit_state)


def bob_correction(outcome: CharlieOutcome) -> UnitaryGate:
    """Bob's fix-up: identity on Plus, phase flip on Minus."""
    return qsim.IDENTITY_GATE if outcome is CharlieOutcome.PLUS else qsim.PHASE_FLIP_GATE


def _measure_x_bit(state: StateVector, label: str, rng: np.random.Generator) -> int:
    """X-basis readout of one qubit: |+> -> 1, |-> -> 0."""
    name, _, _ = qsim.measure_in_basis(state, qsim.x_basis(label), rng)
    return 1 if name == "+" else 0


def bob_decode(b_state: StateVector, rng: np.random.Generator) -> int:
    """Read the message bit off Bob's qubit in the X basis."""
    if b_state.num_qubits != 1:
        raise ValueError("decode expects a single-qubit state")
    return _measure_x_bit(b_state, b_state.labels[0], rng)


def teleport_bit(
    bit: int,
    channel: StateVector,
    rng: np.random.Generator,
    *,
    cooperate: bool = True,
    force_bell: BellOutcome | None = None,
    force_charlie: CharlieOutcome | None = None,
) -> tuple[int, BitRecord]:
    """Send one bit through a channel triplet; returns (decoded bit, record).

    The channel must carry labels A, B, C; extra labels (an eavesdropper's
    qubits) ride along untouched. With ``cooperate=False`` Charlie neither
    measures nor reports, and Bob reads his qubit out regardless.
    """
    for role in (ALICE, BOB, CHARLIE):
        if role not in channel.labels:
            raise qsim.LabelError(f"channel is missing role label {role!r}")
    joint = qsim.tensor(encode_bit(bit), channel)
    bell, rest = alice_bell_measure(joint, rng, force=force_bell)
    pair = corrections_for_bell(bell)
    rest = qsim.apply_unitary(rest, pair.bob_gate, (BOB,))
    rest = qsim.apply_unitary(rest, pair.charlie_gate, (CHARLIE,))
    if cooperate:
        charlie, rest = charlie_measure(rest, rng, force=force_charlie)
        rest = qsim.apply_unitary(rest, bob_correction(charlie), (BOB,))
    else:
        charlie = None
    decoded = _measure_x_bit(rest, BOB, rng)
    return decoded, BitRecord(bell=bell, charlie=charlie, decoded=decoded)


def run_session(
    message: str,
    source,
    rng: np.random.Generator,
    *,
    cooperate: bool = True,
) -> tuple[str, SessionTranscript]:
    """Transmit a bit string, one fresh channel triplet per bit.

    ``source`` is any channel source exposing ``sample(rng)``; see
    ``security.ChannelSource``. Returns the recovered message and the
    classical transcript.
    """
    if any(c not in "01" for c in message):
        raise ValueError("message must contain only '0' and '1' characters")
    records = []
    for c in message:
        _, record = teleport_bit(int(c), source.sample(rng), rng, cooperate=cooperate)
        records.append(record)
    transcript = SessionTranscript(
        records=tuple(records),
        source_description=getattr(source, "description", repr(source)),
    )
    return transcript.recovered, transcript
