"""Command-line front end emitting deterministic, diff-able JSON reports.

Subcommands: ``send`` (transmit a bit string), ``test-channel`` (Z-basis
and parity verification), ``attack`` (reproduce the GHZ-triplet intercept
and test the tampered channel), ``detection-sweep`` (detection probability
vs. number of sacrificed triplets).

Exit codes: 0 for PASS/CHANNEL-OK, 2 for any detected anomaly, 1 for
usage or runtime errors.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__, protocol, security
from .protocol import run_session
from .qsim import make_rng
from .security import (
    CHANNEL_OK,
    EAVESDROPPER_DETECTED,
    HONEST_PARITY,
    ChannelSource,
    ProbeState,
    channel_verdict,
    detection_curve,
    eve_ghz_intercept,
    parity_test,
    z_basis_test,
)

SCHEMA_VERSION = 1
PASS = "PASS"
MESSAGE_MISMATCH = "MESSAGE-MISMATCH"

COMMANDS = ("send", "test-channel", "attack", "detection-sweep")

_DEFAULTS = {"source": "honest", "samples": 1000, "k_max": 10, "trials": 1000}


class UsageError(ValueError):
    """Bad flags, bad config files, or invalid flag combinations."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); 2 is reserved
        raise UsageError(message)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation: the seed is always explicit."""

    command: str
    seed: int
    message: str | None = None
    source: str | None = None
    samples: int | None = None
    k_max: int | None = None
    trials: int | None = None
    out: str | None = None


@dataclass(frozen=True)
class Report:
    command: str
    config: dict
    payload: dict
    verdict: str
    tool_version: str = __version__
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(_canonical(asdict(self)), sort_keys=True, indent=2) + "\n"


def _canonical(obj):
    """Round floats to 12 significant digits so reports are byte-stable."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    return obj


def _build_parser() -> _Parser:
    parser = _Parser(prog="cdsc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed; generated and reported when omitted")
        p.add_argument("--out", default=None, help="report path (default: stdout)")
        p.add_argument("--config", default=None,
                       help="JSON config file; explicit flags override its values")

    p = sub.add_parser("send", help="transmit a bit string over a channel source")
    p.add_argument("--message", default=None, help="bit string, e.g. 101001")
    p.add_argument("--source", default=None,
                   help="honest | ghz-intercept | probe:<path>")
    common(p)

    p = sub.add_parser("test-channel", help="run the Z-basis and parity tests")
    p.add_argument("--source", default=None,
                   help="honest | ghz-intercept | probe:<path>")
    p.add_argument("--samples", type=int, default=None,
                   help="triplets per test (default 1000, minimum 4)")
    common(p)

    p = sub.add_parser("attack", help="reproduce the GHZ-triplet intercept attack")
    p.add_argument("--samples", type=int, default=None,
                   help="intercept rounds to sample (default 1000, minimum 4)")
    common(p)

    p = sub.add_parser("detection-sweep",
                       help="detection probability vs. tested-triplet budget")
    p.add_argument("--source", default=None,
                   help="honest | ghz-intercept | probe:<path>")
    p.add_argument("--k-max", type=int, default=None, dest="k_max",
                   help="largest triplet budget to test (default 10)")
    p.add_argument("--trials", type=int, default=None,
                   help="Monte Carlo trials per budget (default 1000)")
    common(p)
    return parser


_FIELDS_BY_COMMAND = {
    "send": ("message", "source", "seed", "out"),
    "test-channel": ("source", "samples", "seed", "out"),
    "attack": ("samples", "seed", "out"),
    "detection-sweep": ("source", "k_max", "trials", "seed", "out"),
}


def _load_config_file(path: str) -> dict:
    try:
        values = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(values, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return values


def load_probe_spec(path: str) -> tuple[ProbeState, tuple[int, ...] | None]:
    """Read a probe spec file: eve_dimension, eight component vectors, signs.

    Component vectors are lists of [re, im] pairs keyed by the ABC basis
    bit pattern ("000" .. "111"); missing keys are zero vectors. An optional
    "sign_pattern" lists eight +1/-1 multipliers in the same order.
    """
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read probe spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"probe spec {path} is not valid JSON: {exc}") from exc
    try:
        dim = int(raw["eve_dimension"])
        components = {
            key: [complex(re, im) for re, im in vec]
            for key, vec in raw.get("components", {}).items()
        }
        spec = ProbeState.from_mapping(components, dim)
        signs = raw.get("sign_pattern")
        return spec, tuple(int(s) for s in signs) if signs is not None else (spec, None)[1] or (spec, None)
    except UsageError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"probe spec {path} is malformed: {exc}") from exc


def _build_source(source: str) -> ChannelSource:
    if source == "honest":
        return ChannelSource.honest()
    if source == "ghz-intercept":
        return ChannelSource.ghz_intercept()
    if source.startswith("probe:"):
        path = source[len("probe:"):]
        if not path:
            raise UsageError("probe source needs a spec path: probe:<path>")
        spec, signs = load_probe_spec(path)
        try:
            return ChannelSource.probe_coupled(spec, signs, description=f"probe:{path}")
        except ValueError as exc:
            raise UsageError(f"probe spec {path} is unusable: {exc}") from exc
    raise UsageError(
        f"unknown source {source!r}; expected honest, ghz-intercept, or probe:<path>"
    )


def parse_config(argv=None) -> RunConfig:
    """Resolve argv plus an optional config file into a validated RunConfig."""
    ns = _build_parser().parse_args(argv)
    command = ns.command
    fields = _FIELDS_BY_COMMAND[command]

    file_values = _load_config_file(ns.config) if ns.config else {}
    for key in file_values:
        if key not in fields:
            raise UsageError(
                f"config file sets {key!r}, which command {command!r} does not accept"
            )

    def resolve(name):
        cli_value = getattr(ns, name, None)
        if cli_value is not None:
            return cli_value
        if name in file_values:
            return file_values[name]
        return _DEFAULTS.get(name)

    values = {name: resolve(name) for name in fields}

    if command == "send":
        if values["message"] is None:
            raise UsageError("send requires --message")
        if any(c not in "01" for c in str(values["message"])):
            raise UsageError(
                f"message must contain only 0/1 characters: {values['message']!r}"
            )
        values["message"] = str(values["message"])
    if "samples" in fields and int(values["samples"]) < 4:
        raise UsageError("statistical commands need --samples >= 4")
    if "k_max" in fields and int(values["k_max"]) < 1:
        raise UsageError("--k-max must be at least 1")
    if "trials" in fields and int(values["trials"]) < 1:
        raise UsageError("--trials must be at least 1")
    if "source" in fields:
        _build_source(str(values["source"]))  # validate now; rebuilt at run time

    seed = resolve("seed")
    seed = secrets.randbits(63) if seed is None else int(seed)
    return RunConfig(command=command, seed=seed, **values)


def _serialize_corr(stats) -> dict:
    return {
        "samples": stats.samples,
        "all_equal_count": stats.all_equal_count,
        "all_equal_fraction": stats.fraction,
    }


def _serialize_parity(stats) -> dict:
    out = {}
    for op, tally in stats.per_operator.items():
        triples = {
            "".join("+" if s > 0 else "-" for s in triple): count
            for triple, count in tally.triples.items()
        }
        violations = sum(
            count for triple, count in tally.triples.items()
            if triple not in security.ALLOWED_TRIPLES[op]
        )
        out[op] = {
            "samples": tally.samples,
            "mean": tally.mean,
            "honest_mean": HONEST_PARITY[op],
            "observed_triples": triples,
            "violations": violations,
        }
    return out


def _run_send(config: RunConfig) -> Report:
    rng = make_rng(config.seed)
    source = _build_source(config.source)
    recovered, transcript = run_session(config.message, source, rng)
    payload = {
        "message_length": len(config.message),
        "recovered": recovered,
        "exact_match": recovered == config.message,
        "transcript_sha256": transcript.digest(),
    }
    verdict = PASS if payload["exact_match"] else MESSAGE_MISMATCH
    return _report(config, payload, verdict)


def _run_test_channel(config: RunConfig) -> Report:
    rng = make_rng(config.seed)
    source = _build_source(config.source)
    corr = z_basis_test(source, config.samples, rng)
    parity = parity_test(source, config.samples, rng)
    payload = {"z_test": _serialize_corr(corr), "parity_test": _serialize_parity(parity)}
    return _report(config, payload, channel_verdict(corr, parity))


def _run_attack(config: RunConfig) -> Report:
    rng = make_rng(config.seed)
    outcome_counts = {}
    for _ in range(config.samples):
        name, _ = eve_ghz_intercept(
            protocol.prepare_ghz(), protocol.prepare_ghz(security.EVE_LABELS), rng
        )
        outcome_counts[name] = outcome_counts.get(name, 0) + 1

    names, probs, states = security._intercept_outcome_table()
    correlations = {}
    for pair in (("A", "B"), ("A", "C"), ("B", "C")):
        state = next(s for s in states if s is not None)
        correlations["Z{}Z{}".format(*pair)] = security.qsim.pauli_expectation(
            state, security.PauliString(pair, "ZZ")
        )

    source = ChannelSource.ghz_intercept()
    corr = z_basis_test(source, config.samples, rng)
    parity = parity_test(source, config.samples, rng)
    payload = {
        "intercept_rounds": config.samples,
        "eve_outcome_counts": outcome_counts,
        "eve_outcome_probabilities": {n: float(p) for n, p in zip(names, probs)},
        "post_attack_pair_correlations": correlations,
        "z_test": _serialize_corr(corr),
        "parity_test": _serialize_parity(parity),
    }
    return _report(config, payload, channel_verdict(corr, parity))


def _run_detection_sweep(config: RunConfig) -> Report:
    rng = make_rng(config.seed)
    source = _build_source(config.source)
    curve = detection_curve(source, config.k_max, config.trials, rng)
    records = [
        {"k": k, "detections": d, "detection_rate": r}
        for k, d, r in zip(curve.ks, curve.detections, curve.estimates)
    ]
    payload = {"trials": curve.trials, "k_max": config.k_max, "curve": records}
    verdict = CHANNEL_OK if all(d == 0 for d in curve.detections) else EAVESDROPPER_DETECTED
    return _report(config, payload, verdict)


def _report(config: RunConfig, payload: dict, verdict: str) -> Report:
    return Report(
        command=config.command,
        config=asdict(config),
        payload=payload,
        verdict=verdict,
    )


_RUNNERS = {
    "send": _run_send,
    "test-channel": _run_test_channel,
    "attack": _run_attack,
    "detection-sweep": _run_detection_sweep,
}


def run_command(config: RunConfig) -> Report:
    """Dispatch a resolved config to its command runner."""
    try:
        return _RUNNERS[config.command](config)
    except KeyError:
        raise UsageError(f"unknown command {config.command!r}") from None


def emit_report(report: Report, path: str | None = None) -> None:
    """Write the canonical JSON report to a file or standard output."""
    text = report.to_json()
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def main(argv=None) -> int:
    try:
        config = parse_config(argv)
    except UsageError as exc:
        print(f"cdsc: error: {exc}", file=sys.stderr)
        return 1
    try:
        report = run_command(config)
        emit_report(report, config.out)
    except UsageError as exc:
        print(f"cdsc: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"cdsc: {config.command} failed: {exc}", file=sys.stderr)
        return 1
    print(f"cdsc {config.command}: {report.verdict} (seed {config.seed})",
          file=sys.stderr)
    return 0 if report.verdict in (PASS, CHANNEL_OK) else 2
