"""Command-line sender / receiver / attacker.

Exit codes: 0 success, 2 protocol abort, 3 transport error, 4 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .errors import ParameterError, ProtocolError, SessionAbort, TransportError, WhotError
from .net import SessionConfig
from .otext import array_to_values, random_inputs, run_receiver, run_sender, values_to_array
from .params import DEFAULT_BATCH, DEFAULT_KAPPA, DEFAULT_MU, MODES, Params
from .wire import Channel, connect, listen, parse_endpoint

EXIT_OK = 0
EXIT_ABORT = 2
EXIT_TRANSPORT = 3
EXIT_USAGE = 4

log = logging.getLogger("whot")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="whot", description="1-out-of-n OT extension over TCP.")
    p.add_argument("--role", required=True, choices=("sender", "receiver", "attacker"))
    p.add_argument("--mode", default="active", choices=MODES)
    p.add_argument("--m", type=int, required=True, help="number of extended OTs")
    p.add_argument("--n", type=int, required=True, help="inputs per OT (power of two, <= kappa)")
    p.add_argument("--ell", type=int, required=True, help="bit length of each input")
    p.add_argument("--kappa", type=int, default=DEFAULT_KAPPA)
    p.add_argument("--mu", type=int, default=DEFAULT_MU, help="check iterations (ignored in semi-honest mode)")
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH)
    end = p.add_mutually_exclusive_group(required=True)
    end.add_argument("--listen", metavar="HOST:PORT")
    end.add_argument("--connect", metavar="HOST:PORT")
    p.add_argument("--timeout", type=float, default=60.0, help="seconds to wait for the peer")
    p.add_argument("--input-file", help="JSON m x n list of ints (sender inputs; ground truth for the attacker)")
    p.add_argument("--choices-file", help="JSON list of m choices in 1..n")
    p.add_argument("--output-file", help="receiver: write chosen values as JSON")
    p.add_argument("--stats-json", help="write transcript statistics here")
    p.add_argument("--report-json", help="attacker: write the attack report here")
    p.add_argument("--seed", type=int, help="deterministic randomness (testing only)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _inputs(args, params: Params, rng) -> np.ndarray:
    if args.input_file is None:
        return random_inputs(params, rng)
    values = _load_json(args.input_file)
    arr = values_to_array(values, params.ell)
    if arr.shape != (params.m, params.n, params.value_bytes):
        raise ParameterError(f"input file holds {arr.shape[:2]} values, expected {(params.m, params.n)}")
    return arr


def _choices(args, params: Params, rng) -> np.ndarray:
    if args.choices_file is None:
        gen = rng if rng is not None else np.random.default_rng()
        return gen.integers(1, params.n + 1, size=params.m)
    r = np.asarray(_load_json(args.choices_file), dtype=np.int64).reshape(-1)
    if r.size != params.m or r.min() < 1 or r.max() > params.n:
        raise ParameterError(f"choices file must hold {params.m} values in 1..{params.n}")
    return r


def _open(config: SessionConfig, timeout: float) -> Channel:
    if config.listen:
        return listen(config.listen, timeout=timeout)
    return connect(config.connect, timeout=timeout)


def _attack(args, params: Params, channel: Channel, rng) -> int:
    from .insecure.adversary import full_attack

    if args.input_file is None:
        raise UsageError("the attacker role needs --input-file (the provisioned sender inputs)")
    truth = _inputs(args, params, rng)
    r = _choices(args, params, rng)
    known = truth[np.arange(params.m), r - 1]
    report = full_attack(channel, params, known, r, rng=rng)
    out = report.to_dict(truth)
    print(json.dumps(out))
    if args.report_json:
        _write_json(args.report_json, out)
    return EXIT_ABORT if report.aborted else EXIT_OK


def run_cli(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
        params = Params.create(args.m, args.n, args.ell, mode=args.mode, kappa=args.kappa, mu=args.mu,
                               batch_size=args.batch_size)
        config = SessionConfig(args.role, params, args.listen, args.connect, args.seed, args.stats_json)
        parse_endpoint(args.listen or args.connect)
        rng = np.random.default_rng(args.seed) if args.seed is not None else None
        if args.role == "attacker" and os.environ.get("WHOT_INSECURE") != "1":
            raise UsageError("the attacker role needs WHOT_INSECURE=1")
        if args.role == "attacker" and args.input_file is None:
            raise UsageError("the attacker role needs --input-file (the provisioned sender inputs)")
        inputs = _inputs(args, params, rng) if args.role == "sender" else None
        choices = _choices(args, params, rng) if args.role == "receiver" else None
    except (UsageError, ParameterError, ValueError, OSError) as exc:
        print(f"whot: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        channel = _open(config, args.timeout)
    except (TransportError, OSError) as exc:
        print(f"whot: transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT

    stats = None
    code = EXIT_OK
    try:
        with channel:
            if args.role == "attacker":
                return _attack(args, params, channel, rng)
            if args.role == "sender":
                stats = run_sender(channel, params, inputs, rng=rng)
            else:
                outputs, stats = run_receiver(channel, params, choices, rng=rng)
                if args.output_file:
                    _write_json(args.output_file, array_to_values(outputs))
            log.info("session done: %d bytes in %d batches", stats.total, stats.batches)
    except SessionAbort as exc:
        print(f"whot: session aborted: {exc}", file=sys.stderr)
        stats = getattr(exc, "stats", None)
        code = EXIT_ABORT
    except TransportError as exc:
        print(f"whot: transport error: {exc}", file=sys.stderr)
        code = EXIT_TRANSPORT
    except UsageError as exc:
        print(f"whot: usage error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except (ProtocolError, WhotError) as exc:
        print(f"whot: protocol error: {exc}", file=sys.stderr)
        code = EXIT_ABORT
    if stats is not None and args.stats_json:
        stats.write(args.stats_json)
    return code


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
