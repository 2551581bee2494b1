"""Command line front end.

Four subcommands: ``check`` runs the automata-based decision procedures,
``oracle`` runs the bounded brute-force witness search, ``materialize``
dumps a finite prefix of a universal model, and ``automaton`` prints the
constructed automata.  Verdicts map to exit codes so shell pipelines can
branch on them:

* 0 entails / true
* 1 non-entails / false
* 2 precheck failure (role-inclusion or profile)
* 10 usage, file, or parse error
* 11 witness self-audit failure
* 12 internal error
* 13 resource limit hit
"""

from __future__ import annotations

import json
import os
import signal
import sys

import click

from . import automata, entailment, models, mosaics, reasoner
from .entailment import PreconditionError, make_problem
from .syntax import (
    HornsepError,
    ParseError,
    ProfileError,
    parse_abox,
    parse_signature,
    parse_tbox,
)

EXIT_ENTAILS = 0
EXIT_NON_ENTAILS = 1
EXIT_PRECHECK = 2
EXIT_USAGE = 10
EXIT_AUDIT = 11
EXIT_INTERNAL = 12
EXIT_RESOURCE = 13

MODES = (
    "cq",
    "1tcq",
    "cq-incons",
    "deductive",
    "conservative",
    "inseparable",
)


def _emit(obj, as_json: bool):
    if as_json:
        click.echo(json.dumps(obj, indent=2, sort_keys=True))
        return
    for key in sorted(obj):
        click.echo(f"{key}: {json.dumps(obj[key], sort_keys=True)}")


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        _fail(str(exc), EXIT_USAGE)


def _parse(parser, path: str):
    try:
        return parser(_read(path))
    except ParseError as exc:
        _fail(f"{path}: {exc}", EXIT_USAGE)


class _TimeoutAlarm(Exception):
    pass


def _apply_limits(time_limit: float | None, memory_mb: int | None):
    if time_limit is None:
        env = os.environ.get("HORNSEP_TIME_LIMIT")
        time_limit = float(env) if env else None
    if memory_mb is None:
        env = os.environ.get("HORNSEP_MEMORY_MB")
        memory_mb = int(env) if env else None
    if memory_mb:
        try:
            import resource

            limit = memory_mb << 20
            resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
        except (ImportError, ValueError, OSError):
            click.echo("warning: memory limit not supported here", err=True)
    if time_limit and hasattr(signal, "SIGALRM"):

        def on_alarm(_signum, _frame):
            raise _TimeoutAlarm()

        signal.signal(signal.SIGALRM, on_alarm)
        signal.alarm(max(1, int(time_limit)))


def _problem(t1, t2, sigma_a, sigma_q):
    try:
        return make_problem(
            _parse(parse_tbox, t1),
            _parse(parse_tbox, t2),
            _parse(parse_signature, sigma_a),
            _parse(parse_signature, sigma_q),
        )
    except HornsepError as exc:
        _fail(str(exc), EXIT_USAGE)


def _shared_options(fn):
    for opt in (
        click.option("--t1", required=True, help="first TBox file"),
        click.option("--t2", required=True, help="second TBox file"),
        click.option("--sigma-a", required=True, help="ABox signature file"),
        click.option("--sigma-q", required=True, help="query signature file"),
        click.option("--json", "as_json", is_flag=True, help="JSON output"),
        click.option("--time-limit", type=float, default=None,
                     help="wall-clock limit in seconds"),
        click.option("--memory-mb", type=int, default=None,
                     help="address-space limit in MiB"),
    ):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Decide entailment, inseparability, and conservative extensions
    between Horn description logic TBoxes."""


@main.command()
@_shared_options
@click.option("--mode", type=click.Choice(MODES), default="cq",
              show_default=True)
@click.option("--verify-witness", is_flag=True,
              help="on non-entailment, search a small witness and replay it")
@click.option("--oracle-max-ind", type=int, default=2, show_default=True,
              help="witness ABox size bound for --verify-witness")
@click.option("--oracle-max-vars", type=int, default=2, show_default=True,
              help="witness query size bound for --verify-witness")
@click.option("--mosaic-cap", type=int, default=None,
              help="cap on candidate mosaic labelings per neighborhood")
def check(t1, t2, sigma_a, sigma_q, as_json, time_limit, memory_mb, mode,
          verify_witness, oracle_max_ind, oracle_max_vars, mosaic_cap):
    """Decide the selected entailment mode for two TBox files."""
    _apply_limits(time_limit, memory_mb)
    if mosaic_cap:
        mosaics.LABELING_CAP = mosaic_cap
    p = _problem(t1, t2, sigma_a, sigma_q)
    decide = {
        "cq": entailment.decide_cq_entailment,
        "1tcq": entailment.decide_1tcq_entailment,
        "cq-incons": entailment.decide_cq_entailment_incons,
        "deductive": entailment.decide_deductive,
        "conservative": entailment.conservative_extension,
        "inseparable": entailment.inseparable,
    }[mode]
    try:
        decision = decide(p)
    except (PreconditionError, ProfileError) as exc:
        _fail(str(exc), EXIT_PRECHECK)
    except _TimeoutAlarm:
        _fail("time limit exceeded", EXIT_RESOURCE)
    except MemoryError:
        _fail("memory limit exceeded", EXIT_RESOURCE)
    except HornsepError as exc:
        _fail(str(exc), EXIT_INTERNAL)
    report = decision.to_json_obj()
    code = EXIT_ENTAILS if decision.entails else EXIT_NON_ENTAILS
    if not decision.entails and decision.precheck.get("ri") is False:
        code = EXIT_PRECHECK
    if verify_witness and not decision.entails:
        try:
            witness = entailment.oracle_witness_search(
                p.t1, p.t2, p.sigA, p.sigQ, oracle_max_ind, oracle_max_vars,
                mode="1tcq" if mode in ("1tcq", "deductive") else "cq",
            )
        except _TimeoutAlarm:
            _fail("time limit exceeded", EXIT_RESOURCE)
        if witness is None:
            report["witness"] = None
            report["witness_verified"] = None
        else:
            report["witness"] = witness.to_json_obj()
            verified = entailment.verify_witness(p.t1, p.t2, witness)
            report["witness_verified"] = verified
            if not verified:
                _emit(report, as_json)
                _fail("witness failed replay", EXIT_AUDIT)
    _emit(report, as_json)
    sys.exit(code)


@main.command()
@_shared_options
@click.option("--mode", type=click.Choice(("cq", "1tcq")), default="cq",
              show_default=True)
@click.option("--max-abox", type=int, default=2, show_default=True,
              help="maximum ABox individuals")
@click.option("--max-cq", type=int, default=2, show_default=True,
              help="maximum query variables")
def oracle(t1, t2, sigma_a, sigma_q, as_json, time_limit, memory_mb, mode,
           max_abox, max_cq):
    """Brute-force search for a small (ABox, query, answer) witness of
    non-entailment; exit 1 when one is found."""
    _apply_limits(time_limit, memory_mb)
    p = _problem(t1, t2, sigma_a, sigma_q)
    try:
        witness = entailment.oracle_witness_search(
            p.t1, p.t2, p.sigA, p.sigQ, max_abox, max_cq, mode=mode,
            time_limit=time_limit,
        )
    except _TimeoutAlarm:
        _fail("time limit exceeded", EXIT_RESOURCE)
    if witness is None:
        _emit({"mode": mode, "witness": None}, as_json)
        sys.exit(EXIT_ENTAILS)
    if not entailment.verify_witness(p.t1, p.t2, witness):
        _fail("witness failed replay", EXIT_AUDIT)
    _emit({"mode": mode, "witness": witness.to_json_obj()}, as_json)
    sys.exit(EXIT_NON_ENTAILS)


@main.command()
@click.option("--tbox", required=True, help="TBox file")
@click.option("--abox", required=True, help="ABox file")
@click.option("--depth", type=int, default=0, show_default=True,
              help="anonymous-tree depth")
@click.option("--time-limit", type=float, default=None)
@click.option("--memory-mb", type=int, default=None)
def materialize(tbox, abox, depth, time_limit, memory_mb):
    """Dump a finite prefix of the universal model as JSON."""
    _apply_limits(time_limit, memory_mb)
    if depth < 0:
        _fail("depth must be nonnegative", EXIT_USAGE)
    t = _parse(parse_tbox, tbox)
    a = _parse(parse_abox, abox)
    try:
        interp = models.materialize(entailment.normalize(t), a, depth)
    except reasoner.InconsistentABoxError as exc:
        _fail(str(exc), EXIT_PRECHECK)
    except _TimeoutAlarm:
        _fail("time limit exceeded", EXIT_RESOURCE)
    click.echo(interp.to_json())
    sys.exit(EXIT_ENTAILS)


@main.command()
@_shared_options
@click.option("--which",
              type=click.Choice(("a1", "a2", "a3", "a4", "a4sim", "product")),
              default="product", show_default=True)
@click.option("--dump", "do_dump", is_flag=True,
              help="print states, priorities, and guarded transitions")
def automaton(t1, t2, sigma_a, sigma_q, as_json, time_limit, memory_mb,
              which, do_dump):
    """Build the pipeline automata and print a summary or full dump."""
    _apply_limits(time_limit, memory_mb)
    p = _problem(t1, t2, sigma_a, sigma_q)
    try:
        ctx = automata.build_label_context(p.t1, p.t2, p.sigA, p.sigQ)
        built = {
            "a1": lambda: automata.build_A1(p.sigA, ctx),
            "a2": lambda: automata.build_A2(p.t1, ctx),
            "a3": lambda: automata.build_A3(p.t2, ctx),
            "a4": lambda: automata.build_A4(p.t1, p.t2, ctx),
            "a4sim": lambda: automata.build_A4_sim(p.t1, p.t2, ctx),
        }
        if which == "product":
            aut = automata.intersect([built[k]() for k in
                                      ("a1", "a2", "a3", "a4")])
        else:
            aut = built[which]()
    except _TimeoutAlarm:
        _fail("time limit exceeded", EXIT_RESOURCE)
    except HornsepError as exc:
        _fail(str(exc), EXIT_INTERNAL)
    if do_dump:
        click.echo(aut.dump(), nl=False)
    else:
        _emit(
            {
                "name": aut.name,
                "states": len(aut.rules),
                "labels": len(ctx.labels),
                "root_labels": len(ctx.root_labels),
                "max_priority": aut.max_priority(),
            },
            as_json,
        )
    sys.exit(EXIT_ENTAILS)


if __name__ == "__main__":
    main()
