"""Command-line front door: parse, prove, compile, eval, experiment.

Default paths may come from BANGL_* environment variables; every
behavior is also reachable through flags so invocations stay
reproducible in scripts and CI.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import distrib, fock, semantics
from .formulas import (
    ParseError,
    UnknownWordError,
    default_lexicon,
    format_formula,
    load_lexicon,
    parse_formula,
    parse_sequent,
    phrase_sequents,
)
from .prover import (
    SearchConfig,
    SearchTimeout,
    check_derivation,
    count_rule,
    derivation_to_dict,
    derivation_to_text,
    prove,
    Rule,
)

EXIT_OK = 0
EXIT_NO_PROOF = 1
EXIT_ERROR = 2

_DELTA_KINDS = {
    "full-dual": lambda cap: fock.FullDual(cap=cap),
    "k-extension": lambda cap: fock.KExtension(),
    "basis-copy-raw": lambda cap: fock.BasisCopyRaw(),
    "basis-copy-a": lambda cap: fock.BasisCopyA(),
    "basis-copy-b": lambda cap: fock.BasisCopyB(),
}

_MODEL_KINDS = {
    "full": distrib.Full,
    "k-extension": distrib.KExt,
    "copy-a": distrib.CopyA,
    "copy-b": distrib.CopyB,
    "additive": distrib.Additive,
    "verb-only": distrib.VerbOnly,
}


def _env_default(name: str):
    return os.environ.get(f"BANGL_{name}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bangl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_parse = sub.add_parser("parse", help="parse a formula or sequent and echo it back")
    p_parse.add_argument("text")
    p_parse.add_argument("--sequent", action="store_true", help="treat the input as a sequent")
    p_parse.add_argument("--output", choices=["text", "json"], default="text")

    p_prove = sub.add_parser("prove", help="search for derivations of a sequent")
    p_prove.add_argument("sequent")
    p_prove.add_argument("--max-depth", type=int, default=40)
    p_prove.add_argument("--contraction-budget", type=int, default=1)
    p_prove.add_argument("--max-solutions", type=int, default=1)
    p_prove.add_argument("--all", action="store_true", help="collect up to 200 derivations")
    p_prove.add_argument("--timeout", type=float, default=None, help="seconds")
    p_prove.add_argument("--output", choices=["text", "json"], default="text")

    for name in ("compile", "eval"):
        p = sub.add_parser(
            name,
            help="prove a phrase and compile it"
            + ("" if name == "compile" else ", then evaluate word tensors"),
        )
        p.add_argument("phrase", help="whitespace-separated words; '.' tokens are ignored")
        p.add_argument("--goal", default=None, help="goal formula (default S, or S,S with a '.')")
        p.add_argument("--lexicon", default=_env_default("LEXICON"))
        p.add_argument("--dim-n", type=int, default=2)
        p.add_argument("--dim-s", type=int, default=2)
        p.add_argument("--truncation", default="1", help="wedge layer cap or 'full'")
        p.add_argument("--max-depth", type=int, default=40)
        p.add_argument("--contraction-budget", type=int, default=4)
        p.add_argument("--timeout", type=float, default=None)
        p.add_argument("--output", choices=["text", "json"], default="text")
        if name == "eval":
            p.add_argument("--delta", choices=sorted(_DELTA_KINDS), default="k-extension")
            p.add_argument("--tensors", default=_env_default("TENSORS"), help="word tensor TSV")
            p.add_argument(
                "--random-tensors",
                action="store_true",
                help="draw any missing word tensors from a seeded generator",
            )
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--fulldual-cap", type=int, default=4096)

    p_exp = sub.add_parser("experiment", help="run the ellipsis disambiguation task")
    p_exp.add_argument("--embeddings", default=_env_default("EMBEDDINGS"), required=_env_default("EMBEDDINGS") is None)
    p_exp.add_argument("--dataset", default=_env_default("DATASET"), required=_env_default("DATASET") is None)
    p_exp.add_argument("--triples", default=_env_default("TRIPLES"), required=_env_default("TRIPLES") is None)
    p_exp.add_argument(
        "--models",
        default="full,k-extension,copy-a,copy-b,additive,verb-only",
        help="comma-separated subset of: " + ",".join(sorted(_MODEL_KINDS)),
    )
    p_exp.add_argument("--k", type=float, default=1.0)
    p_exp.add_argument("--csv", default="ellipsis_report.csv", help="CSV output path")
    p_exp.add_argument("--table", default=None, help="optional text table output path")
    p_exp.add_argument("--output", choices=["text", "json"], default="text")
    return parser


def _load_lexicon(path):
    return load_lexicon(path) if path else default_lexicon()


def _phrase_words(phrase: str) -> list[str]:
    return [w for w in phrase.split() if w != "."]


def _phrase_goal(args, phrase: str):
    if args.goal:
        return parse_formula(args.goal)
    return parse_formula("S,S" if "." in phrase.split() else "S")


def _search_config(args, max_solutions: int = 1) -> SearchConfig:
    return SearchConfig(
        max_depth=args.max_depth,
        contraction_budget=args.contraction_budget,
        max_solutions=max_solutions,
        timeout=args.timeout,
    )


def _prove_phrase(args, assignment):
    lexicon = _load_lexicon(args.lexicon)
    words = _phrase_words(args.phrase)
    goal = _phrase_goal(args, args.phrase)
    config = _search_config(args)
    for candidate in phrase_sequents(lexicon, words, goal):
        found = prove(candidate, config)
        if found:
            return words, candidate, found[0]
    return words, None, None


def cmd_parse(args) -> int:
    if args.sequent:
        seq = parse_sequent(args.text)
        if args.output == "json":
            print(json.dumps({"antecedent": [format_formula(f) for f in seq.antecedent],
                              "goal": format_formula(seq.goal)}))
        else:
            print(seq)
    else:
        formula = parse_formula(args.text)
        if args.output == "json":
            print(json.dumps({"formula": format_formula(formula)}))
        else:
            print(format_formula(formula))
    return EXIT_OK


def cmd_prove(args) -> int:
    seq = parse_sequent(args.sequent)
    limit = 200 if args.all else args.max_solutions
    config = _search_config(args, max_solutions=limit)
    derivations = prove(seq, config)
    if args.output == "json":
        payload = [
            {
                "derivation": derivation_to_dict(d),
                "contractions": count_rule(d, Rule.CONTR),
            }
            for d in derivations
        ]
        print(json.dumps(payload, indent=2))
    else:
        if not derivations:
            print("no proof within bounds")
        for i, d in enumerate(derivations):
            print(f"# derivation {i + 1}: contractions = {count_rule(d, Rule.CONTR)}")
            print(derivation_to_text(d))
    return EXIT_OK if derivations else EXIT_NO_PROOF


def _assignment(args) -> semantics.SpaceAssignment:
    trunc = args.truncation
    if trunc != "full":
        trunc = int(trunc)
    cap = getattr(args, "fulldual_cap", 4096)
    return semantics.SpaceAssignment(args.dim_n, args.dim_s, trunc, cap)


def cmd_compile(args) -> int:
    assignment = _assignment(args)
    words, seq, derivation = _prove_phrase(args, assignment)
    if derivation is None:
        print("no proof within bounds", file=sys.stderr)
        return EXIT_NO_PROOF
    term = semantics.compile_derivation(derivation, assignment)
    if args.output == "json":
        print(json.dumps({
            "sequent": str(seq),
            "term": semantics.term_to_sexpr(term),
            "input_dims": semantics.shape_dims(term.dom),
            "output_dims": semantics.shape_dims(term.cod),
            "contractions": count_rule(derivation, Rule.CONTR),
        }))
    else:
        print(f"sequent: {seq}")
        print(f"contractions: {count_rule(derivation, Rule.CONTR)}")
        print(semantics.term_to_sexpr(term))
    return EXIT_OK


def cmd_eval(args) -> int:
    assignment = _assignment(args)
    words, seq, derivation = _prove_phrase(args, assignment)
    if derivation is None:
        print("no proof within bounds", file=sys.stderr)
        return EXIT_NO_PROOF
    term = semantics.compile_derivation(derivation, assignment)
    store = (
        semantics.load_word_tensors(args.tensors, assignment)
        if args.tensors
        else semantics.WordTensorStore(assignment)
    )
    rng = np.random.default_rng(args.seed)
    inputs = []
    for word, formula in zip(words, seq.antecedent):
        if word in store:
            inputs.append(store.tensor(word))
        elif args.random_tensors:
            shape = semantics.interpret_formula(formula, assignment)
            inputs.append(semantics.random_word_tensor(shape, rng))
        else:
            raise KeyError(f"no tensor for {word!r}; pass --tensors or --random-tensors")
    kind = _DELTA_KINDS[args.delta](args.fulldual_cap)
    result = semantics.evaluate(term, inputs, kind)
    if args.output == "json":
        print(json.dumps({
            "sequent": str(seq),
            "contractions": count_rule(derivation, Rule.CONTR),
            "output_dims": list(result.shape),
            "values": result.reshape(-1).tolist(),
        }))
    else:
        print(f"sequent: {seq}")
        print(f"contractions: {count_rule(derivation, Rule.CONTR)}")
        print(np.array2string(result, precision=8))
    return EXIT_OK


def cmd_experiment(args) -> int:
    store = distrib.load_embeddings(args.embeddings)
    entries = distrib.load_task_entries(args.dataset)
    triples = distrib.load_verb_triples(args.triples)
    kinds = []
    for name in args.models.split(","):
        name = name.strip()
        if name not in _MODEL_KINDS:
            raise ValueError(f"unknown model {name!r}")
        kinds.append(distrib.KExt(args.k) if name == "k-extension" else _MODEL_KINDS[name]())
    report = distrib.run_task(entries, store, triples, kinds)
    Path(args.csv).write_text(report.render_csv(), encoding="utf-8")
    if args.table:
        Path(args.table).write_text(report.render_text(), encoding="utf-8")
    if args.output == "json":
        print(json.dumps({
            "rows": [row.__dict__ for row in report.rows],
            "skipped": report.skipped,
            "csv": args.csv,
        }))
    else:
        print(report.render_text(), end="")
        print(f"csv written to {args.csv}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "parse": cmd_parse,
        "prove": cmd_prove,
        "compile": cmd_compile,
        "eval": cmd_eval,
        "experiment": cmd_experiment,
    }
    try:
        return handlers[args.command](args)
    except SearchTimeout as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ParseError, UnknownWordError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
