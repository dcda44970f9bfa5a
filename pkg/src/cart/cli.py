"""Command line entry points."""

import argparse
import asyncio
import json
import statistics
import sys

from cart import formatter, metrics, normalizer, server, session, sim
from cart.scenario import ScenarioKind


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def cmd_normalize(args) -> int:
    result = normalizer.normalize_verbose(_read(args.file))
    print(result.content)
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    ref = _read(args.reference)
    hyp = _read(args.hypothesis)
    report = metrics.wer(ref, hyp)
    print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    return 0


def cmd_eval_delta(args) -> int:
    ref = _read(args.reference)
    baseline = _read(args.baseline)
    edited = _read(args.edited)
    delta = metrics.reduction_report(ref, baseline, edited)
    print(json.dumps(delta.to_dict(), ensure_ascii=False, indent=2))
    return 0


def cmd_fmt(args) -> int:
    data = json.loads(_read(args.transcript))
    words = session.load_transcript(data)
    if args.kind == "captions":
        text = " ".join(w.text for w in words)
        for block in formatter.format_captions(text):
            print("\n".join(block.lines))
            print()
    else:
        mode = "chunked" if args.chunked else "standard"
        for par in formatter.format_transcript(words, mode):
            print(par.text)
            print()
    return 0


def cmd_serve(args) -> int:
    data = json.loads(_read(args.transcript))
    words = session.load_transcript(data)
    reference = _read(args.reference) if args.reference else ""
    config = session.SessionConfig(
        scenario=ScenarioKind(args.scenario),
        transcript=words,
        reference_text=reference or None,
        media_uri=args.media_uri,
        speedup=args.speedup,
    )
    try:
        asyncio.run(server.serve_forever(config, args.host, args.port,
                                         persist_dir=args.out_dir))
    except KeyboardInterrupt:
        pass
    return 0


def cmd_replay(args) -> int:
    with open(args.oplog, encoding="utf-8") as fh:
        doc = session.replay_oplog(fh)
    print(doc.content)
    return 0


def _agents(profile_path: str | None) -> list[sim.AgentProfile]:
    if profile_path:
        data = json.loads(_read(profile_path))
        if isinstance(data, list):
            return [sim.AgentProfile.from_dict(d) for d in data]
        return [sim.AgentProfile.from_dict(data)] * 3
    return [sim.DEFAULT_PROFILE] * 3


def cmd_sim(args) -> int:
    ref = _read(args.reference) if args.reference else sim.synthesize_reference(
        args.words, args.seed)
    hyp = sim.seed_errors(ref, args.wer, args.seed)
    transcript = sim.synth_timed_words(hyp)
    result = sim.run_experiment(ScenarioKind(args.scenario), _agents(args.profile),
                                transcript, ref, args.seed, speedup=args.speedup)
    print(json.dumps(result.to_dict(), ensure_ascii=False, indent=2))
    return 0


def cmd_sweep(args) -> int:
    reductions: dict[str, list[float]] = {}
    agents = _agents(args.profile)
    for scenario in args.scenarios.split(","):
        kind = ScenarioKind(scenario.strip())
        per_seed = []
        for seed in range(args.seeds):
            ref = sim.synthesize_reference(args.words, seed)
            hyp = sim.seed_errors(ref, args.wer, seed)
            transcript = sim.synth_timed_words(hyp)
            result = sim.run_experiment(kind, agents, transcript, ref, seed,
                                        speedup=args.speedup)
            per_seed.append(result.delta.relative_wer_reduction)
        reductions[kind.value] = per_seed
        print(json.dumps({
            "scenario": kind.value,
            "seeds": args.seeds,
            "mean_wer_reduction": statistics.fmean(per_seed),
            "stdev": statistics.stdev(per_seed) if len(per_seed) > 1 else 0.0,
        }, ensure_ascii=False))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="cart")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", help="normalize German text for scoring")
    p.add_argument("file", nargs="?", default="-")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("eval", help="word error rate of a hypothesis")
    p.add_argument("reference")
    p.add_argument("hypothesis")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-delta", help="error reduction after editing")
    p.add_argument("reference")
    p.add_argument("baseline")
    p.add_argument("edited")
    p.set_defaults(func=cmd_eval_delta)

    p = sub.add_parser("fmt", help="format a timed transcript")
    p.add_argument("kind", choices=["paragraphs", "captions"])
    p.add_argument("transcript")
    p.add_argument("--chunked", action="store_true",
                   help="short paragraphs for rotating ownership")
    p.set_defaults(func=cmd_fmt)

    p = sub.add_parser("serve", help="run a correction session server")
    p.add_argument("transcript")
    p.add_argument("--scenario", default="A", choices=[k.value for k in ScenarioKind])
    p.add_argument("--reference", default=None)
    p.add_argument("--media-uri", default="")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--speedup", type=float, default=1.0)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="rebuild the final text from an op log")
    p.add_argument("oplog")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("sim", help="run one simulated correction session")
    p.add_argument("--scenario", default="A", choices=[k.value for k in ScenarioKind])
    p.add_argument("--reference", default=None)
    p.add_argument("--words", type=int, default=900)
    p.add_argument("--wer", type=float, default=0.093)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--speedup", type=float, default=50.0)
    p.add_argument("--profile", default=None,
                   help="JSON file with one agent profile or a list of three")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("sweep", help="compare scenarios over many seeds")
    p.add_argument("--scenarios", default="A,B,C,D")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--words", type=int, default=900)
    p.add_argument("--wer", type=float, default=0.093)
    p.add_argument("--speedup", type=float, default=50.0)
    p.add_argument("--profile", default=None)
    p.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
