"""Command-line surface for reproducible generation and checking runs.

Every run that writes files also writes ``<out>.manifest.json`` recording
the subcommand, the resolved configuration, the seed and the output paths.
``dualsys replay --manifest <file>`` re-executes the recorded run; outputs
are byte-identical because all randomness flows from the recorded seed
through a fixed per-story splitmix derivation and all JSON is written with
sorted keys.

Exit codes: 0 success, 2 configuration or input-format error, 3 proposal
source failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Sequence

from dualsys import __version__
from dualsys.babi.parser import BabiExtractor, parse_question, parse_statement
from dualsys.babi.textio import FormatError, Question, read_stories, write_stories
from dualsys.babi.world import BabiWorld, UnknownEntity
from dualsys.clutrr.kb import ClutrrWorld
from dualsys.clutrr.parser import ClutrrExtractor
from dualsys.engine import (
    GenerationConfig,
    ParseFailure,
    ProposalSourceFailure,
    compute_stats,
    generate_story,
    write_traces_jsonl,
)
from dualsys.gscan import (
    FilterOutcome,
    NoisyPlanProposer,
    NoisyTargetPredictor,
    OracleProposer,
    ScriptedActionProposer,
    filter_search,
    load_scenes,
    random_scene,
    write_scenes,
)
from dualsys.proposers import (
    BabiProposerConfig,
    BabiTemplateProposer,
    ClutrrProposerConfig,
    ClutrrTemplateProposer,
    GroundTruthSimulator,
    HttpProposalSource,
    SimulatorConfig,
)
from dualsys.seeds import derive_seed

ENDPOINT_ENV = "DUALSYS_PROPOSER_URL"


class ConfigError(ValueError):
    pass


def _dump(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _write_json(path: str, payload: dict[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_jsonl(path: str, rows: Sequence[dict[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True))
            fh.write("\n")


def _write_manifest(subcommand: str, config: dict[str, Any], outputs: list[str]) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "seed": config.get("seed"),
        "version": __version__,
        "outputs": outputs,
    }
    _write_json(outputs[0] + ".manifest.json", manifest)


def _manifest_argv(manifest: dict[str, Any]) -> list[str]:
    argv = [manifest["subcommand"]]
    for key, value in sorted(manifest["config"].items()):
        if value is None or value is False:
            continue
        flag = "--in" if key == "input" else "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    return argv


# -- story generation -----------------------------------------------------------


def _make_babi_source(args: argparse.Namespace, seed: int):
    if args.proposer == "template":
        return BabiTemplateProposer(
            BabiProposerConfig(
                question_prob=args.question_prob,
                fault_rate=args.fault_rate,
                seed=seed,
            )
        )
    if args.proposer == "http":
        endpoint = args.endpoint
        if not endpoint:
            raise ConfigError(f"http proposer needs --endpoint or ${ENDPOINT_ENV}")
        return HttpProposalSource(endpoint, batch_size=args.budget, timeout=args.timeout)
    raise ConfigError(f"unknown proposer {args.proposer!r}")


def _make_clutrr_source(args: argparse.Namespace, seed: int):
    if args.proposer == "template":
        return ClutrrTemplateProposer(
            ClutrrProposerConfig(
                filler_prob=args.filler_prob,
                fault_rate=args.fault_rate,
                seed=seed,
            )
        )
    if args.proposer == "http":
        endpoint = args.endpoint
        if not endpoint:
            raise ConfigError(f"http proposer needs --endpoint or ${ENDPOINT_ENV}")
        return HttpProposalSource(endpoint, batch_size=args.budget, timeout=args.timeout)
    raise ConfigError(f"unknown proposer {args.proposer!r}")


def _generation_stats(traces, args) -> dict[str, Any]:
    stats = compute_stats(traces)
    total_lines = sum(len(t.lines) for t in traces)
    candidates = sum(l.attempts for t in traces for l in t.lines)
    payload = stats.to_json()
    payload.update(
        {
            "stories": len(traces),
            "lines_total": total_lines,
            "candidates_total": candidates,
            "rejection_rate": stats.total_rejections / candidates if candidates else 0.0,
            "budget": args.budget,
            "seed": args.seed,
        }
    )
    return payload


def _run_generation(domain: str, args: argparse.Namespace) -> int:
    traces = []
    for i in range(args.stories):
        story_seed = derive_seed(args.seed, i)
        if domain == "babi":
            source = _make_babi_source(args, story_seed)
            world: Any = BabiWorld()
            extractor: Any = BabiExtractor()
        else:
            source = _make_clutrr_source(args, story_seed)
            world = ClutrrWorld()
            extractor = ClutrrExtractor()
        config = GenerationConfig(
            sample_budget=args.budget, max_lines=args.max_lines, seed=story_seed
        )
        traces.append(generate_story(source, extractor, world, config))
    write_traces_jsonl(traces, args.out)
    stats = _generation_stats(traces, args)
    _write_json(args.out + ".stats.json", stats)
    config = {
        "stories": args.stories,
        "budget": args.budget,
        "seed": args.seed,
        "proposer": args.proposer,
        "max_lines": args.max_lines,
        "fault_rate": args.fault_rate,
        "out": args.out,
    }
    if domain == "babi":
        config["question_prob"] = args.question_prob
    else:
        config["filler_prob"] = args.filler_prob
    if args.proposer == "http":
        config["endpoint"] = args.endpoint
        config["timeout"] = args.timeout
    _write_manifest(f"generate-{domain}", config, [args.out, args.out + ".stats.json"])
    print(f"stories: {stats['stories']}")
    print(f"lines error-free: {stats['pct_lines_error_free']:.4f}")
    print(f"stories error-free: {stats['pct_stories_error_free']:.4f}")
    print(f"rejection rate: {stats['rejection_rate']:.4f}")
    _dump(stats)
    return 0


def _cmd_generate_babi(args: argparse.Namespace) -> int:
    return _run_generation("babi", args)


def _cmd_generate_clutrr(args: argparse.Namespace) -> int:
    return _run_generation("clutrr", args)


def _cmd_simulate_babi(args: argparse.Namespace) -> int:
    simulator = GroundTruthSimulator(
        SimulatorConfig(
            question_prob=args.question_prob,
            min_lines=args.min_lines,
            max_lines=args.max_lines,
            seed=args.seed,
        )
    )
    stories = simulator.stories(args.stories)
    write_stories(stories, args.out)
    config = {
        "stories": args.stories,
        "seed": args.seed,
        "question_prob": args.question_prob,
        "min_lines": args.min_lines,
        "max_lines": args.max_lines,
        "out": args.out,
    }
    _write_manifest("simulate-babi", config, [args.out])
    _dump({"stories": args.stories, "out": args.out})
    return 0


# -- checking -----------------------------------------------------------------


def _cmd_qa_babi(args: argparse.Namespace) -> int:
    try:
        stories = read_stories(args.input)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows = []
    correct = 0
    total = 0
    for story_idx, story in enumerate(stories):
        world = BabiWorld()
        for item in story.items:
            if isinstance(item, Question):
                try:
                    query = parse_question(item.text)
                except ParseFailure as exc:
                    print(f"error: {exc}", file=sys.stderr)
                    return 2
                try:
                    answer = world.query_obj_loc(query.obj)
                except UnknownEntity:
                    answer = None
                predicted = answer if answer is not None else "unknown"
                total += 1
                hit = predicted == item.answer
                correct += hit
                rows.append(
                    {
                        "story": story_idx,
                        "question": item.text,
                        "predicted": predicted,
                        "gold": item.answer,
                        "correct": hit,
                    }
                )
            else:
                try:
                    action = parse_statement(item.text)
                except ParseFailure as exc:
                    print(f"error: {exc}", file=sys.stderr)
                    return 2
                verdict = world.check_and_apply(action)
                if not verdict.ok:
                    # inconsistent input line: skip it, keep answering
                    rows.append(
                        {
                            "story": story_idx,
                            "skipped_statement": item.text,
                            "cause": verdict.cause,
                        }
                    )
    if total == 0:
        print("error: no questions in input", file=sys.stderr)
        return 2
    accuracy = round(correct / total, 4)
    summary = {"questions": total, "correct": correct, "accuracy": accuracy}
    if args.out:
        _write_jsonl(args.out, rows)
        _write_json(args.out + ".summary.json", summary)
        _write_manifest(
            "qa-babi", {"input": args.input, "out": args.out, "seed": None},
            [args.out, args.out + ".summary.json"],
        )
    print(f"accuracy: {accuracy:.4f} ({correct}/{total})")
    _dump(summary)
    return 0


def _read_clutrr_stories(path: str) -> list[list[str]]:
    """Plain-text stories: one sentence per line, blank line between stories."""
    stories: list[list[str]] = []
    current: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                if current:
                    stories.append(current)
                    current = []
                continue
            current.append(line)
    if current:
        stories.append(current)
    return stories


def check_clutrr_story(lines: Sequence[str]) -> list[dict[str, Any]]:
    """Per-line verdicts for one story; rejected lines are dropped from the
    evolving state so later lines are judged against consistent context."""
    world = ClutrrWorld()
    extractor = ClutrrExtractor()
    rows = []
    for idx, line in enumerate(lines):
        atoms = extractor.extract(line, ())
        verdict = world.check(atoms)
        if verdict.ok:
            world.apply(atoms)
        rows.append(
            {
                "line": idx,
                "text": line,
                "ok": verdict.ok,
                "cause": verdict.cause,
                "detail": verdict.detail,
                "atoms": [a.to_json() for a in atoms],
            }
        )
    return rows


def _cmd_check_clutrr(args: argparse.Namespace) -> int:
    try:
        stories = _read_clutrr_stories(args.input)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not stories:
        print("error: no stories in input", file=sys.stderr)
        return 2
    rows = []
    lines_total = 0
    lines_ok = 0
    stories_ok = 0
    for story_idx, lines in enumerate(stories):
        verdicts = check_clutrr_story(lines)
        clean = all(v["ok"] for v in verdicts)
        stories_ok += clean
        for v in verdicts:
            v["story"] = story_idx
            rows.append(v)
            lines_total += 1
            lines_ok += v["ok"]
    summary = {
        "stories": len(stories),
        "lines": lines_total,
        "pct_lines_error_free": round(lines_ok / lines_total, 4),
        "pct_stories_error_free": round(stories_ok / len(stories), 4),
        "lines_rejected": lines_total - lines_ok,
        "stories_rejected": len(stories) - stories_ok,
    }
    if args.out:
        _write_jsonl(args.out, rows)
        _write_json(args.out + ".summary.json", summary)
        _write_manifest(
            "check-clutrr", {"input": args.input, "out": args.out, "seed": None},
            [args.out, args.out + ".summary.json"],
        )
    print(f"lines error-free: {summary['pct_lines_error_free']:.4f}")
    print(f"stories error-free: {summary['pct_stories_error_free']:.4f}")
    _dump(summary)
    return 0


# -- gridworld -----------------------------------------------------------------


def _cmd_gscan_scenes(args: argparse.Namespace) -> int:
    import random

    scenes = []
    for i in range(args.count):
        rng = random.Random(derive_seed(args.seed, i))
        scenes.append(random_scene(rng, size=args.size, n_objects=args.objects))
    write_scenes(scenes, args.out)
    config = {
        "count": args.count,
        "seed": args.seed,
        "size": args.size,
        "objects": args.objects,
        "out": args.out,
    }
    _write_manifest("gscan-scenes", config, [args.out])
    _dump({"scenes": args.count, "out": args.out})
    return 0


def _parse_noisy(spec: str, kind: str) -> float:
    try:
        _, raw = spec.split(":", 1)
        value = float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad {kind} spec {spec!r}, expected {kind}:FLOAT") from exc
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{kind} probability must lie in [0, 1]")
    return value


def _cmd_gscan_filter(args: argparse.Namespace) -> int:
    try:
        scenes = load_scenes(args.scenes)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: bad scene file: {exc}", file=sys.stderr)
        return 2
    rows = []
    unfiltered_hits = 0
    filtered_hits = 0
    for i, scene in enumerate(scenes):
        episode_seed = derive_seed(args.seed, i)
        if args.target == "oracle":
            target = scene.target
        elif args.target.startswith("noisy:"):
            predictor = NoisyTargetPredictor(_parse_noisy(args.target, "noisy"), episode_seed)
            target = predictor.predict(scene.state, scene.target)
        else:
            raise ConfigError(f"unknown target predictor {args.target!r}")
        if args.proposer == "oracle":
            proposer: Any = OracleProposer(scene.target)
        elif args.proposer.startswith("noisy:"):
            proposer = NoisyPlanProposer(
                scene.target, _parse_noisy(args.proposer, "noisy"), episode_seed
            )
        elif args.proposer == "scripted":
            if not scene.candidates:
                print(f"error: scene {i} has no candidates for the scripted proposer",
                      file=sys.stderr)
                return 2
            proposer = ScriptedActionProposer(scene.candidates, cycle=True)
        else:
            raise ConfigError(f"unknown proposer {args.proposer!r}")
        unfiltered = proposer.greedy(scene.state)
        outcome: FilterOutcome = filter_search(
            proposer, scene.state, target, budget=args.budget
        )
        unfiltered_exact = unfiltered == scene.gold_actions
        filtered_exact = outcome.actions == scene.gold_actions
        unfiltered_hits += unfiltered_exact
        filtered_hits += filtered_exact
        rows.append(
            {
                "episode": i,
                "target": list(scene.target),
                "predicted_target": list(target),
                "unfiltered_exact": unfiltered_exact,
                "filtered_exact": filtered_exact,
                "filtered_consistent": outcome.consistent,
                "evaluations": outcome.evaluations,
                "fallback": outcome.fallback,
            }
        )
    n = len(scenes)
    summary = {
        "episodes": n,
        "unfiltered_accuracy": round(unfiltered_hits / n, 4) if n else 0.0,
        "filtered_accuracy": round(filtered_hits / n, 4) if n else 0.0,
        "gain": round((filtered_hits - unfiltered_hits) / n, 4) if n else 0.0,
        "budget": args.budget,
    }
    if args.out:
        _write_jsonl(args.out, rows)
        _write_json(args.out + ".summary.json", summary)
        config = {
            "scenes": args.scenes,
            "proposer": args.proposer,
            "budget": args.budget,
            "target": args.target,
            "seed": args.seed,
            "out": args.out,
        }
        _write_manifest("gscan-filter", config, [args.out, args.out + ".summary.json"])
    print(f"unfiltered accuracy: {summary['unfiltered_accuracy']:.4f}")
    print(f"filtered accuracy:   {summary['filtered_accuracy']:.4f}")
    _dump(summary)
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    with open(args.manifest, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    return main(_manifest_argv(manifest))


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    import os

    parser = argparse.ArgumentParser(
        prog="dualsys",
        description="Dual-system generation and consistency checking",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    default_endpoint = os.environ.get(ENDPOINT_ENV, "")

    def add_generation_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--stories", type=int, default=50)
        p.add_argument("--budget", type=int, default=10)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--proposer", choices=["template", "http"], default="template")
        p.add_argument("--max-lines", type=int, default=12)
        p.add_argument("--fault-rate", type=float, default=1.0)
        p.add_argument("--endpoint", type=str, default=default_endpoint)
        p.add_argument("--timeout", type=float, default=10.0)
        p.add_argument("--out", type=str, required=True)

    p = sub.add_parser("generate-babi", help="Generate dual-system stories (people/objects/places)")
    add_generation_flags(p)
    p.add_argument("--question-prob", type=float, default=0.2)
    p.set_defaults(func=_cmd_generate_babi)

    p = sub.add_parser("generate-clutrr", help="Generate dual-system kinship stories")
    add_generation_flags(p)
    p.add_argument("--filler-prob", type=float, default=0.15)
    p.set_defaults(func=_cmd_generate_clutrr)

    p = sub.add_parser("simulate-babi", help="Emit ground-truth stories with gold answers")
    p.add_argument("--stories", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--question-prob", type=float, default=0.25)
    p.add_argument("--min-lines", type=int, default=2)
    p.add_argument("--max-lines", type=int, default=10)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=_cmd_simulate_babi)

    p = sub.add_parser("qa-babi", help="Answer location questions in a story file")
    p.add_argument("--in", dest="input", type=str, required=True)
    p.add_argument("--out", type=str, default="")
    p.set_defaults(func=_cmd_qa_babi)

    p = sub.add_parser("check-clutrr", help="Check kinship stories line by line")
    p.add_argument("--in", dest="input", type=str, required=True)
    p.add_argument("--out", type=str, default="")
    p.set_defaults(func=_cmd_check_clutrr)

    p = sub.add_parser("gscan-scenes", help="Generate random gridworld scenes")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=6)
    p.add_argument("--objects", type=int, default=4)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=_cmd_gscan_scenes)

    p = sub.add_parser("gscan-filter", help="Run budgeted consistency filtering over scenes")
    p.add_argument("--scenes", type=str, required=True)
    p.add_argument("--proposer", type=str, default="noisy:0.3",
                   help="oracle | noisy:EPS | scripted")
    p.add_argument("--budget", type=int, default=50)
    p.add_argument("--target", type=str, default="oracle", help="oracle | noisy:P")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default="")
    p.set_defaults(func=_cmd_gscan_filter)

    p = sub.add_parser("replay", help="Re-run a recorded manifest byte-identically")
    p.add_argument("--manifest", type=str, required=True)
    p.set_defaults(func=_cmd_replay)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ProposalSourceFailure as exc:
        print(f"error: proposal source failed: {exc.cause}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
