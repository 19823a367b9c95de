"""Command-line entry point: play, generate, evaluate, render and experiment."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from .domain import Domain, load_domain
from .kit import ParamRanges, SearchBudget, sample_params
from .level import Level, LevelError, load_level, serialize_level
from .markov import mc_generate, train
from .mcts import collect_records
from .metrics import CSV_COLUMNS, MetricsReport, evaluate_population
from .pipeline import derive_rng, generate

log = logging.getLogger("trp")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3
MODES = ("fixed", "variety")
METHODS = ("trp", "markov")
KIT_FIELDS = ("t", "s", "e", "c", "rollout_depth", "progress_gain")
BUDGET_FIELDS = ("iterations_per_move", "max_moves", "rollout_depth")


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class ExperimentConfig:
    domain: str = "dungeon"
    sources: list[str] = field(default_factory=lambda: ["level1"])
    mode: str = "fixed"
    method: str = "trp"
    population: int | None = None
    base_seed: int = 0
    out: str = "out"
    kit: dict[str, Any] = field(default_factory=dict)
    ranges: dict[str, list[Any]] = field(default_factory=dict)
    budget: dict[str, Any] = field(default_factory=dict)
    debug: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.population is not None and self.population < 1:
            raise ConfigError("population size must be >= 1")
        if not self.sources:
            raise ConfigError("at least one source level is required")
        unknown = set(self.kit) - set(KIT_FIELDS)
        unknown |= set(self.budget) - set(BUDGET_FIELDS)
        unknown |= set(self.ranges) - {"t", "s", "e"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> ExperimentConfig:
        names = set(cls.__dataclass_fields__)
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        data = dict(data)
        if isinstance(data.get("sources"), str):
            data["sources"] = [data["sources"]]
        return cls(**data)


@dataclass
class Setup:
    config: ExperimentConfig
    domain: Domain
    sources: list[Level]

    @property
    def kit(self):
        fields = dict(self.config.kit)
        return replace(self.domain.kit, **fields) if fields else self.domain.kit

    @property
    def budget(self) -> SearchBudget:
        return replace(self.domain.budget, **self.config.budget) if self.config.budget else self.domain.budget

    @property
    def ranges(self) -> ParamRanges:
        if not self.config.ranges:
            return self.domain.ranges
        base = self.domain.ranges
        merged = {k: self.config.ranges.get(k, getattr(base, k)) for k in ("t", "s", "e")}
        return ParamRanges.from_json(merged)

    @property
    def population(self) -> int:
        return self.config.population or self.domain.population


def resolve(config: ExperimentConfig, config_dir: Path | None = None) -> Setup:
    domain_ref = config.domain
    if domain_ref not in ("dungeon", "platformer") and config_dir is not None:
        domain_ref = str(config_dir / domain_ref)
    domain = load_domain(domain_ref)
    sources = []
    for ref in config.sources:
        if ref in domain.level_paths:
            sources.append(domain.load_level(ref))
        else:
            path = Path(ref)
            if not path.is_absolute() and config_dir is not None and not path.exists():
                path = config_dir / path
            sources.append(domain.prepare(load_level(path, domain.alphabet)))
    setup = Setup(config, domain, sources)
    try:
        setup.kit, setup.budget, setup.ranges  # noqa: B018  fail early on bad overrides
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return setup


# -- commands --------------------------------------------------------------

def overlay(level: Level, visited: set[tuple[int, int]], mark: str = "*") -> str:
    """Level text with every visited empty cell replaced by ``mark``."""
    empty = level.alphabet.empty
    lines = []
    for r, row in enumerate(level.rows):
        lines.append("".join(mark if (c, r) in visited and ch == empty else ch for c, ch in enumerate(row)))
    return "\n".join(lines) + "\n"


def cmd_play(setup: Setup, out: Path) -> dict[str, Any]:
    source = setup.sources[0]
    kit = setup.kit
    record = collect_records(setup.domain.world(source, kit), kit.t, setup.budget, setup.config.base_seed)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.json").write_text(record.dumps() + "\n")
    (out / "overlay.txt").write_text(overlay(source, record.visited))
    summary = {"success": record.success, "moves": len(record.path) - 1,
               "visited": len(record.visited), "deaths": record.deaths}
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return summary


def level_params(setup: Setup, seed: int) -> tuple[int, int, float]:
    kit = setup.kit
    if setup.config.mode == "variety":
        return sample_params(setup.ranges, derive_rng(seed, "params"))
    return kit.t, kit.s, kit.e


def cmd_generate(setup: Setup, out: Path) -> list[dict[str, Any]]:
    """Write ``gen_<seed>.lvl`` files and a manifest sorted by seed."""
    out.mkdir(parents=True, exist_ok=True)
    cfg = setup.config
    source = setup.sources[0]
    model = train(setup.sources) if cfg.method == "markov" else None
    manifest = []
    for i in range(setup.population):
        seed = cfg.base_seed + i
        entry: dict[str, Any] = {"seed": seed, "file": f"gen_{seed}.lvl"}
        try:
            if model is not None:
                level = mc_generate(model, source.width, source.height, derive_rng(seed, "markov"))
            else:
                t, s, e = level_params(setup, seed)
                entry.update(t=t, s=s, e=e)
                gen = generate(source, setup.kit.with_params(t, s, e), setup.budget, seed,
                               setup.domain.world, setup.domain.required.values())
                level = gen.level
                entry["playthrough_success"] = gen.record.success
                if cfg.debug:
                    _write_debug(out, seed, gen)
            (out / entry["file"]).write_text(serialize_level(level))
            entry["status"] = "ok"
        except (LevelError, ValueError, RuntimeError) as exc:
            entry["status"] = f"error: {exc}"
            log.warning("seed %d failed: %s", seed, exc)
        manifest.append(entry)
        log.info("generated seed %d (%s)", seed, entry["status"])
    manifest.sort(key=lambda e: e["seed"])
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def _write_debug(out: Path, seed: int, gen) -> None:
    (out / f"gen_{seed}.sketch.txt").write_text(gen.sketch.to_text())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["col", "row", "cause", "deaths", "relevance"])
    for cand in gen.ranked:
        writer.writerow([cand.position[0], cand.position[1], cand.cause, cand.deaths, f"{cand.relevance:.6f}"])
    (out / f"gen_{seed}.threats.csv").write_text(buf.getvalue())


def read_population(directory: Path, domain: Domain) -> list[Level]:
    if not directory.is_dir():
        raise FileNotFoundError(f"population directory {directory} does not exist")
    files = sorted(directory.glob("*.lvl"), key=_seed_order)
    if not files:
        raise FileNotFoundError(f"no .lvl files in {directory}")
    return [load_level(p, domain.alphabet) for p in files]


def _seed_order(path: Path) -> tuple[int, str]:
    stem = path.stem
    tail = stem.rsplit("_", 1)[-1]
    return (int(tail), stem) if tail.isdigit() else (sys.maxsize, stem)


def cmd_evaluate(setup: Setup, population: Path) -> MetricsReport:
    levels = read_population(population, setup.domain)
    return evaluate_population(levels, setup.sources, setup.domain.kind, _jump(setup.domain))


def _jump(domain: Domain) -> int:
    return getattr(domain.rules, "jump_height", 3)


def render(level: Level, legend: bool = True) -> str:
    """Level text, then (after a blank line) one legend line per symbol used."""
    text = serialize_level(level)
    if not legend:
        return text
    used = sorted(set(level.grid))
    lines = [f"{sym}  {', '.join(sorted(level.alphabet[sym].categories)) or 'decoration'}" for sym in used]
    return text + "\n" + "\n".join(lines) + "\n"


def parse_render(text: str) -> str:
    """Recover the level text from :func:`render` output."""
    return text.split("\n\n", 1)[0].rstrip("\n") + "\n"


def report_table(rows: Sequence[tuple[str, MetricsReport]], n_sources: int = 1) -> str:
    width = max(len(label) for label, _ in rows)
    text = "\n".join(f"{label:<{width}}  {rep.pretty()}" for label, rep in rows) + "\n"
    return text + source_note(n_sources)


def source_note(n_sources: int) -> str:
    if n_sources < 2:
        return ""
    return f"plagiarism is the maximum over {n_sources} source levels\n"


def report_csv(rows: Sequence[tuple[str, MetricsReport]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", *CSV_COLUMNS])
    for label, rep in rows:
        writer.writerow([label, *rep.row()])
    return buf.getvalue()


EXPERIMENT_ARMS = (("trp-fixed", "trp", "fixed"), ("trp-variety", "trp", "variety"), ("markov", "markov", "fixed"))


def cmd_experiment(setup: Setup, out: Path) -> list[tuple[str, MetricsReport]]:
    """Generate and evaluate TRP-Fixed, TRP-Variety and the Markov baseline."""
    rows = []
    for label, method, mode in EXPERIMENT_ARMS:
        arm = replace(setup, config=replace(setup.config, method=method, mode=mode))
        cmd_generate(arm, out / label)
        rows.append((label, cmd_evaluate(arm, out / label)))
    (out / "results.csv").write_text(report_csv(rows))
    (out / "results.txt").write_text(report_table(rows, len(setup.sources)))
    return rows


# -- argument handling -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trp", description="Tree-based reconstructive partitioning level generator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="JSON experiment config")
        p.add_argument("--domain", help="dungeon, platformer or a domain JSON path")
        p.add_argument("--source", action="append", dest="sources", help="source level name or path")
        p.add_argument("--seed", type=int, dest="base_seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--t", type=int)
        p.add_argument("--s", type=int)
        p.add_argument("--e", type=float)
        p.add_argument("--c", type=float)
        p.add_argument("--iterations", type=int, dest="iterations_per_move")
        p.add_argument("--max-moves", type=int)
        p.add_argument("--rollout-depth", type=int)

    p = sub.add_parser("play", help="play a source level and write the search trace")
    common(p)
    p = sub.add_parser("generate", help="generate a population of levels")
    common(p)
    p.add_argument("-n", "--population", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--debug", action="store_true", default=None, help="also write sketches and threat rankings")
    p = sub.add_parser("evaluate", help="compute metrics for a directory of levels")
    common(p)
    p.add_argument("population_dir", type=Path)
    p.add_argument("--csv", type=Path, help="write the report CSV here")
    p = sub.add_parser("render", help="print a level with a legend")
    p.add_argument("level", type=Path)
    p.add_argument("--domain", default="dungeon")
    p.add_argument("--no-legend", action="store_true")
    p.add_argument("--out", type=Path)
    p = sub.add_parser("experiment", help="generate and evaluate all three generators")
    common(p)
    p.add_argument("-n", "--population", type=int)
    return parser


def config_from_args(args: argparse.Namespace) -> tuple[ExperimentConfig, Path | None]:
    data: dict[str, Any] = {}
    config_dir = None
    if args.config is not None:
        data = json.loads(args.config.read_text())
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        config_dir = args.config.parent
    for name in ("domain", "sources", "base_seed", "out", "population", "mode", "method", "debug"):
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    kit = dict(data.get("kit", {}))
    for name in ("t", "s", "e", "c", "rollout_depth"):
        if getattr(args, name, None) is not None:
            kit[name] = getattr(args, name)
    budget = dict(data.get("budget", {}))
    for name in ("iterations_per_move", "max_moves", "rollout_depth"):
        if getattr(args, name, None) is not None:
            budget[name] = getattr(args, name)
    if kit:
        data["kit"] = kit
    if budget:
        data["budget"] = budget
    try:
        return ExperimentConfig.from_json(data), config_dir
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "render":
            domain = load_domain(args.domain)
            text = render(load_level(args.level, domain.alphabet), legend=not args.no_legend)
            if args.out:
                args.out.write_text(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        config, config_dir = config_from_args(args)
        setup = resolve(config, config_dir)
        out = Path(config.out)
        if args.command == "play":
            summary = cmd_play(setup, out)
            print(json.dumps(summary, sort_keys=True))
        elif args.command == "generate":
            manifest = cmd_generate(setup, out)
            ok = sum(e["status"] == "ok" for e in manifest)
            print(f"{ok}/{len(manifest)} levels written to {out}")
        elif args.command == "evaluate":
            report = cmd_evaluate(setup, args.population_dir)
            if args.csv:
                args.csv.write_text(report_csv([(args.population_dir.name, report)]))
            sys.stdout.write(report.to_csv() + report.pretty() + "\n" + source_note(len(setup.sources)))
        elif args.command == "experiment":
            rows = cmd_experiment(setup, out)
            sys.stdout.write(report_table(rows, len(setup.sources)))
        return EXIT_OK
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"trp: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, LevelError) as exc:
        print(f"trp: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"trp: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"trp: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
