"""Command-line front end.

Exit status: 0 success, 1 usage error, 2 data error, 3 failed replication
check (``similarity-matrix --replicate``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .corpus import default_lexicon, load_lexicon, read_play
from .entropy import SUPPORTS, attribute
from .errors import FwanError, InvalidParameter
from .experiments import (
    attribute_collaborative,
    intraplay,
    leave_one_out,
    load_manifest,
    parse_method,
    profile_similarity_matrix,
    profile_wans,
    train_lexicon_size,
)
from .synthetic import BENCH_LABELS, BENCH_METHODS, synth_bench
from .wan import (
    DEFAULT_ALPHA,
    DEFAULT_WINDOW,
    WanParams,
    aggregate,
    build_wan,
    load_wan,
    normalize,
    save_wan,
)

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("fwan")

# reference entropies checked by --replicate: (row profile, column profile) -> cn
REPLICATION_TARGETS = {("Chapman", "Shakespeare"): 4.7, ("Shakespeare", "Chapman"): 4.8}
REPLICATION_TOL = 0.5


@dataclass(frozen=True)
class RunConfig:
    alpha: float = DEFAULT_ALPHA
    window: int = DEFAULT_WINDOW
    lexicon: str | None = None
    words: str = "full"
    support: str = "common"
    format: str = "csv"
    seed: int = 7
    mode: str = "structured"

    def params(self) -> WanParams:
        lex = load_lexicon(self.lexicon)
        if self.words in ("full", "act", "scene"):
            lex = lex.sublexicon(self.words)
            return WanParams(lex, self.alpha, self.window)
        try:
            n = int(self.words)
        except ValueError:
            raise InvalidParameter(f"--words must be full, act, scene or a count, got {self.words!r}") from None
        return WanParams(lex, self.alpha, self.window, n)


class UsageError(Exception):
    """A flag is missing or has an unusable value (exit status 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p):
    g = p.add_argument_group("network options")
    g.add_argument("--config", help="TOML file overriding the defaults")
    g.add_argument("--alpha", type=float, help=f"discount factor (default {DEFAULT_ALPHA})")
    g.add_argument("--window", type=int, help=f"window length D (default {DEFAULT_WINDOW})")
    g.add_argument("--lexicon", help="lexicon file (default $FWAN_LEXICON or the shipped list)")
    g.add_argument("--words", help="full | act | scene | number of leading words")
    g.add_argument("--support", choices=SUPPORTS, help="entropy support (default common)")
    g.add_argument("--format", choices=("csv", "json"), help="report format (default csv)")
    g.add_argument("--seed", type=int, help="seed for synthetic generators")
    g.add_argument("--mode", choices=("structured", "flat"), help="play markup mode")
    g.add_argument("--out", "-o", help="output file (default stdout)")
    g.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fwan", description="Function-word adjacency network authorship attribution")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate-corpus", help="parse every play of a manifest and summarize")
    p.add_argument("--manifest", required=True)
    _common(p)

    p = sub.add_parser("build-profile", help="write the network of a canon or a set of plays")
    p.add_argument("--manifest")
    p.add_argument("--author", help="canon to build (default: every canon, --out is a directory)")
    p.add_argument("--plays", nargs="+", help="play files to aggregate instead of a manifest canon")
    _common(p)

    p = sub.add_parser("attribute", help="attribute a text against saved profiles")
    p.add_argument("--text", required=True)
    p.add_argument("--profiles", required=True, help="directory of .wan profile files")
    p.add_argument("--text-id")
    _common(p)

    p = sub.add_parser("similarity-matrix", help="relative entropy between every pair of profiles")
    p.add_argument("--manifest", required=True)
    p.add_argument("--asymmetry", help="also write the (H(a,b), H(b,a)) pairs as CSV here")
    p.add_argument("--replicate", action="store_true",
                   help="check the Chapman/Shakespeare entries against the published values")
    _common(p)

    p = sub.add_parser("loo", help="leave-one-out attribution of every canon play")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", action="append",
                   help="wan, delta-<manhattan|euclidean|cosine> or pca-<k>; repeatable (default wan)")
    p.add_argument("--summary", help="write an accuracy table (one column per method) here")
    _common(p)

    p = sub.add_parser("collab", help="attribute plays against solo and joint canons")
    p.add_argument("--manifest", required=True)
    p.add_argument("--play", action="append", help="play title or path (default: disputed plays)")
    _common(p)

    p = sub.add_parser("intraplay", help="act- and scene-level attribution of one play")
    p.add_argument("--manifest", required=True)
    p.add_argument("--play", required=True, help="play title or path")
    p.add_argument("--act-candidates", help="comma-separated canon names (default: all solo canons)")
    p.add_argument("--scene-candidates", help="two comma-separated canon names")
    p.add_argument("--act-words", default="act", help="act | scene | full | prefix size")
    p.add_argument("--scene-words", default="scene", help="act | scene | full | prefix size")
    _common(p)

    p = sub.add_parser("train-size", help="leave-one-out accuracy for each lexicon prefix size")
    p.add_argument("--manifest", required=True)
    p.add_argument("--granularity", choices=("play", "act", "scene"), default="play")
    p.add_argument("--method", default="wan")
    p.add_argument("--sizes", help="comma list and/or ranges like 5:100 (default 5..lexicon size)")
    _common(p)

    p = sub.add_parser("synth-bench", help="accuracy of every method on a synthetic corpus")
    p.add_argument("--authors", type=int, default=6)
    p.add_argument("--plays", type=int, default=12)
    p.add_argument("--tokens", type=int, default=20_000)
    p.add_argument("--adjacency-only", action="store_true",
                   help="authors share word frequencies and differ only in word order")
    _common(p)
    return parser


def _config(args, parser) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            doc = tomllib.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            parser.error(f"--config: {exc}")
        known = {f.name for f in fields(RunConfig)}
        unknown = set(doc) - known
        if unknown:
            parser.error(f"--config: unknown keys {sorted(unknown)}")
        cfg = replace(cfg, **{k: (str(v) if k == "words" else v) for k, v in doc.items()})
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig)
                 if getattr(args, f.name, None) is not None}
    cfg = replace(cfg, **overrides)
    if cfg.support not in SUPPORTS:
        parser.error(f"--support: expected one of {SUPPORTS}, got {cfg.support!r}")
    if cfg.format not in ("csv", "json"):
        parser.error(f"--format: expected csv or json, got {cfg.format!r}")
    try:
        cfg.params()
    except InvalidParameter as exc:
        msg = str(exc)
        flag = next((f for key, f in (("alpha", "--alpha"), ("window", "--window"), ("n_words", "--words"),
                                      ("words", "--words"), ("lexicon", "--lexicon")) if key in msg), "--lexicon")
        parser.error(f"{flag}: {msg}")
    except OSError as exc:
        parser.error(f"--lexicon: {exc}")
    return cfg


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def cn(x: float) -> str:
    if x is None:
        return ""
    if math.isinf(x) or math.isnan(x):
        return str(x)
    return f"{x:.4f}"


def _csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


REPORT_HEADER = ["text", "true_author", "rank", "candidate", "raw", "discounted", "winner", "tie"]


def _method(name):
    try:
        return parse_method(name)
    except InvalidParameter as exc:
        raise UsageError(f"--method: {exc}") from None


def report_rows(report, header=True):
    scale = 100.0 if report.unit == "nats" else 1.0
    rows = [list(REPORT_HEADER)] if header else []
    for rank, a in enumerate(report.ranking, 1):
        s = report.per_candidate[a]
        rows.append([report.text_id, report.true_author or "", rank, a, cn(scale * s.raw),
                     cn(None if s.discounted is None else scale * s.discounted),
                     report.winner, int(report.tie)])
    return rows


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_validate(args, cfg):
    manifest = load_manifest(args.manifest, cfg.mode)
    rows = [["canon", "kind", "play", "acts", "scenes", "speeches", "tokens"]]
    for kind, section in (("author", manifest.authors), ("joint", manifest.joint_canons)):
        for name, plays in section.items():
            for p in plays:
                rows.append([name, kind, p.title, len(p.acts), len(p.scenes()), len(p.speeches()), p.n_tokens()])
    for d in manifest.disputed:
        p = d.play
        rows.append(["", "disputed", p.title, len(p.acts), len(p.scenes()), len(p.speeches()), p.n_tokens()])
    if cfg.format == "json":
        keys = rows[0]
        _emit(_json([dict(zip(keys, r)) for r in rows[1:]]), args.out)
    else:
        _emit(_csv(rows), args.out)


def cmd_build_profile(args, cfg):
    params = cfg.params()
    if args.plays:
        if not args.out:
            raise UsageError("--out: required with --plays")
        plays = [read_play(f, cfg.mode) for f in args.plays]
        save_wan(aggregate([build_wan(p.units(), params) for p in plays]), args.out)
        return
    if not args.manifest:
        raise UsageError("--manifest: required unless --plays is given")
    manifest = load_manifest(args.manifest, cfg.mode)
    canons = manifest.canons(include_joint=True)
    if args.author:
        if args.author not in canons:
            raise UsageError(f"--author: no canon {args.author!r} in manifest")
        wan = profile_wans({args.author: canons[args.author]}, params)[args.author]
        if not args.out:
            raise UsageError("--out: required")
        save_wan(wan, args.out)
        return
    if not args.out:
        raise UsageError("--out: required (a directory when --author is omitted)")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, wan in profile_wans(canons, params).items():
        save_wan(wan, outdir / f"{name}.wan")


def cmd_attribute(args, cfg):
    files = sorted(Path(args.profiles).glob("*.wan"))
    if len(files) < 2:
        raise InvalidParameter(f"{args.profiles}: need at least two .wan profiles")
    wans = {f.stem: load_wan(f) for f in files}
    params = next(iter(wans.values())).params
    play = read_play(args.text, cfg.mode)
    text = normalize(build_wan(play.units(), params))
    chains = {a: normalize(w) for a, w in wans.items()}
    report = attribute(text, chains, cfg.support, average=normalize(aggregate(list(wans.values()))),
                       text_id=args.text_id or play.title)
    if cfg.format == "json":
        _emit(_json(report.to_dict()), args.out)
    else:
        _emit(_csv(report_rows(report)), args.out)


def cmd_similarity(args, cfg):
    manifest = load_manifest(args.manifest, cfg.mode)
    m = profile_similarity_matrix(manifest, cfg.params(), cfg.support)
    if cfg.format == "json":
        _emit(_json({"unit": "cn", "authors": list(m.authors),
                     "values": [[None if r == c else float(cn(m.centinats[r, c]))
                                 for c in range(len(m.authors))] for r in range(len(m.authors))]}),
              args.out)
    else:
        rows = [[""] + list(m.authors)]
        for r, a in enumerate(m.authors):
            rows.append([a] + ["" if r == c else cn(m.centinats[r, c]) for c in range(len(m.authors))])
        _emit(_csv(rows), args.out)
    if args.asymmetry:
        rows = [["first", "second", "h_first_second_cn", "h_second_first_cn"]]
        rows += [[a, b, cn(x), cn(y)] for a, b, x, y in m.asymmetry_pairs()]
        Path(args.asymmetry).write_text(_csv(rows), encoding="utf-8")
    if args.replicate:
        return replication_check(m)
    return 0


def replication_check(matrix) -> int:
    status = 0
    for (row, col), target in REPLICATION_TARGETS.items():
        if row not in matrix.authors or col not in matrix.authors:
            raise InvalidParameter(f"--replicate needs canons named {row!r} and {col!r}")
        got = matrix.get(row, col)
        ok = abs(got - target) <= REPLICATION_TOL
        status = status if ok else 3
        print(f"{'PASS' if ok else 'FAIL'} H({row}, {col}) = {got:.4f} cn, "
              f"published {target} +/- {REPLICATION_TOL}", file=sys.stderr)
    return status


def accuracy_table(accuracies: dict) -> list[list[str]]:
    methods = list(accuracies)
    return [["Method"] + [BENCH_LABELS.get(m, m) for m in methods],
            ["Accuracy"] + ["n/a" if math.isnan(accuracies[m]) else f"{100.0 * accuracies[m]:.1f}"
                            for m in methods]]


def cmd_loo(args, cfg):
    manifest = load_manifest(args.manifest, cfg.mode)
    params = cfg.params()
    methods = args.method or ["wan"]
    for m in methods:
        _method(m)
    results = {m: leave_one_out(manifest, params, m, cfg.support) for m in methods}
    if cfg.format == "json":
        _emit(_json({m: {"accuracy": r.accuracy, "skipped": r.skipped,
                         "reports": [rep.to_dict() for rep in r.reports]} for m, r in results.items()}),
              args.out)
    else:
        rows = [["method"] + REPORT_HEADER]
        for m, r in results.items():
            for rep in r.reports:
                rows += [[m] + row for row in report_rows(rep, header=False)]
        _emit(_csv(rows), args.out)
    for m, r in results.items():
        print(f"{m}: {r.n_correct}/{len(r.reports)} correct ({100 * r.accuracy:.1f}%)"
              + (f", {len(r.skipped)} skipped" if r.skipped else ""), file=sys.stderr)
    if args.summary:
        Path(args.summary).write_text(_csv(accuracy_table({m: r.accuracy for m, r in results.items()})),
                                      encoding="utf-8")


def cmd_collab(args, cfg):
    manifest = load_manifest(args.manifest, cfg.mode)
    params = cfg.params()
    plays = [manifest.find_play(ref) for ref in args.play] if args.play else [d.play for d in manifest.disputed]
    if not plays:
        raise UsageError("--play: no plays to attribute and the manifest lists no [[disputed]] plays")
    profiles = manifest.canons(include_joint=True)
    reports = [attribute_collaborative(p, profiles, params, cfg.support) for p in plays]
    if cfg.format == "json":
        _emit(_json([r.to_dict() for r in reports]), args.out)
    else:
        rows = report_rows(reports[0])[:1]
        for r in reports:
            rows += report_rows(r, header=False)
        _emit(_csv(rows), args.out)


def _words_arg(v):
    return int(v) if str(v).isdigit() else v


def cmd_intraplay(args, cfg):
    manifest = load_manifest(args.manifest, cfg.mode)
    params = cfg.params()
    play = manifest.find_play(args.play)
    disputed = next((d for d in manifest.disputed if d.play is play), None)
    canons = manifest.canons(include_joint=True)
    if args.act_candidates:
        act_names = args.act_candidates.split(",")
    elif disputed and disputed.candidates:
        act_names = list(disputed.candidates)
    else:
        act_names = list(manifest.authors)
    if args.scene_candidates:
        focal = args.scene_candidates.split(",")
    elif disputed and disputed.scene_candidates:
        focal = list(disputed.scene_candidates)
    else:
        raise UsageError("--scene-candidates: required unless the manifest gives scene_candidates")
    missing = [a for a in act_names if a not in canons]
    if missing:
        raise UsageError(f"--act-candidates: unknown canons {missing}")
    rep = intraplay(play, {a: canons[a] for a in act_names}, focal, params, cfg.support,
                    _words_arg(args.act_words), _words_arg(args.scene_words))
    c1, c2 = rep.focal
    if cfg.format == "json":
        def unit(u):
            d = u.report.to_dict()
            d.update({"act": u.act, "scene": u.scene, "n_tokens": u.n_tokens,
                      "signed_margin_cn": float(cn(u.signed_margin_cn))})
            return d
        _emit(_json({"title": rep.title, "focal": [c1, c2], "acts": [unit(u) for u in rep.acts],
                     "scenes": [unit(u) for u in rep.scenes]}), args.out)
        return
    rows = [["level", "act", "scene", "tokens", "winner", "second", f"{c1}_cn", f"{c2}_cn", "signed_margin_cn"]]
    for level, units in (("act", rep.acts), ("scene", rep.scenes)):
        for u in units:
            r = u.report
            rows.append([level, u.act, "" if u.scene is None else u.scene, u.n_tokens, r.winner,
                         r.ranking[1] if len(r.ranking) > 1 else "", cn(r.centinats(c1)), cn(r.centinats(c2)),
                         cn(u.signed_margin_cn)])
    _emit(_csv(rows), args.out)


def _sizes(text, top):
    if not text:
        return None
    out = set()
    for part in text.split(","):
        if ":" in part:
            lo, hi = part.split(":", 1)
            out.update(range(int(lo), int(hi) + 1))
        elif part.strip():
            out.add(int(part))
    return sorted(out)


def cmd_train_size(args, cfg):
    manifest = load_manifest(args.manifest, cfg.mode)
    params = cfg.params()
    _method(args.method)
    try:
        sizes = _sizes(args.sizes, params.n_words)
    except ValueError:
        raise UsageError(f"--sizes: cannot parse {args.sizes!r}") from None
    res = train_lexicon_size(manifest, params, args.granularity, args.method, sizes, cfg.support)
    if cfg.format == "json":
        _emit(_json({"granularity": res.granularity, "method": res.method, "best_n": res.best_n,
                     "best_accuracy": res.best_accuracy,
                     "curve": [{"n": n, "accuracy": a} for n, a in res.curve]}), args.out)
    else:
        _emit(_csv([["n", "accuracy"]] + [[n, f"{a:.4f}"] for n, a in res.curve]), args.out)
    print(f"best n = {res.best_n} ({100 * res.best_accuracy:.1f}%)", file=sys.stderr)


def cmd_synth_bench(args, cfg):
    params = cfg.params()
    acc, results, _, seconds = synth_bench(params, args.authors, args.plays, args.tokens, cfg.seed,
                                           adjacency_only=args.adjacency_only)
    if cfg.format == "json":
        _emit(_json({"authors": args.authors, "plays": args.plays, "tokens": args.tokens, "seed": cfg.seed,
                     "accuracy": {m: None if math.isnan(acc[m]) else acc[m]
                                  for m in BENCH_METHODS if m in acc}}), args.out)
    else:
        _emit(_csv(accuracy_table(acc)), args.out)
    log.info("synthetic benchmark finished in %.1f s", seconds)


COMMANDS = {
    "validate-corpus": cmd_validate,
    "build-profile": cmd_build_profile,
    "attribute": cmd_attribute,
    "similarity-matrix": cmd_similarity,
    "loo": cmd_loo,
    "collab": cmd_collab,
    "intraplay": cmd_intraplay,
    "train-size": cmd_train_size,
    "synth-bench": cmd_synth_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = _config(args, parser)
    try:
        status = COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fwan: error: {exc}", file=sys.stderr)
        return 1
    except FwanError as exc:
        print(f"fwan: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"fwan: error: {exc}", file=sys.stderr)
        return 2
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
