"""Command-line pipeline: harvest, disambiguate, genderize, analyze, alphabetize, report.

Each stage reads only the artifacts of earlier stages from the output
directory and writes its own artifacts plus ``manifest_<stage>.json``.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from . import alphabet, analytics, disambig, gender, ingest

logger = logging.getLogger("authorship")

EXIT_OK, EXIT_FAILURE, EXIT_MISSING, EXIT_CONFIG = 0, 1, 2, 3

STAGES = ("harvest", "disambiguate", "genderize", "analyze", "alphabetize", "report")

DEFAULT_CONFIG = {
    "seed": 0,
    "paths": {
        "corpus": None,
        "issn_file": None,
        "given_names": None,
        "endings": None,
        "surname_variants": None,
        "gender_cache": None,
        "review_decisions": None,
        "output_dir": "out",
    },
    "harvest": {
        "source": "local",
        "issns": [],
        "period": None,
        "lenient": False,
        "endpoint": ingest.DEFAULT_ENDPOINT,
        "rows": 1000,
        "delay": 1.0,
    },
    "thresholds": {
        "auto_threshold": 0.8,
        "external_min_count": 10,
        "external_min_probability": 0.9,
    },
    "toggles": {
        "identity_merge": True,
        "name_order": "surname_first",
        "gender_stages": list(gender.STAGES),
        "papers_per_year": "active_years",
        "collation": "ukrainian_russian",
    },
    "analysis": {
        "n_reshuffles": 10,
        "min_papers": 2,
        "min_collab_papers": 3,
    },
}

# artifacts per stage, relative to the output directory
ARTIFACTS = {
    "harvest": ["corpus.jsonl", "skips_harvest.jsonl"],
    "disambiguate": ["authors.jsonl", "review.tsv", "skips_disambiguate.jsonl"],
    "genderize": ["labels.jsonl", "gender_summary.json"],
    "analyze": ["categories.json", "annual.json", "author_stats.jsonl", "author_aggregates.json"],
    "alphabetize": ["verdicts.jsonl", "alpha_summary.json", "skips_alphabetize.jsonl"],
    "report": ["table1.csv", "table2.csv", "fig1_annual.csv"],
}
REQUIRES = {
    "harvest": [],
    "disambiguate": ["corpus.jsonl"],
    "genderize": ["authors.jsonl"],
    "analyze": ["corpus.jsonl", "authors.jsonl", "labels.jsonl"],
    "alphabetize": ["corpus.jsonl", "authors.jsonl", "labels.jsonl"],
    "report": ["categories.json", "annual.json", "alpha_summary.json"],
}


class ConfigError(ValueError):
    pass


class MissingInputs(RuntimeError):
    def __init__(self, missing: list[str]):
        super().__init__("missing inputs: " + ", ".join(missing))
        self.missing = missing


# --------------------------------------------------------------------------
# config


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where}{key!r} must be an object")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


@dataclass
class PipelineConfig:
    data: dict
    base_dir: Path

    @classmethod
    def load(cls, path: str | None, overrides: dict | None = None) -> PipelineConfig:
        raw: dict = {}
        base = Path.cwd()
        if path:
            try:
                raw = json.loads(Path(path).read_text(encoding="utf-8"))
            except FileNotFoundError as exc:
                raise ConfigError(f"config file not found: {path}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
            if not isinstance(raw, dict):
                raise ConfigError("config must be a JSON object")
            base = Path(path).resolve().parent
        data = _merge(DEFAULT_CONFIG, raw)
        data = _merge(data, overrides or {})
        cfg = cls(data, base)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        d = self.data
        if not isinstance(d["seed"], int) or isinstance(d["seed"], bool):
            raise ConfigError("seed must be an integer")
        t = d["toggles"]
        if t["name_order"] not in ("surname_first", "given_first"):
            raise ConfigError("toggles.name_order must be surname_first or given_first")
        if t["papers_per_year"] not in ("active_years", "span"):
            raise ConfigError("toggles.papers_per_year must be active_years or span")
        if t["collation"] not in alphabet.CYRILLIC_COLLATIONS:
            raise ConfigError(f"toggles.collation must be one of {sorted(alphabet.CYRILLIC_COLLATIONS)}")
        if set(t["gender_stages"]) - set(gender.STAGES):
            raise ConfigError(f"toggles.gender_stages must be drawn from {list(gender.STAGES)}")
        if d["harvest"]["source"] not in ("local", "crossref"):
            raise ConfigError("harvest.source must be local or crossref")
        if d["harvest"]["period"] is not None:
            p = d["harvest"]["period"]
            if not (isinstance(p, list) and len(p) == 2 and all(isinstance(x, int) for x in p)):
                raise ConfigError("harvest.period must be [start_year, end_year]")
        th = d["thresholds"]
        if not 0 <= th["auto_threshold"] <= 1:
            raise ConfigError("thresholds.auto_threshold must lie in [0, 1]")
        if d["analysis"]["n_reshuffles"] < 1:
            raise ConfigError("analysis.n_reshuffles must be at least 1")

    def path(self, key: str) -> Path | None:
        value = self.data["paths"][key]
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def output_dir(self) -> Path:
        return self.path("output_dir")

    def digest(self) -> str:
        """Hash of the effective config; the output location is not part of it."""
        data = copy.deepcopy(self.data)
        data["paths"].pop("output_dir")
        blob = json.dumps(data, sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


# --------------------------------------------------------------------------
# file helpers


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write(path: Path, write) -> None:
    """Call ``write(tmp_path)`` and move the result into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        write(tmp)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_json(path: Path, obj) -> None:
    def w(tmp):
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(_jsonable(obj), fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    atomic_write(path, w)


def write_jsonl(path: Path, rows) -> None:
    def w(tmp):
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            for row in rows:
                fh.write(json.dumps(_jsonable(row), ensure_ascii=False) + "\n")
    atomic_write(path, w)


def read_json(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# --------------------------------------------------------------------------
# stages


class Stage:
    def __init__(self, name: str, cfg: PipelineConfig, jobs: int):
        self.name = name
        self.cfg = cfg
        self.jobs = jobs
        self.out = cfg.output_dir
        self.inputs: dict[str, Path] = {}

    def artifact(self, name: str) -> Path:
        return self.out / name

    def require(self, extra: dict[str, Path | None] | None = None) -> None:
        missing = []
        for name in REQUIRES[self.name]:
            p = self.artifact(name)
            self.inputs[name] = p
            if not p.exists():
                missing.append(str(p))
        for name, p in (extra or {}).items():
            if p is None:
                continue
            self.inputs[name] = p
            if not p.exists():
                missing.append(str(p))
        if missing:
            raise MissingInputs(missing)

    def manifest(self, extra: dict | None = None) -> None:
        outputs = {n: sha256_file(self.artifact(n)) for n in ARTIFACTS[self.name] if self.artifact(n).exists()}
        doc = {
            "stage": self.name,
            "tool": "authorship",
            "version": __version__,
            "seed": self.cfg.data["seed"],
            "config_sha256": self.cfg.digest(),
            "inputs": {n: sha256_file(p) for n, p in sorted(self.inputs.items())},
            "outputs": outputs,
        }
        doc.update(extra or {})
        write_json(self.artifact(f"manifest_{self.name}.json"), doc)


def _dictionary(cfg: PipelineConfig):
    path = cfg.path("given_names")
    return disambig.SynonymDictionary.from_tsv(path) if path else disambig.default_dictionary()


def run_harvest(stage: Stage) -> None:
    cfg = stage.cfg
    h = cfg.data["harvest"]
    period = tuple(h["period"]) if h["period"] else None
    issn_file = cfg.path("issn_file")
    if h["source"] == "local":
        stage.require({"corpus": cfg.path("corpus") or Path("<paths.corpus unset>"), "issn_file": issn_file})
    else:
        stage.require({"issn_file": issn_file})
    if issn_file:
        jc = ingest.JournalConfig.from_issn_file(issn_file, period)
    else:
        jc = ingest.JournalConfig(h["issns"], period)
    if h["source"] == "local":
        corpus = ingest.load_local(cfg.path("corpus"), jc, lenient=h["lenient"])
    else:
        if not jc.issn_list:
            raise ConfigError("crossref harvesting needs harvest.issns or paths.issn_file")
        corpus = ingest.fetch_remote(jc, h["endpoint"], rows=h["rows"], delay=h["delay"])
    if jc.issn_list:
        allowed = set(jc.issn_list)
        kept = [r for r in corpus.records if r.issn.upper() in allowed]
        corpus.skipped += [ingest.SkipEntry("issn_not_configured", "harvest", r.doi)
                           for r in corpus.records if r.issn.upper() not in allowed]
        corpus.records = kept
    if period:
        corpus = ingest.filter_period(corpus, period)
    atomic_write(stage.artifact("corpus.jsonl"), lambda tmp: ingest.dump_corpus(corpus, tmp))
    atomic_write(stage.artifact("skips_harvest.jsonl"), lambda tmp: ingest.dump_skips(corpus.skipped, tmp))
    stage.manifest({"records": len(corpus), "skipped": len(corpus.skipped),
                    "source": corpus.provenance.get("source") if h["source"] == "crossref" else "local"})


def _load_corpus(stage: Stage) -> ingest.Corpus:
    return ingest.load_local(stage.artifact("corpus.jsonl"))


def run_disambiguate(stage: Stage) -> None:
    cfg = stage.cfg
    stage.require({"given_names": cfg.path("given_names"), "review_decisions": cfg.path("review_decisions"),
                   "surname_variants": cfg.path("surname_variants")})
    corpus = _load_corpus(stage)
    dictionary = _dictionary(cfg)
    matcher = disambig.NameMatcher(dictionary, surname_variants_path=cfg.path("surname_variants"))
    decisions = disambig.read_review(cfg.path("review_decisions")) if cfg.path("review_decisions") else None
    policy = disambig.MergePolicy(auto_threshold=cfg.data["thresholds"]["auto_threshold"])
    skips: list = []
    mentions = disambig.build_mentions(corpus, order=cfg.data["toggles"]["name_order"], skips=skips)
    records = disambig.cluster_identical(mentions, identity_merge=cfg.data["toggles"]["identity_merge"])
    candidates = disambig.propose_merges(records, dictionary, matcher=matcher)
    merged, review = disambig.plan_merges(records, candidates, policy, decisions=decisions, matcher=matcher)
    atomic_write(stage.artifact("authors.jsonl"), lambda tmp: disambig.dump_authors(merged, tmp))
    atomic_write(stage.artifact("review.tsv"), lambda tmp: disambig.write_review(review, tmp))
    atomic_write(stage.artifact("skips_disambiguate.jsonl"), lambda tmp: ingest.dump_skips(skips, tmp))
    stage.manifest({"mentions": len(mentions), "identity_records": len(records),
                    "author_records": len(merged), "candidates": len(candidates), "review_rows": len(review)})


def run_genderize(stage: Stage) -> None:
    cfg = stage.cfg
    stage.require({"given_names": cfg.path("given_names"), "endings": cfg.path("endings")})
    records = disambig.load_authors(stage.artifact("authors.jsonl"))
    th = cfg.data["thresholds"]
    policy = gender.ExternalLookupPolicy(th["external_min_count"], th["external_min_probability"],
                                         cfg.path("gender_cache"))
    rules = gender.EndingRules.from_file(cfg.path("endings")) if cfg.path("endings") else gender.default_rules()
    labels, summary = gender.genderize_corpus(records, _dictionary(cfg), rules, policy,
                                              stages=cfg.data["toggles"]["gender_stages"])
    atomic_write(stage.artifact("labels.jsonl"), lambda tmp: gender.dump_labels(labels, tmp))
    write_json(stage.artifact("gender_summary.json"), summary)
    stage.manifest(summary["counts"])


def _authorship(stage: Stage) -> analytics.Authorship:
    corpus = _load_corpus(stage)
    records = disambig.load_authors(stage.artifact("authors.jsonl"))
    labels = gender.load_labels(stage.artifact("labels.jsonl"))
    return analytics.Authorship.build(corpus, records, labels)


def run_analyze(stage: Stage) -> None:
    cfg = stage.cfg
    stage.require()
    a = _authorship(stage)
    an = cfg.data["analysis"]
    entire = analytics.breakdown(a)[0]
    not_indexed, indexed = analytics.breakdown(a, "indexed")
    null = analytics.reshuffle_null(a, an["n_reshuffles"], cfg.data["seed"])
    write_json(stage.artifact("categories.json"), {
        "entire": entire.to_dict(), "not_indexed": not_indexed.to_dict(), "indexed": indexed.to_dict(),
        "reshuffled": null.to_dict(),
    })
    write_json(stage.artifact("annual.json"), [b.to_dict() for b in analytics.breakdown(a, "year")])
    stats, aggregates = analytics.author_stats(a, min_papers=an["min_papers"],
                                               min_collab_papers=an["min_collab_papers"],
                                               year_mode=cfg.data["toggles"]["papers_per_year"])
    write_jsonl(stage.artifact("author_stats.jsonl"), [s.to_dict() for s in stats])
    write_json(stage.artifact("author_aggregates.json"), aggregates)
    stage.manifest({"rng": null.rng, "papers": a.n_papers, "authors": len(a.author_ids)})


def _verdict_chunk(args):
    papers, order, collation = args
    return alphabet.check_corpus(papers, order=order, collation=collation)


def run_alphabetize(stage: Stage) -> None:
    cfg = stage.cfg
    stage.require()
    a = _authorship(stage)
    order = cfg.data["toggles"]["name_order"]
    collation = cfg.data["toggles"]["collation"]
    papers = a.papers
    if stage.jobs > 1 and len(papers) >= 200:
        size = math.ceil(len(papers) / stage.jobs)
        chunks = [(papers[i:i + size], order, collation) for i in range(0, len(papers), size)]
        verdicts, skips = [], []
        with ProcessPoolExecutor(max_workers=stage.jobs) as pool:
            for v, s in pool.map(_verdict_chunk, chunks):
                verdicts += v
                skips += s
    else:
        verdicts, skips = alphabet.check_corpus(papers, order=order, collation=collation)
    cats = a.category_names()
    dois = [p.doi for p in papers]
    partitions = {
        "entire": dois,
        "indexed": [p.doi for p in papers if p.indexed],
        "not_indexed": [p.doi for p in papers if not p.indexed],
        "cross_gender": [d for d, c in zip(dois, cats) if c == analytics.MIX_COLL],
        "solo_gender": [d for d, c in zip(dois, cats) if c in (analytics.F_COLL, analytics.M_COLL)],
    }
    summaries = alphabet.summarize(papers, verdicts, partitions)
    write_jsonl(stage.artifact("verdicts.jsonl"), [v.to_dict() for v in verdicts])
    write_json(stage.artifact("alpha_summary.json"), [s.to_dict() for s in summaries])
    atomic_write(stage.artifact("skips_alphabetize.jsonl"), lambda tmp: ingest.dump_skips(skips, tmp))
    stage.manifest({"verdicts": len(verdicts), "skipped": len(skips)})


def run_report(stage: Stage) -> None:
    stage.require()
    cats = read_json(stage.artifact("categories.json"))
    entire, not_indexed, indexed = (analytics.CategoryBreakdown(**cats[k])
                                    for k in ("entire", "not_indexed", "indexed"))
    null = analytics.NullModelResult(**cats["reshuffled"])
    rows = analytics.table1_rows(entire, null, not_indexed, indexed)
    atomic_write(stage.artifact("table1.csv"),
                 lambda tmp: analytics.write_csv(rows, tmp, analytics.TABLE1_COLUMNS))
    annual = [analytics.CategoryBreakdown(**d) for d in read_json(stage.artifact("annual.json"))]
    atomic_write(stage.artifact("fig1_annual.csv"),
                 lambda tmp: analytics.write_csv(analytics.annual_rows(annual), tmp))
    summaries = []
    for d in read_json(stage.artifact("alpha_summary.json")):
        d["per_n"] = {int(k): v for k, v in d["per_n"].items()}
        summaries.append(alphabet.AlphaSummary(**d))
    atomic_write(stage.artifact("table2.csv"), lambda tmp: alphabet.write_table2(summaries, tmp))
    stage.manifest()


RUNNERS = {
    "harvest": run_harvest,
    "disambiguate": run_disambiguate,
    "genderize": run_genderize,
    "analyze": run_analyze,
    "alphabetize": run_alphabetize,
    "report": run_report,
}


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="authorship", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="JSON pipeline config")
    common.add_argument("-o", "--output-dir", "--out", dest="output_dir", help="override paths.output_dir")
    common.add_argument("--seed", type=int, help="override seed")
    common.add_argument("--corpus", help="override paths.corpus (harvest input)")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    harvest = argparse.ArgumentParser(add_help=False)
    harvest.add_argument("--issn-file", help="override paths.issn_file")
    harvest.add_argument("--from-year", type=int, help="first year of the period")
    harvest.add_argument("--to-year", type=int, help="last year of the period")
    harvest.add_argument("--endpoint", help="works endpoint; implies harvest.source=crossref")
    for name in STAGES:
        parents = [common, harvest] if name == "harvest" else [common]
        sub.add_parser(name, parents=parents, help=f"run the {name} stage")
    sub.add_parser("all", parents=[common, harvest], help="run every stage in order")
    return parser


def _overrides(args) -> dict:
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    paths, harvest = {}, {}
    if args.output_dir:
        paths["output_dir"] = str(Path(args.output_dir).resolve())
    if args.corpus:
        paths["corpus"] = str(Path(args.corpus).resolve())
    if getattr(args, "issn_file", None):
        paths["issn_file"] = str(Path(args.issn_file).resolve())
    if getattr(args, "endpoint", None):
        harvest["endpoint"] = args.endpoint
        harvest["source"] = "crossref"
    years = (getattr(args, "from_year", None), getattr(args, "to_year", None))
    if any(y is not None for y in years):
        if None in years:
            raise ConfigError("--from-year and --to-year must be given together")
        harvest["period"] = list(years)
    if paths:
        overrides["paths"] = paths
    if harvest:
        overrides["harvest"] = harvest
    return overrides


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = PipelineConfig.load(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stages = STAGES if args.command == "all" else (args.command,)
    for name in stages:
        try:
            RUNNERS[name](Stage(name, cfg, max(1, args.jobs)))
        except MissingInputs as exc:
            print(f"{name}: missing required inputs:", file=sys.stderr)
            for m in exc.missing:
                print(f"  {m}", file=sys.stderr)
            return EXIT_MISSING
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except (ingest.CorpusParseError, ingest.HarvestError, disambig.ReviewFileError, ValueError) as exc:
            print(f"{name}: {exc}", file=sys.stderr)
            return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
