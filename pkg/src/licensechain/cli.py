"""Command-line entry point.

Subcommands: extract (license text -> profile documents), check (graph +
profiles -> conflict report), scan (source tree -> graph records), snowball
(model seeds -> upstream closure records), mutate (benchmark bundles),
evaluate (predictions vs truth -> metrics), report (render documents as
tables). Logging goes to stderr; data goes to files or stdout only.

Exit codes: 0 success (check: no conflicts), 1 conflicts found (check
only), 2 usage or total operational failure, 3 partial failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import bundled
from .agent import ExtractionFailed, AgentTransportError, run_agent_pipeline
from .benchmark import load_collection, mutate_collection, write_collection, write_mutant_collection
from .endpoint import AgentEndpointConfig, HttpChatEndpoint, ScriptedChatEndpoint
from .evalkit import Averaging, Scope, score_collection
from .graph import (
    MissingLicensePolicy,
    ProfileLookupError,
    build_graph,
    read_records,
    scan_conflicts,
    snowball_closure,
    graph_records,
    write_records,
    NodeKind,
)
from .hub import ArtifactKind, CachingHub, FixtureHub, HttpHub, validate_identifiers
from .model import (
    NOT_FOUND,
    LicenseProfile,
    ProfileSource,
    complete_profile,
    all_defaults_profile,
    dump_json_document,
    load_profile,
    load_taxonomy,
    profile_to_document,
    is_sentinel,
)
from .report import render_conflict_table, render_metrics_table
from .rules import extract_rules
from .scanner import load_signature_catalog, scan_source_tree
from .templates import MatchKind, TemplateCatalog, match_template

log = logging.getLogger("licensechain")

EXIT_OK = 0
EXIT_CONFLICTS = 1
EXIT_ERROR = 2
EXIT_PARTIAL = 3


def _taxonomy(args):
    if getattr(args, "taxonomy", None):
        return load_taxonomy(args.taxonomy)
    return bundled.bundled_taxonomy()


def _template_catalog(args) -> TemplateCatalog:
    if getattr(args, "templates", None):
        return TemplateCatalog.from_directory(args.templates)
    return bundled.bundled_template_catalog()


def _load_profile_store(args) -> dict[str, LicenseProfile]:
    store: dict[str, LicenseProfile] = {}
    if not getattr(args, "no_bundled", False):
        store.update(bundled.bundled_profiles())
    for directory in getattr(args, "profiles", None) or ():
        for path in sorted(Path(directory).glob("*.json")):
            profile = load_profile(path)
            store[profile.license_id] = profile
    return store


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------


def _template_route_profile(text, catalog, store, taxonomy) -> LicenseProfile:
    match = match_template(text, catalog)
    license_id = match.license_id
    if match.kind is MatchKind.EXACT and license_id in store:
        known = store[license_id]
        profile = LicenseProfile(
            license_id=license_id,
            assignments=known.assignments,
            source=ProfileSource.TEMPLATE_MATCH,
        )
        return complete_profile(profile, taxonomy)
    if match.kind is MatchKind.EXACT:
        log.warning("template %s matched but has no ground-truth profile; defaults used", license_id)
    return all_defaults_profile(license_id, taxonomy)


def cmd_extract(args) -> int:
    inputs = [Path(p) for p in args.inputs]
    if not inputs:
        log.error("no input files")
        return EXIT_ERROR
    missing = [p for p in inputs if not p.exists()]
    if missing:
        log.error("missing inputs: %s", ", ".join(map(str, missing)))
        return EXIT_ERROR
    taxonomy = _taxonomy(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    endpoint = None
    if args.route == "agent":
        if args.offline:
            if not args.endpoint_fixtures:
                log.error("--offline agent extraction needs --endpoint-fixtures")
                return EXIT_ERROR
            endpoint = ScriptedChatEndpoint(Path(args.endpoint_fixtures))
            model = args.model or "scripted"
        else:
            if not args.endpoint_url or not args.model:
                log.error("agent route needs --endpoint-url and --model (or --offline with fixtures)")
                return EXIT_ERROR
            config = AgentEndpointConfig(
                base_url=args.endpoint_url,
                model=args.model,
                timeout=args.timeout,
                temperature=args.temperature,
            )
            endpoint = HttpChatEndpoint(config)
            model = args.model
    catalog = _template_catalog(args) if args.route == "template" else None
    store = _load_profile_store(args) if args.route == "template" else {}

    def extract_one(path: Path) -> tuple[Path, LicenseProfile]:
        text = path.read_text(encoding="utf-8")
        license_id = path.stem
        if args.route == "template":
            profile = _template_route_profile(text, catalog, store, taxonomy)
        elif args.route == "rules":
            partial = extract_rules(text, taxonomy)
            profile = complete_profile(
                LicenseProfile(license_id=license_id, assignments=partial.assignments,
                               source=ProfileSource.EXTRACTED),
                taxonomy,
            )
        else:
            result = run_agent_pipeline(
                text, taxonomy, endpoint, model, temperature=args.temperature, license_id=license_id
            )
            log.info("%s: rounds=%d consistency=%s", path.name, result.rounds_used, result.consistency.value)
            profile = result.profile
        return path, profile

    failures = 0
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        for path, outcome in zip(inputs, pool.map(lambda p: _guard(extract_one, p), inputs)):
            if isinstance(outcome, Exception):
                failures += 1
                log.error("%s: %s", path, outcome)
                continue
            _, profile = outcome
            dump_json_document(profile_to_document(profile), out_dir / f"{path.stem}.json")
    log.info("extracted %d/%d profiles (route=%s)", len(inputs) - failures, len(inputs), args.route)
    if failures == len(inputs):
        return EXIT_ERROR
    if failures:
        return EXIT_PARTIAL
    return EXIT_OK


def _guard(fn, *args):
    try:
        return fn(*args)
    except (OSError, ValueError, ExtractionFailed, AgentTransportError, Exception) as exc:
        return exc


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    taxonomy = _taxonomy(args)
    records = []
    for path in args.graphs:
        records.extend(read_records(path))
    graph = build_graph(records)
    for diagnostic in graph.diagnostics:
        log.warning("%s", diagnostic)
    store = {
        license_id: complete_profile(profile, taxonomy)
        for license_id, profile in _load_profile_store(args).items()
    }
    policy = MissingLicensePolicy.SKIP if args.policy == "skip" else MissingLicensePolicy.STRICT
    lenient = args.policy == "lenient"
    try:
        report = scan_conflicts(graph, store, taxonomy, policy=policy, lenient=lenient)
    except ProfileLookupError as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    document = report.to_document()
    if args.out:
        dump_json_document(document, args.out)
        log.info("report written to %s", args.out)
    if args.table or not args.out:
        print(render_conflict_table(document))
    for diagnostic in report.diagnostics:
        log.warning("%s", diagnostic)
    return EXIT_CONFLICTS if report.chains_conflicted else EXIT_OK


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

_LICENSE_FILENAMES = ("license", "license.txt", "license.md", "copying", "copying.txt")


def _repo_license_text(root: Path) -> str | None:
    candidates = sorted(
        (p for p in root.iterdir() if p.is_file() and p.name.lower() in _LICENSE_FILENAMES),
        key=lambda p: p.name.lower(),
    )
    if not candidates:
        return None
    return candidates[0].read_text(encoding="utf-8")


def _make_hub(args):
    if args.hub_dir:
        return CachingHub(FixtureHub(Path(args.hub_dir)))
    if args.hub_url:
        if args.offline:
            log.error("--offline forbids --hub-url")
            return None
        return CachingHub(HttpHub(args.hub_url))
    return None


def cmd_scan(args) -> int:
    signatures = (
        load_signature_catalog(args.signatures) if args.signatures else bundled.bundled_signatures()
    )
    catalog = _template_catalog(args)
    hub = _make_hub(args)
    if hub is None and args.hub_url and not args.offline:
        return EXIT_ERROR
    if hub is None and not args.no_validate:
        log.error("scan needs --hub-dir or --hub-url (or --no-validate)")
        return EXIT_ERROR
    records: list[dict] = []
    scannable = 0
    for root_arg in args.roots:
        root = Path(root_arg)
        if not root.is_dir():
            log.error("not a directory: %s", root)
            continue
        repo_id = args.repo_prefix + root.name
        license_text = _repo_license_text(root)
        license_id = match_template(license_text, catalog).license_id
        result = scan_source_tree(root, signatures)
        scannable += result.scanned_files - len(result.diagnostics)
        for diagnostic in result.diagnostics:
            log.warning("%s: %s", repo_id, diagnostic)
        records.append(
            {"type": "node", "id": repo_id, "kind": NodeKind.OSS_REPO.value,
             "license_id": license_id, "metadata": {}}
        )
        identifiers = sorted({f.identifier for f in result.findings if f.identifier})
        unresolved = sum(1 for f in result.findings if not f.identifier)
        if unresolved:
            log.warning("%s: %d call sites with unresolved identifiers", repo_id, unresolved)
        if hub is not None:
            partition = validate_identifiers(identifiers, hub, ArtifactKind.MODEL)
            for rejected in partition.invalid:
                log.warning("%s: identifier %r not found on hub, dropped", repo_id, rejected)
            for pending in partition.unverifiable:
                log.warning("%s: identifier %r unverifiable, dropped", repo_id, pending)
            identifiers = list(partition.valid)
        if not identifiers and result.matched_files:
            log.info("%s: imports matched but no resolvable model invocations", repo_id)
        for model_id in identifiers:
            records.append(
                {"type": "node", "id": model_id, "kind": NodeKind.LLM.value,
                 "license_id": NOT_FOUND, "metadata": {}}
            )
            records.append(
                {"type": "edge", "from": repo_id, "to": model_id,
                 "kind": "uses_model"}
            )
    if scannable == 0:
        log.error("no scannable files under %s", ", ".join(args.roots))
        return EXIT_ERROR
    write_records(records, args.out)
    log.info("wrote %d records to %s", len(records), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# snowball
# ---------------------------------------------------------------------------


def cmd_snowball(args) -> int:
    seeds = list(args.seeds)
    if args.seeds_from:
        for record in read_records(args.seeds_from):
            if record.get("type", "node") == "node" and record.get("kind") == NodeKind.LLM.value:
                seeds.append(record["id"])
    seeds = sorted(set(seeds))
    if not seeds:
        log.error("no seed model ids")
        return EXIT_ERROR
    hub = _make_hub(args)
    if hub is None:
        log.error("snowball needs --hub-dir or --hub-url")
        return EXIT_ERROR
    graph = snowball_closure(seeds, hub)
    for diagnostic in graph.diagnostics:
        log.warning("%s", diagnostic)
    write_records(graph_records(graph), args.out)
    log.info("snowballed %d seeds into %d nodes / %d edges", len(seeds), len(graph.nodes), len(graph.edges))
    return EXIT_OK


# ---------------------------------------------------------------------------
# mutate / evaluate / report
# ---------------------------------------------------------------------------


def cmd_mutate(args) -> int:
    out_dir = Path(args.out)
    cues = bundled.bundled_cue_table() if not args.cues else tuple(__import__("licensechain.benchmark", fromlist=["load_cue_table"]).load_cue_table(args.cues))
    jobs = []
    if args.base:
        jobs.append((Path(args.base).name, load_collection(args.base)))
    for name in args.collections:
        jobs.append((name, bundled.bundled_collection_entries(name)))
    if not jobs:
        log.error("nothing to mutate: pass --collection and/or --base")
        return EXIT_ERROR
    for name, entries in jobs:
        mutants, manifest = mutate_collection(entries, cues=cues)
        write_collection(out_dir / name, entries)
        write_mutant_collection(out_dir / f"{name}-Mut", mutants, manifest)
        declared = sum(len(e.profile.declared()) for e in entries)
        print(
            f"{name}: {len(entries)} licenses, {declared} declared terms -> "
            f"{name}-Mut: {len(mutants)} mutants"
        )
    return EXIT_OK


def _collection_pairs(pred_dir: Path, truth_dir: Path, taxonomy):
    pairs = []
    truth_paths = sorted(truth_dir.glob("*.json"))
    truth_paths = [p for p in truth_paths if p.name != "manifest.json"]
    if not truth_paths:
        raise FileNotFoundError(f"no truth profiles under {truth_dir}")
    for truth_path in truth_paths:
        pred_path = pred_dir / truth_path.name
        if not pred_path.exists():
            raise FileNotFoundError(f"missing prediction for {truth_path.name}: {pred_path}")
        truth = complete_profile(load_profile(truth_path), taxonomy)
        pairs.append((load_profile(pred_path), truth))
    return pairs


def cmd_evaluate(args) -> int:
    taxonomy = _taxonomy(args)
    scope = Scope.ALL_TERMS if args.scope == "all" else Scope.DECLARED_ONLY
    averaging = Averaging.MACRO if args.macro else Averaging.MICRO
    try:
        pairs = _collection_pairs(Path(args.pred), Path(args.truth), taxonomy)
        metrics = score_collection(pairs, scope, averaging)
    except (FileNotFoundError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    collection = args.collection or Path(args.truth).name
    document = {"approaches": {}, "collections": []}
    out_path = Path(args.out) if args.out else None
    if out_path and out_path.exists() and args.append:
        document = json.loads(out_path.read_text(encoding="utf-8"))
    document["approaches"].setdefault(args.approach, {})[collection] = metrics.to_document()
    collections = document.get("collections", [])
    if collection not in collections:
        collections.append(collection)
    document["collections"] = collections
    if out_path:
        dump_json_document(document, out_path)
        log.info("metrics written to %s", out_path)
    if args.table or not out_path:
        print(render_metrics_table(document))
    log.info(
        "%s on %s: P=%.3f R=%.3f F1=%.3f",
        args.approach, collection, metrics.precision, metrics.recall, metrics.f1,
    )
    return EXIT_OK


def cmd_report(args) -> int:
    document = json.loads(Path(args.document).read_text(encoding="utf-8"))
    if "totals" in document:
        print(render_conflict_table(document))
    elif "approaches" in document:
        print(render_metrics_table(document))
    else:
        log.error("unrecognized document shape: %s", args.document)
        return EXIT_ERROR
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def _add_common(parser):
    parser.add_argument("--taxonomy", help="term catalog file (default: bundled 23-term catalog)")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="licensechain", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract term-attitude profiles from license texts")
    p.add_argument("inputs", nargs="*", help="license text files")
    p.add_argument("--route", choices=["template", "rules", "agent"], default="template")
    p.add_argument("--out", required=True, help="output directory for profile documents")
    p.add_argument("--templates", help="template catalog directory")
    p.add_argument("--profiles", action="append", help="extra ground-truth profile directory")
    p.add_argument("--no-bundled", action="store_true", help="ignore bundled profiles/templates store")
    p.add_argument("--offline", action="store_true")
    p.add_argument("--endpoint-url", help="chat-completion endpoint base URL")
    p.add_argument("--model", help="model name for the agent route")
    p.add_argument("--endpoint-fixtures", help="scripted endpoint fixture directory (offline agent)")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("check", help="scan a supply-chain graph for license conflicts")
    p.add_argument("graphs", nargs="+", help="graph record files (line-delimited JSON)")
    p.add_argument("--profiles", action="append", help="profile document directory")
    p.add_argument("--no-bundled", action="store_true")
    p.add_argument("--policy", choices=["strict", "skip", "lenient"], default="strict")
    p.add_argument("--out", help="conflict report output path")
    p.add_argument("--table", action="store_true", help="also print the human-readable table")
    _add_common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("scan", help="scan source trees for model-loading call sites")
    p.add_argument("roots", nargs="+", help="repository roots (one repo per directory)")
    p.add_argument("--out", required=True, help="output record file")
    p.add_argument("--signatures", help="API signature catalog (default: bundled)")
    p.add_argument("--templates", help="template catalog directory for repo LICENSE files")
    p.add_argument("--hub-dir", help="fixture hub directory for identifier validation")
    p.add_argument("--hub-url", help="live hub base URL")
    p.add_argument("--no-validate", action="store_true", help="skip hub validation of identifiers")
    p.add_argument("--repo-prefix", default="", help="prefix for repo node ids")
    p.add_argument("--offline", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_scan)

    p = sub.add_parser("snowball", help="expand model seeds to their upstream closure")
    p.add_argument("seeds", nargs="*", help="model ids")
    p.add_argument("--seeds-from", help="record file whose model nodes seed the closure")
    p.add_argument("--out", required=True)
    p.add_argument("--hub-dir", help="fixture hub directory")
    p.add_argument("--hub-url", help="live hub base URL")
    p.add_argument("--offline", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_snowball)

    p = sub.add_parser("mutate", help="generate mutated-license benchmark bundles")
    p.add_argument("--collection", dest="collections", action="append", default=[],
                   help="bundled collection name (OSS, AI); repeatable")
    p.add_argument("--base", help="external base collection directory")
    p.add_argument("--out", required=True, help="benchmark bundle output directory")
    p.add_argument("--cues", help="cue phrase table (default: bundled)")
    _add_common(p)
    p.set_defaults(fn=cmd_mutate)

    p = sub.add_parser("evaluate", help="score predicted profiles against ground truth")
    p.add_argument("--pred", required=True, help="predicted profile directory")
    p.add_argument("--truth", required=True, help="ground-truth profile directory")
    p.add_argument("--scope", choices=["declared", "all"], default="declared")
    p.add_argument("--macro", action="store_true", help="macro-average instead of micro")
    p.add_argument("--approach", default="predictions", help="row label in the metrics table")
    p.add_argument("--collection", help="column label (default: truth directory name)")
    p.add_argument("--out", help="metrics document output path")
    p.add_argument("--append", action="store_true", help="merge into an existing metrics document")
    p.add_argument("--table", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("report", help="render a report document as a table")
    p.add_argument("document", help="conflict report or metrics document (JSON)")
    _add_common(p)
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.fn(args)
    except Exception as exc:  # operational failures map to exit 2
        log.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
