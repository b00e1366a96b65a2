"""End-to-end curation: sample, enrich, filter, synthesize, persist."""

from __future__ import annotations

import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fsmforge.core import AbstractGraph, SemanticFsm, StateMapping, Tier
from fsmforge.emit import Encoding, emit_rtl, emit_testbench
from fsmforge.errors import FsmError
from fsmforge.rng import derive_seed
from fsmforge.semantics import ProviderError, ReconstructionError, SpecDocument
from fsmforge.sim import Trace, coverage, run
from fsmforge.stimgen import coverage_sidecar, feasible_edges, plan
from fsmforge.topo import preset_config, sample_graph
from fsmforge.verify import MappingError, check_equivalence, check_isomorphism
from fsmforge.yaml_io import parse_fsm_yaml, serialize_fsm_yaml

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
ATTEMPT_FACTOR = 4
PROBLEM_FILES = ("problem.yaml", "spec.md", "ref.sv", "tb.sv", "golden.csv", "meta.json")
_TIER_ORDER = {t: i for i, t in enumerate(Tier)}


class CurationIncomplete(FsmError):
    """Attempt cap reached before enough problems were accepted."""

    def __init__(self, report: CurationReport):
        self.report = report
        super().__init__(
            f"accepted {report.accepted} of {report.requested} after {report.attempted} attempts"
        )


class CollisionError(FsmError):
    pass


class IntegrityError(FsmError):
    pass


@dataclass
class ProblemRecord:
    id: str
    tier: Tier
    seed: int
    fsm: SemanticFsm
    mapping: StateMapping
    spec: SpecDocument
    golden: Trace
    stats: dict
    verdicts: dict
    graph: AbstractGraph | None = None
    story: str = ""
    coverage_json: str = ""
    provider: str = "mock"
    provenance: list = field(default_factory=list)


@dataclass
class TierCounts:
    attempted: int = 0
    iso_passed: int = 0
    feasible_passed: int = 0
    equiv_passed: int = 0
    accepted: int = 0

    def to_json_obj(self):
        return dict(self.__dict__)


@dataclass
class CurationReport:
    requested: int = 0
    attempted: int = 0
    iso_passed: int = 0
    feasible_passed: int = 0
    equiv_passed: int = 0
    accepted: int = 0
    per_tier: dict[str, TierCounts] = field(default_factory=dict)
    discards: dict[str, int] = field(default_factory=dict)

    def count(self, tier: Tier, stage: str):
        setattr(self, stage, getattr(self, stage) + 1)
        tc = self.per_tier.setdefault(tier.value, TierCounts())
        setattr(tc, stage, getattr(tc, stage) + 1)

    def merge(self, other: CurationReport) -> None:
        for name in ("requested", "attempted", "iso_passed", "feasible_passed", "equiv_passed", "accepted"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        for k, tc in other.per_tier.items():
            mine = self.per_tier.setdefault(k, TierCounts())
            for name, v in tc.__dict__.items():
                setattr(mine, name, getattr(mine, name) + v)
        for k, v in other.discards.items():
            self.discards[k] = self.discards.get(k, 0) + v

    def to_json_obj(self):
        d = {k: v for k, v in self.__dict__.items() if k not in ("per_tier",)}
        d["per_tier"] = {k: v.to_json_obj() for k, v in sorted(self.per_tier.items())}
        return d


def problem_id(tier: Tier, seed: int) -> str:
    return f"{tier.value}-{seed}"


@dataclass
class _Attempt:
    seed: int
    reached: list[str]
    record: ProblemRecord | None = None
    discard: str | None = None


def _attempt(tier: Tier, seed: int, provider, tail_factor: int = 2) -> _Attempt:
    reached: list[str] = []
    provenance: list = []
    try:
        graph, _ = sample_graph(preset_config(tier, seed))
        lo, hi = tier.bounds
        if not lo <= len(graph.states) <= hi:
            raise AssertionError(f"preset produced {len(graph.states)} states outside {tier.value}")
        fsm, mapping, story = provider.assign_semantics(graph, seed, provenance=provenance)
        try:
            iso = check_isomorphism(graph, fsm, mapping)
        except MappingError as e:
            return _Attempt(seed, reached, discard=f"iso: {e}")
        if not iso.ok:
            return _Attempt(seed, reached, discard=f"iso: {iso.violation}")
        reached.append("iso_passed")

        feasible = feasible_edges(fsm)
        p = plan(fsm, derive_seed(seed, 2), tail_factor * len(fsm.edge_list()))
        _, taken = coverage(fsm, p.valuations())
        if feasible != set(fsm.edge_list()) or p.unreached or taken != feasible:
            return _Attempt(seed, reached, discard="feasible: uncoverable transitions")
        reached.append("feasible_passed")
        golden = run(fsm, p.valuations())

        spec = provider.spec_from_fsm(fsm, provenance=provenance)
        try:
            rebuilt = provider.fsm_from_spec(spec, mapping, fsm.interface(), provenance=provenance)
            verdict = check_equivalence(fsm, rebuilt)
        except (ReconstructionError, FsmError) as e:
            return _Attempt(seed, reached, discard=f"equiv: {e}")
        if not verdict.equivalent:
            return _Attempt(seed, reached, discard=f"equiv: diverges at cycle {verdict.mismatch_cycle}")
        reached.append("equiv_passed")
    except ProviderError as e:
        return _Attempt(seed, reached, discard=f"provider {e.code}: {e}")

    rtl = emit_rtl(fsm, Encoding.ONEHOT)
    stats = {
        "n_states": len(fsm.states),
        "n_edges": len(fsm.explicit_edges()),
        "n_phases": len(graph.phases),
        "spec_words": spec.word_count,
        "rtl_lines": rtl.count("\n"),
    }
    record = ProblemRecord(
        id=problem_id(tier, seed),
        tier=tier,
        seed=seed,
        fsm=fsm,
        mapping=mapping,
        spec=spec,
        golden=golden,
        stats=stats,
        verdicts={"iso": True, "equiv": True, "feasible": True},
        graph=graph,
        story=story,
        coverage_json=coverage_sidecar(fsm, p),
        provider=getattr(provider, "name", type(provider).__name__),
        provenance=provenance,
    )
    return _Attempt(seed, reached, record=record)


def curate(
    tier: Tier,
    count: int,
    base_seed: int,
    provider,
    out_dir: str | os.PathLike,
    jobs: int | None = None,
    attempt_factor: int = ATTEMPT_FACTOR,
    tail_factor: int = 2,
) -> CurationReport:
    """Generate ``count`` verified problems for one tier under ``out_dir``.

    Attempt i uses seed ``base_seed + i``. Attempts may run concurrently, but
    results are consumed strictly in attempt order, so the accepted set and
    every counter depend only on the arguments.
    """
    root = Path(out_dir)
    report = CurationReport(requested=count)
    cap = attempt_factor * count
    jobs = max(1, jobs or os.cpu_count() or 1)
    next_index = 0
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        while report.accepted < count and next_index < cap:
            batch = range(next_index, min(cap, next_index + max(jobs, count - report.accepted)))
            next_index = batch.stop
            futures = [
                pool.submit(_attempt, tier, (base_seed + i) % (1 << 64), provider, tail_factor)
                for i in batch
            ]
            for fut in futures:
                if report.accepted >= count:
                    fut.cancel()
                    continue
                att = fut.result()
                report.count(tier, "attempted")
                for stage in att.reached:
                    report.count(tier, stage)
                if att.record is None:
                    kind = att.discard.split(":", 1)[0]
                    report.discards[kind] = report.discards.get(kind, 0) + 1
                    log.info("discarded seed %d: %s", att.seed, att.discard)
                    continue
                persist(att.record, root)
                report.count(tier, "accepted")
    if report.accepted < count:
        raise CurationIncomplete(report)
    return report


# --------------------------------------------------------------------------
# On-disk layout

_manifest_lock = threading.Lock()


def problem_dir(root: Path, tier: Tier, pid: str) -> Path:
    return Path(root) / "problems" / tier.value / pid


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def persist(rec: ProblemRecord, root: str | os.PathLike) -> Path:
    if not all(rec.verdicts.get(k) for k in ("iso", "equiv", "feasible")):
        raise FsmError(f"refusing to persist {rec.id}: verdicts {rec.verdicts}")
    root = Path(root)
    d = problem_dir(root, rec.tier, rec.id)
    if d.exists():
        raise CollisionError(f"problem {rec.id} already exists at {d}")
    d.mkdir(parents=True)

    provenance_ref = None
    if rec.provenance:
        prov = root / "provenance" / f"{rec.id}.jsonl"
        prov.parent.mkdir(parents=True, exist_ok=True)
        prov.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in rec.provenance))
        provenance_ref = str(prov.relative_to(root))

    (d / "problem.yaml").write_text(serialize_fsm_yaml(rec.fsm))
    (d / "spec.md").write_text(rec.spec.to_markdown())
    (d / "ref.sv").write_text(emit_rtl(rec.fsm, Encoding.ONEHOT))
    (d / "tb.sv").write_text(emit_testbench(rec.fsm, rec.golden))
    (d / "golden.csv").write_text(rec.golden.to_csv())
    meta = {
        "id": rec.id,
        "tier": rec.tier.value,
        "seed": rec.seed,
        "stats": rec.stats,
        "verdicts": rec.verdicts,
        "mapping": rec.mapping.to_json_obj(),
        "graph": json.loads(rec.graph.to_json()) if rec.graph else None,
        "story": rec.story,
        "coverage": json.loads(rec.coverage_json) if rec.coverage_json else None,
        "provenance": {"provider": rec.provider, "log": provenance_ref},
    }
    (d / "meta.json").write_text(_dump(meta))

    with _manifest_lock:
        manifest = read_manifest(root) if (root / "manifest.json").exists() else {
            "version": MANIFEST_VERSION,
            "problems": [],
        }
        manifest["problems"] = [p for p in manifest["problems"] if p["id"] != rec.id]
        manifest["problems"].append({"id": rec.id, "tier": rec.tier.value, **rec.stats, "seed": rec.seed})
        manifest["problems"].sort(key=lambda p: (_TIER_ORDER[Tier(p["tier"])], p["seed"], p["id"]))
        (root / "manifest.json").write_text(_dump(manifest))
    return d


_MANIFEST_KEYS = ("id", "tier", "n_states", "n_edges", "n_phases", "spec_words", "rtl_lines", "seed")


def read_manifest(root: str | os.PathLike) -> dict:
    path = Path(root) / "manifest.json"
    try:
        manifest = json.loads(path.read_text())
    except FileNotFoundError:
        raise IntegrityError(f"no manifest at {path}") from None
    except json.JSONDecodeError as e:
        raise IntegrityError(f"manifest is not valid JSON: {e}") from None
    if not isinstance(manifest, dict) or manifest.get("version") != MANIFEST_VERSION:
        raise IntegrityError("manifest has missing or unsupported version")
    problems = manifest.get("problems")
    if not isinstance(problems, list):
        raise IntegrityError("manifest lacks a problems list")
    for p in problems:
        if not isinstance(p, dict) or any(k not in p for k in _MANIFEST_KEYS):
            raise IntegrityError(f"manifest entry is incomplete: {p}")
        try:
            Tier(p["tier"])
        except ValueError:
            raise IntegrityError(f"manifest entry has unknown tier {p['tier']!r}") from None
    return manifest


def load_problem(path: str | os.PathLike) -> ProblemRecord:
    d = Path(path)
    meta = json.loads((d / "meta.json").read_text())
    fsm = parse_fsm_yaml((d / "problem.yaml").read_text())
    golden = Trace.from_csv((d / "golden.csv").read_text(), fsm.inputs, list(fsm.outputs))
    spec = SpecDocument.from_markdown((d / "spec.md").read_text())
    graph = AbstractGraph.from_json(json.dumps(meta["graph"])) if meta.get("graph") else None
    return ProblemRecord(
        id=meta["id"],
        tier=Tier(meta["tier"]),
        seed=meta["seed"],
        fsm=fsm,
        mapping=StateMapping.from_json_obj(meta["mapping"]),
        spec=spec,
        golden=golden,
        stats=meta["stats"],
        verdicts=meta["verdicts"],
        graph=graph,
        story=meta.get("story", ""),
        coverage_json=json.dumps(meta["coverage"], indent=2) + "\n" if meta.get("coverage") else "",
        provider=meta.get("provenance", {}).get("provider", ""),
    )


def iter_problems(root: str | os.PathLike):
    """(manifest entry, problem directory) pairs in manifest order."""
    root = Path(root)
    for entry in read_manifest(root)["problems"]:
        yield entry, problem_dir(root, Tier(entry["tier"]), entry["id"])


def dataset_stats(root: str | os.PathLike) -> list[dict]:
    """Per-tier count, state range and mean complexity columns."""
    root = Path(root)
    manifest = read_manifest(root)
    listed = {(p["tier"], p["id"]) for p in manifest["problems"]}
    on_disk = set()
    base = root / "problems"
    if base.exists():
        for tdir in base.iterdir():
            for pdir in tdir.iterdir():
                on_disk.add((tdir.name, pdir.name))
    if listed != on_disk:
        raise IntegrityError(
            f"manifest and problem directories disagree: {sorted(listed ^ on_disk)[:5]}"
        )
    rows = []
    for tier in Tier:
        ps = [p for p in manifest["problems"] if p["tier"] == tier.value]
        if not ps:
            continue

        def mean(key):
            return sum(p[key] for p in ps) / len(ps)

        rows.append(
            {
                "tier": tier.value,
                "count": len(ps),
                "min_states": min(p["n_states"] for p in ps),
                "max_states": max(p["n_states"] for p in ps),
                "avg_edges": mean("n_edges"),
                "avg_phases": mean("n_phases"),
                "avg_spec_words": mean("spec_words"),
                "avg_rtl_lines": mean("rtl_lines"),
            }
        )
    return rows


def format_stats(rows: list[dict]) -> str:
    head = f"{'Tier':<8}{'Count':>6}{'States':>10}{'Edges':>9}{'Phases':>8}{'Words':>9}{'Lines':>8}"
    out = [head, "-" * len(head)]
    for r in rows:
        out.append(
            f"{r['tier']:<8}{r['count']:>6}{str(r['min_states']) + '-' + str(r['max_states']):>10}"
            f"{r['avg_edges']:>9.2f}{r['avg_phases']:>8.2f}{r['avg_spec_words']:>9.1f}{r['avg_rtl_lines']:>8.1f}"
        )
    return "\n".join(out)
