"""Corpus evaluation: manifests, engines, score reports, and gating.

A corpus is a JSONL manifest: one object per page with an ``id``, a
``raw`` capture path, a ``reference`` path, and optionally pre-computed
``enhanced`` outputs keyed by engine id. Engines are either the builtin
classical enhancer or external commands (``{in}``/``{out}`` placeholders).

Reports are deterministic: records follow manifest x engine x metric
order, summaries use exact summation, and nothing in the structured
output depends on wall clock or worker count.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
import subprocess
import shlex
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .enhance import ToneParams, enhance_document
from .imaging import Image, ImagingError, load_image, resample, save_image
from .iqa import (
    EvalTriple,
    GateReport,
    MetricDescriptor,
    MetricError,
    gate_metrics,
    score_images,
)

log = logging.getLogger(__name__)

DEFAULT_ENGINE_TIMEOUT = 300.0

#: Engine id of the builtin classical enhancer.
CLASSICAL_ENGINE_ID = "classical"


class ManifestError(Exception):
    """A manifest failed validation; ``problems`` lists every issue found."""

    def __init__(self, problems: Sequence[str]):
        super().__init__("\n".join(problems))
        self.problems = list(problems)


class EngineError(Exception):
    """An enhancement engine failed to produce a usable output."""


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    raw: Path
    reference: Path
    enhanced: dict[str, Path] = field(default_factory=dict)


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class EngineDescriptor:
    """An enhancement engine: builtin classical (command=None) or external."""

    id: str
    command: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("engine id must be non-empty")
        if self.command is not None and ("{in}" not in self.command or "{out}" not in self.command):
            raise ValueError("external engine command must contain {in} and {out} placeholders")

    @property
    def kind(self) -> str:
        return "builtin" if self.command is None else "external"


@dataclass(frozen=True)
class ScoreRecord:
    """One (entry, engine, metric) score; exactly one of value/error is set."""

    entry_id: str
    engine_id: str
    metric_id: str
    value: float | None
    error: str | None = None


@dataclass(frozen=True)
class Summary:
    """Aggregate for one (engine, metric): mean over finite scores."""

    engine_id: str
    metric_id: str
    mean: float | None
    scored: int
    infinite: int
    failed: int


@dataclass(frozen=True)
class EvaluationReport:
    corpus_size: int
    engines: tuple[EngineDescriptor, ...]
    metrics: tuple[MetricDescriptor, ...]
    records: tuple[ScoreRecord, ...]
    summaries: tuple[Summary, ...]
    tone: ToneParams


def load_manifest(path) -> Manifest:
    """Read and validate a JSONL manifest.

    Paths are resolved relative to the manifest's directory. Validation
    collects every problem (parse errors, missing keys, duplicate ids,
    missing files) before raising, so one pass reports them all.
    """
    p = Path(path)
    if not p.is_file():
        raise ManifestError(["manifest not found: %s" % p])
    base = p.parent
    problems: list[str] = []
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append("line %d: invalid JSON (%s)" % (lineno, exc.msg))
            continue
        if not isinstance(obj, dict):
            problems.append("line %d: expected an object" % lineno)
            continue
        entry_id = obj.get("id")
        if not isinstance(entry_id, str) or not entry_id:
            problems.append("line %d: missing or empty 'id'" % lineno)
            continue
        if entry_id in seen:
            problems.append("line %d: duplicate id %r" % (lineno, entry_id))
            continue
        seen.add(entry_id)
        roles: dict[str, Path] = {}
        for key in ("raw", "reference"):
            val = obj.get(key)
            if not isinstance(val, str) or not val:
                problems.append("line %d (%s): missing or empty %r" % (lineno, entry_id, key))
                continue
            rp = (base / val).resolve() if not Path(val).is_absolute() else Path(val)
            if not rp.is_file():
                problems.append("line %d (%s): %s file not found: %s" % (lineno, entry_id, key, rp))
                continue
            roles[key] = rp
        enhanced: dict[str, Path] = {}
        raw_enh = obj.get("enhanced", {})
        if not isinstance(raw_enh, dict):
            problems.append("line %d (%s): 'enhanced' must be an object" % (lineno, entry_id))
            raw_enh = {}
        for engine_id, val in raw_enh.items():
            if not isinstance(val, str) or not val:
                problems.append(
                    "line %d (%s): enhanced[%r] must be a path" % (lineno, entry_id, engine_id)
                )
                continue
            ep = (base / val).resolve() if not Path(val).is_absolute() else Path(val)
            if not ep.is_file():
                problems.append(
                    "line %d (%s): enhanced[%r] file not found: %s" % (lineno, entry_id, engine_id, ep)
                )
                continue
            enhanced[engine_id] = ep
        if len(roles) == 2:
            entries.append(
                ManifestEntry(id=entry_id, raw=roles["raw"], reference=roles["reference"], enhanced=enhanced)
            )
    if problems:
        raise ManifestError(problems)
    return Manifest(tuple(entries))


def save_manifest(manifest: Manifest, path) -> None:
    """Write a manifest as JSONL (absolute paths, sorted keys)."""
    lines = []
    for e in manifest.entries:
        rec = {
            "id": e.id,
            "raw": str(e.raw),
            "reference": str(e.reference),
        }
        if e.enhanced:
            rec["enhanced"] = {k: str(v) for k, v in sorted(e.enhanced.items())}
        lines.append(json.dumps(rec, sort_keys=True))
    Path(path).write_text("".join(ln + "\n" for ln in lines))


def _safe_name(entry_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", entry_id)


def run_engine(
    engine: EngineDescriptor,
    raw_path,
    out_path,
    tone: ToneParams | None = None,
    timeout: float = DEFAULT_ENGINE_TIMEOUT,
) -> Image:
    """Produce one enhanced page, writing it to ``out_path``.

    The builtin engine runs the classical pipeline in-process; external
    engines run their command with ``{in}``/``{out}`` substituted and must
    exit 0 and write a loadable raster.
    """
    raw_path = Path(raw_path)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if engine.command is None:
        enhanced, _ = enhance_document(load_image(raw_path), tone)
        save_image(enhanced, out_path)
        return enhanced
    tokens = [
        t.replace("{in}", str(raw_path)).replace("{out}", str(out_path))
        for t in shlex.split(engine.command)
    ]
    try:
        proc = subprocess.run(tokens, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise EngineError("engine %r timed out after %gs" % (engine.id, timeout)) from exc
    except OSError as exc:
        raise EngineError("engine %r failed to launch: %s" % (engine.id, exc)) from exc
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-1:] or [""]
        raise EngineError("engine %r exited with status %d: %s" % (engine.id, proc.returncode, tail[0]))
    if not out_path.is_file():
        raise EngineError("engine %r wrote no output at %s" % (engine.id, out_path))
    try:
        return load_image(out_path)
    except ImagingError as exc:
        raise EngineError("engine %r output unreadable: %s" % (engine.id, exc)) from exc


def _aligned(image: Image, reference: Image) -> Image:
    if image.data.shape[:2] != reference.data.shape[:2]:
        return resample(image, reference.width, reference.height)
    return image


def _entry_records(
    entry: ManifestEntry,
    engines: Sequence[EngineDescriptor],
    metrics: Sequence[MetricDescriptor],
    out_root: Path,
    tone: ToneParams | None,
) -> list[ScoreRecord]:
    records: list[ScoreRecord] = []
    try:
        reference = load_image(entry.reference)
    except ImagingError as exc:
        msg = "reference unreadable: %s" % exc
        for engine in engines:
            for metric in metrics:
                records.append(ScoreRecord(entry.id, engine.id, metric.id, None, msg))
        return records
    for engine in engines:
        enhanced: Image | None = None
        failure: str | None = None
        try:
            if engine.id in entry.enhanced:
                enhanced = load_image(entry.enhanced[engine.id])
            else:
                out_path = out_root / engine.id / ("%s.png" % _safe_name(entry.id))
                enhanced = run_engine(engine, entry.raw, out_path, tone)
        except (EngineError, ImagingError) as exc:
            failure = str(exc)
        if enhanced is not None:
            enhanced = _aligned(enhanced, reference)
        for metric in metrics:
            if failure is not None:
                records.append(ScoreRecord(entry.id, engine.id, metric.id, None, failure))
                continue
            try:
                value = score_images(metric, reference, enhanced, workdir=None)
            except (MetricError, ValueError) as exc:
                records.append(ScoreRecord(entry.id, engine.id, metric.id, None, str(exc)))
            else:
                records.append(ScoreRecord(entry.id, engine.id, metric.id, value))
    return records


def run_evaluation(
    manifest: Manifest,
    engines: Sequence[EngineDescriptor],
    metrics: Sequence[MetricDescriptor],
    jobs: int = 1,
    workdir=None,
    tone: ToneParams | None = None,
) -> EvaluationReport:
    """Score every engine with every metric over a corpus.

    ``jobs`` controls worker threads only; the report is byte-identical
    for any worker count. Engine outputs land under ``workdir`` (a
    temporary directory when omitted). Infinite scores are tracked apart
    from the mean; failures never abort the run.
    """
    if jobs < 1:
        raise ValueError("jobs must be >= 1, got %d" % jobs)
    if not manifest.entries:
        raise ValueError("manifest has no entries to evaluate")
    if not engines:
        raise ValueError("need at least one engine")
    if not metrics:
        raise ValueError("need at least one metric")
    tone = tone if tone is not None else ToneParams()
    own_tmp = None
    if workdir is None:
        own_tmp = tempfile.TemporaryDirectory(prefix="docenhance-eval-")
        out_root = Path(own_tmp.name)
    else:
        out_root = Path(workdir)
        out_root.mkdir(parents=True, exist_ok=True)
    try:
        entries = manifest.entries
        if jobs == 1:
            per_entry = [_entry_records(e, engines, metrics, out_root, tone) for e in entries]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [
                    pool.submit(_entry_records, e, engines, metrics, out_root, tone)
                    for e in entries
                ]
                per_entry = [f.result() for f in futures]
    finally:
        if own_tmp is not None:
            own_tmp.cleanup()
    records: list[ScoreRecord] = [rec for chunk in per_entry for rec in chunk]
    by_pair: dict[tuple[str, str], list[ScoreRecord]] = {}
    for rec in records:
        by_pair.setdefault((rec.engine_id, rec.metric_id), []).append(rec)
    summaries: list[Summary] = []
    for engine in engines:
        for metric in metrics:
            recs = by_pair.get((engine.id, metric.id), [])
            finite = [r.value for r in recs if r.value is not None and math.isfinite(r.value)]
            infinite = sum(1 for r in recs if r.value is not None and math.isinf(r.value))
            failed = sum(1 for r in recs if r.error is not None)
            mean = math.fsum(finite) / len(finite) if finite else None
            summaries.append(Summary(engine.id, metric.id, mean, len(finite), infinite, failed))
    for engine in engines:
        if all(r.error is not None for r in records if r.engine_id == engine.id):
            log.warning("engine %r failed on every entry", engine.id)
    return EvaluationReport(
        corpus_size=len(entries),
        engines=tuple(engines),
        metrics=tuple(metrics),
        records=tuple(records),
        summaries=tuple(summaries),
        tone=tone,
    )


def run_gate(
    manifest: Manifest,
    metrics: Sequence[MetricDescriptor],
    engine_id: str | None = None,
    workdir=None,
) -> tuple[GateReport, int]:
    """Gate metrics over a corpus of pre-enhanced pages.

    Each entry contributes one (reference, raw, enhanced, white) triple;
    the enhanced rendition comes from ``engine_id`` when given, otherwise
    from the lexicographically first engine on the entry. Entries without
    a usable rendition are skipped; the skip count is returned alongside.
    """
    triples = []
    skipped = 0
    for entry in manifest.entries:
        if engine_id is not None:
            path = entry.enhanced.get(engine_id)
        else:
            path = entry.enhanced[sorted(entry.enhanced)[0]] if entry.enhanced else None
        if path is None:
            skipped += 1
            continue
        reference = load_image(entry.reference)
        raw = _aligned(load_image(entry.raw), reference)
        enhanced = _aligned(load_image(path), reference)
        triples.append(EvalTriple.build(reference, raw, enhanced, entry.id))
    if not triples:
        raise ManifestError(["no manifest entry has an enhanced rendition to gate against"])
    return gate_metrics(triples, metrics, workdir), skipped


def _metric_label(metric: MetricDescriptor) -> str:
    arrow = "↑" if metric.polarity == "higher" else "↓"
    return "%s %s" % (metric.id, arrow)


def render_means_table(
    engine_ids: Sequence[str],
    metrics: Sequence[MetricDescriptor],
    means: dict[tuple[str, str], float | None],
) -> str:
    """Fixed-width engines x metrics table of mean scores.

    Cells are formatted to two decimals; missing means render as ``-``.
    Metric headers carry a polarity arrow.
    """
    header = ["Engine"] + [_metric_label(m) for m in metrics]
    body = []
    for eid in engine_ids:
        row = [eid]
        for m in metrics:
            v = means.get((eid, m.id))
            row.append("-" if v is None else "%.2f" % v)
        body.append(row)
    widths = [
        max(len(header[i]), *(len(r[i]) for r in body)) if body else len(header[i])
        for i in range(len(header))
    ]
    def fmt(cells):
        return "  ".join(c.ljust(widths[i]) for i, c in enumerate(cells)).rstrip()
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in body)
    return "\n".join(lines)


def render_benchmark_table(report: EvaluationReport) -> str:
    """Mean-score table for an evaluation report."""
    means = {(s.engine_id, s.metric_id): s.mean for s in report.summaries}
    return render_means_table([e.id for e in report.engines], report.metrics, means)


def _json_value(v: float | None):
    if v is None:
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def report_records(report: EvaluationReport) -> list[dict]:
    """Evaluation report as JSON-ready records.

    One config record (inputs that shape the scores; worker count and
    scratch paths are deliberately absent), then scores, then summaries.
    """
    records: list[dict] = [
        {
            "kind": "config",
            "corpus_size": report.corpus_size,
            "engines": [{"id": e.id, "kind": e.kind} for e in report.engines],
            "metrics": [
                {"id": m.id, "polarity": m.polarity, "kind": m.kind} for m in report.metrics
            ],
            "tone": {
                "black_point": report.tone.black_point,
                "white_point": report.tone.white_point,
                "gamma": report.tone.gamma,
            },
        }
    ]
    for r in report.records:
        records.append(
            {
                "kind": "score",
                "entry": r.entry_id,
                "engine": r.engine_id,
                "metric": r.metric_id,
                "value": _json_value(r.value),
                "error": r.error,
            }
        )
    for s in report.summaries:
        records.append(
            {
                "kind": "summary",
                "engine": s.engine_id,
                "metric": s.metric_id,
                "mean": _json_value(s.mean),
                "scored": s.scored,
                "infinite": s.infinite,
                "failed": s.failed,
            }
        )
    return records


def records_to_jsonl(records: Sequence[dict]) -> str:
    """Serialize records as canonical JSONL (sorted keys, compact)."""
    return "".join(
        json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n" for rec in records
    )


def load_score_records(path) -> list[ScoreRecord]:
    """Re-load score records from a records JSONL file (inverse of
    :func:`report_records` for the ``score`` rows; other kinds are skipped)."""
    records: list[ScoreRecord] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError("records file %s line %d: %s" % (path, lineno, exc.msg)) from exc
        if not isinstance(rec, dict) or rec.get("kind") != "score":
            continue
        value = rec.get("value")
        if value == "inf":
            value = math.inf
        elif value == "-inf":
            value = -math.inf
        elif value is not None:
            value = float(value)
        records.append(
            ScoreRecord(
                entry_id=str(rec.get("entry", "")),
                engine_id=str(rec.get("engine", "")),
                metric_id=str(rec.get("metric", "")),
                value=value,
                error=rec.get("error"),
            )
        )
    return records


def render_csv(report: EvaluationReport) -> str:
    """Per-record CSV: entry, engine, metric, value, error."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["entry", "engine", "metric", "value", "error"])
    for r in report.records:
        value = ""
        if r.value is not None:
            value = repr(r.value) if math.isfinite(r.value) else ("inf" if r.value > 0 else "-inf")
        writer.writerow([r.entry_id, r.engine_id, r.metric_id, value, r.error or ""])
    return buf.getvalue()
