"""Human review service for enhanced-page curation.

Serves a manifest's rasters and scores over a small JSON API, records
reviewer judgments in an append-only JSONL log, and exports the accepted
pairs as a curated manifest. The judgment log is the source of truth:
re-judging a pair appends a new record, and the latest record per
(entry, engine) pair wins. A static directory (the review UI bundle) is
served at the root when provided.
"""

from __future__ import annotations

import io
import json
import logging
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import unquote, urlparse

import numpy as np
from PIL import Image as _PILImage

from .harness import EvaluationReport, Manifest, ManifestEntry
from .imaging import Image, ImagingError, encode_u8, load_image

log = logging.getLogger(__name__)

#: The four inspection criteria a reviewer scores per pair.
CRITERIA_KEYS = (
    "illumination_removal",
    "content_preservation",
    "contrast",
    "color_accuracy",
)

VERDICTS = ("accept", "discard")


@dataclass(frozen=True)
class Judgment:
    """One review decision for an (entry, engine) pair."""

    entry_id: str
    engine_id: str
    criteria: dict[str, bool]
    verdict: str
    note: str = ""
    timestamp: str = ""

    def __post_init__(self):
        if not self.entry_id or not self.engine_id:
            raise ValueError("judgment needs entry and engine ids")
        if set(self.criteria) != set(CRITERIA_KEYS):
            raise ValueError(
                "criteria must cover exactly %s" % (", ".join(CRITERIA_KEYS))
            )
        for key, val in self.criteria.items():
            if not isinstance(val, bool):
                raise ValueError("criterion %r must be a boolean" % key)
        if self.verdict not in VERDICTS:
            raise ValueError("verdict must be one of %s" % (VERDICTS,))
        if self.verdict == "accept" and not all(self.criteria.values()) and not self.note.strip():
            raise ValueError(
                "an accept verdict with failed criteria needs an override note"
            )

    def to_record(self) -> dict:
        return {
            "entry": self.entry_id,
            "engine": self.engine_id,
            "criteria": dict(sorted(self.criteria.items())),
            "verdict": self.verdict,
            "note": self.note,
            "timestamp": self.timestamp,
        }

    @staticmethod
    def from_record(rec: dict) -> "Judgment":
        if not isinstance(rec, dict):
            raise ValueError("judgment record must be an object")
        criteria = rec.get("criteria")
        if not isinstance(criteria, dict):
            raise ValueError("judgment record needs a 'criteria' object")
        return Judgment(
            entry_id=rec.get("entry", ""),
            engine_id=rec.get("engine", ""),
            criteria=dict(criteria),
            verdict=rec.get("verdict", ""),
            note=rec.get("note", "") or "",
            timestamp=rec.get("timestamp", "") or "",
        )


class JudgmentStore:
    """Append-only JSONL judgment log with latest-wins summaries."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: list[Judgment] = []
        if self.path.exists():
            for lineno, line in enumerate(self.path.read_text().splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    self._records.append(Judgment.from_record(json.loads(line)))
                except (json.JSONDecodeError, ValueError) as exc:
                    raise ValueError(
                        "judgment log %s line %d is invalid: %s" % (self.path, lineno, exc)
                    ) from exc

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def append(self, judgment: Judgment) -> int:
        """Persist one judgment; returns its 1-based record id."""
        line = json.dumps(judgment.to_record(), sort_keys=True)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a") as fh:
                fh.write(line + "\n")
            self._records.append(judgment)
            return len(self._records)

    def history(self, entry_id: str, engine_id: str) -> list[tuple[int, Judgment]]:
        """All records for one pair, oldest first, with record ids."""
        with self._lock:
            return [
                (i + 1, j)
                for i, j in enumerate(self._records)
                if j.entry_id == entry_id and j.engine_id == engine_id
            ]

    def latest(self) -> dict[tuple[str, str], tuple[int, Judgment]]:
        """Latest record per (entry, engine) pair."""
        out: dict[tuple[str, str], tuple[int, Judgment]] = {}
        with self._lock:
            for i, j in enumerate(self._records):
                out[(j.entry_id, j.engine_id)] = (i + 1, j)
        return out


def curated_manifest(
    latest: dict[tuple[str, str], tuple[int, Judgment]], manifest: Manifest
) -> Manifest:
    """Filter a manifest down to its accepted (entry, engine) pairs.

    An entry survives when at least one of its renditions was accepted;
    its ``enhanced`` map keeps only the accepted engines. The result is a
    pure function of the judgment log and the manifest.
    """
    entries = []
    for entry in manifest.entries:
        kept = {
            engine_id: path
            for engine_id, path in entry.enhanced.items()
            if (entry.id, engine_id) in latest
            and latest[(entry.id, engine_id)][1].verdict == "accept"
        }
        if kept:
            entries.append(
                ManifestEntry(
                    id=entry.id, raw=entry.raw, reference=entry.reference, enhanced=kept
                )
            )
    return Manifest(tuple(entries))


def export_curated(store: JudgmentStore, manifest: Manifest) -> Manifest:
    """Curated manifest from a store's current latest-wins view."""
    return curated_manifest(store.latest(), manifest)


_FALLBACK_PAGE = """<!doctype html>
<meta charset="utf-8">
<title>docenhance review</title>
<style>body{font-family:system-ui,sans-serif;margin:3em auto;max-width:40em}</style>
<h1>docenhance review service</h1>
<p>No UI bundle is installed (start the server with <code>--static</code>
pointing at a built bundle). The JSON API is live:</p>
<ul>
<li><code>GET /api/manifest</code></li>
<li><code>GET /api/image/{entry}/raw|reference|white</code></li>
<li><code>GET /api/image/{entry}/enhanced/{engine}</code></li>
<li><code>GET /api/scores/{entry}</code></li>
<li><code>GET /api/judgments</code>, <code>POST /api/judgments</code></li>
<li><code>GET /api/judgments/{entry}/{engine}/history</code></li>
<li><code>GET /api/progress</code></li>
</ul>
"""

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


def _png_bytes(image: Image) -> bytes:
    arr = encode_u8(image.data)
    if arr.shape[2] == 1:
        pil = _PILImage.fromarray(arr[:, :, 0], mode="L")
    else:
        pil = _PILImage.fromarray(arr, mode="RGB")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


class _State:
    """Shared request-handler state (manifest, scores, judgments, static)."""

    def __init__(self, manifest, report, store, static_dir):
        self.manifest = manifest
        self.store = store
        self.static_dir = Path(static_dir).resolve() if static_dir else None
        self.entries = {e.id: e for e in manifest.entries}
        self.scores: dict[str, list[dict]] = {}
        if report is not None:
            recs = report.records if isinstance(report, EvaluationReport) else report
            for rec in recs:
                self.scores.setdefault(rec.entry_id, []).append(
                    {
                        "engine": rec.engine_id,
                        "metric": rec.metric_id,
                        "value": _score_value(rec.value),
                        "error": rec.error,
                    }
                )

    def pairs(self) -> list[tuple[str, str]]:
        out = []
        for entry in self.manifest.entries:
            for engine_id in sorted(entry.enhanced):
                out.append((entry.id, engine_id))
        return out


def _score_value(v):
    if v is None:
        return None
    if v != v:  # NaN
        return None
    if v == float("inf"):
        return "inf"
    if v == float("-inf"):
        return "-inf"
    return v


class _Handler(BaseHTTPRequestHandler):
    server_version = "docenhance-review/0.1"

    # -- plumbing ---------------------------------------------------------
    def log_message(self, fmt, *args):
        log.debug("%s - %s", self.address_string(), fmt % args)

    def _send(self, status: int, body: bytes, ctype: str):
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _json(self, obj, status: int = 200):
        self._send(status, json.dumps(obj).encode(), "application/json")

    def _fail(self, status: int, message: str):
        self._json({"error": message}, status=status)

    @property
    def state(self) -> _State:
        return self.server.state  # type: ignore[attr-defined]

    # -- routing ----------------------------------------------------------
    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self):
        parts = [unquote(p) for p in urlparse(self.path).path.split("/") if p]
        try:
            if parts[:1] == ["api"]:
                self._api_get(parts[1:])
            else:
                self._static(parts)
        except BrokenPipeError:
            pass
        except Exception as exc:  # pragma: no cover - defensive
            log.exception("request failed: %s", self.path)
            try:
                self._fail(500, str(exc))
            except Exception:
                pass

    def do_POST(self):
        parts = [unquote(p) for p in urlparse(self.path).path.split("/") if p]
        if parts == ["api", "judgments"]:
            self._post_judgment()
        else:
            self._fail(404, "unknown endpoint")

    # -- API --------------------------------------------------------------
    def _api_get(self, parts: list[str]):
        state = self.state
        if parts == ["manifest"]:
            entries = [
                {"id": e.id, "engines": sorted(e.enhanced)}
                for e in state.manifest.entries
            ]
            engines = sorted({eng for e in state.manifest.entries for eng in e.enhanced})
            self._json({"entries": entries, "engines": engines})
        elif len(parts) >= 3 and parts[0] == "image":
            self._image(parts[1], parts[2:])
        elif len(parts) == 2 and parts[0] == "scores":
            entry = state.entries.get(parts[1])
            if entry is None:
                self._fail(404, "unknown entry %r" % parts[1])
                return
            self._json({"entry": parts[1], "scores": state.scores.get(parts[1], [])})
        elif parts == ["judgments"]:
            latest = state.store.latest()
            rows = [
                {"record": rid, **j.to_record()}
                for (rid, j) in sorted(latest.values(), key=lambda t: t[0])
            ]
            self._json({"judgments": rows})
        elif len(parts) == 4 and parts[0] == "judgments" and parts[3] == "history":
            rows = [
                {"record": rid, **j.to_record()}
                for rid, j in state.store.history(parts[1], parts[2])
            ]
            self._json({"history": rows})
        elif parts == ["progress"]:
            pairs = state.pairs()
            latest = state.store.latest()
            judged = [latest[key] for key in pairs if key in latest]
            accepted = sum(1 for _, j in judged if j.verdict == "accept")
            self._json(
                {
                    "total_pairs": len(pairs),
                    "reviewed": len(judged),
                    "accepted": accepted,
                    "discarded": len(judged) - accepted,
                }
            )
        else:
            self._fail(404, "unknown endpoint")

    def _image(self, entry_id: str, role: list[str]):
        entry = self.state.entries.get(entry_id)
        if entry is None:
            self._fail(404, "unknown entry %r" % entry_id)
            return
        path = None
        if role == ["raw"]:
            path = entry.raw
        elif role == ["reference"]:
            path = entry.reference
        elif role == ["white"]:
            ref = load_image(entry.reference)
            self._send(200, _png_bytes(Image(np.ones_like(ref.data))), "image/png")
            return
        elif len(role) == 2 and role[0] == "enhanced":
            path = entry.enhanced.get(role[1])
            if path is None:
                self._fail(404, "entry %r has no rendition for engine %r" % (entry_id, role[1]))
                return
        else:
            self._fail(404, "unknown image role %r" % "/".join(role))
            return
        try:
            if path.suffix.lower() == ".png":
                self._send(200, path.read_bytes(), "image/png")
            else:
                self._send(200, _png_bytes(load_image(path)), "image/png")
        except (OSError, ImagingError) as exc:
            self._fail(500, "cannot serve %s: %s" % (path, exc))

    def _post_judgment(self):
        state = self.state
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length) or b"{}")
        except (ValueError, json.JSONDecodeError):
            self._fail(400, "request body must be JSON")
            return
        if not isinstance(payload, dict):
            self._fail(400, "request body must be a JSON object")
            return
        entry_id = payload.get("entry")
        engine_id = payload.get("engine")
        entry = state.entries.get(entry_id) if isinstance(entry_id, str) else None
        if entry is None or not isinstance(engine_id, str) or engine_id not in entry.enhanced:
            self._fail(400, "unknown (entry, engine) pair: %r / %r" % (entry_id, engine_id))
            return
        try:
            judgment = Judgment(
                entry_id=entry_id,
                engine_id=engine_id,
                criteria=dict(payload.get("criteria") or {}),
                verdict=payload.get("verdict", ""),
                note=str(payload.get("note", "") or ""),
                timestamp=datetime.now(timezone.utc).isoformat(),
            )
        except ValueError as exc:
            self._fail(400, str(exc))
            return
        record_id = state.store.append(judgment)
        self._json({"record": record_id}, status=201)

    # -- static -----------------------------------------------------------
    def _static(self, parts: list[str]):
        root = self.state.static_dir
        rel = "/".join(parts) if parts else "index.html"
        if root is None:
            if rel == "index.html":
                self._send(200, _FALLBACK_PAGE.encode(), "text/html; charset=utf-8")
            else:
                self._fail(404, "no static bundle installed")
            return
        target = (root / rel).resolve()
        if str(target).startswith(str(root)) and target.is_file():
            ctype = _CONTENT_TYPES.get(target.suffix.lower(), "application/octet-stream")
            self._send(200, target.read_bytes(), ctype)
            return
        # single-page fallback: extension-less routes get the index
        index = root / "index.html"
        if not Path(rel).suffix and index.is_file():
            self._send(200, index.read_bytes(), "text/html; charset=utf-8")
        else:
            self._fail(404, "not found")


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True


class ReviewServer:
    """HTTP review service bound to a manifest, score report, and log.

    ``port=0`` binds an ephemeral port; read ``address`` after
    construction. ``start()`` serves on a background thread (tests),
    ``serve_forever()`` blocks (CLI).
    """

    def __init__(
        self,
        manifest: Manifest,
        judgments_path,
        report=None,
        static_dir=None,
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        # ``report`` is an EvaluationReport or a plain sequence of
        # ScoreRecord (e.g. re-loaded from a records file).
        self.store = JudgmentStore(judgments_path)
        self._state = _State(manifest, report, self.store, static_dir)
        self._httpd = _Server((host, port), _Handler)
        self._httpd.state = self._state  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._httpd.server_address[:2]
        return str(host), int(port)

    @property
    def url(self) -> str:
        host, port = self.address
        return "http://%s:%d" % (host, port)

    def serve_forever(self):
        self._httpd.serve_forever()

    def start(self):
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def stop(self):
        self._httpd.shutdown()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None
        self._httpd.server_close()
