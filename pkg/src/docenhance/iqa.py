"""Full-reference image quality metrics and the metric-sanity gate.

Builtin metrics (PSNR, MS-SSIM, and the pixel-statistics family) are
computed on the 8-bit scale: normalized values are multiplied by 255
before any difference is taken, so scores match conventional tooling.
External metrics plug in as shell commands with ``{ref}``/``{test}``
placeholders that print one real number as the last line of stdout.

The gate screens metrics against two sanity controls on a corpus of
(reference, raw, enhanced) triples: a metric that prefers the raw capture
over the enhanced page, or an all-white frame over the raw capture, is
measuring something other than document quality. Error rates are reported
in percent; a metric's rank is its combined error, ascending.
"""

from __future__ import annotations

import math
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .imaging import Image, ShapeMismatchError, save_image, to_luminance

PEAK = 255.0
K1 = 0.01
K2 = 0.03
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
#: Per-scale exponents for the 5-scale structural score (finest first).
MS_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)

DEFAULT_METRIC_TIMEOUT = 120.0


class MetricError(Exception):
    """A metric could not produce a score (plugin failure, bad output)."""


@dataclass(frozen=True)
class MetricDescriptor:
    """A scored quantity: builtin (command=None) or external shell plugin."""

    id: str
    polarity: str
    command: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("metric id must be non-empty")
        if self.polarity not in ("higher", "lower"):
            raise ValueError(
                "polarity must be 'higher' or 'lower', got %r" % (self.polarity,)
            )
        if self.command is not None and ("{ref}" not in self.command or "{test}" not in self.command):
            raise ValueError(
                "external metric command must contain {ref} and {test} placeholders"
            )

    @property
    def kind(self) -> str:
        return "builtin" if self.command is None else "external"


@dataclass(frozen=True)
class MetricScore:
    """One scored comparison; value may be infinite (identical inputs)."""

    metric_id: str
    value: float


@dataclass(frozen=True, eq=False)
class EvalTriple:
    """Aligned (reference, raw, enhanced, white) rasters for one page."""

    reference: Image
    raw: Image
    enhanced: Image
    white: Image
    entry_id: str = ""

    def __post_init__(self):
        shape = self.reference.data.shape
        for name in ("raw", "enhanced", "white"):
            img = getattr(self, name)
            if img.data.shape != shape:
                raise ShapeMismatchError(
                    "%s shape %r does not match reference %r"
                    % (name, img.data.shape, shape)
                )

    @staticmethod
    def build(reference: Image, raw: Image, enhanced: Image, entry_id: str = "") -> "EvalTriple":
        """Assemble a triple, synthesizing the all-white control frame."""
        return EvalTriple(reference, raw, enhanced, make_white(reference), entry_id)


@dataclass(frozen=True)
class GateRow:
    """Gate outcome for one metric (error rates in percent)."""

    metric_id: str
    raw_error: float
    white_error: float
    scored: int
    failed: int
    failures: tuple[tuple[str, str], ...] = field(default=())

    @property
    def total(self) -> float:
        return self.raw_error + self.white_error


@dataclass(frozen=True)
class GateReport:
    """Gate outcomes for a metric registry over one corpus."""

    rows: tuple[GateRow, ...]
    corpus_size: int


def make_white(like: Image) -> Image:
    """All-white frame with the same geometry as ``like``."""
    return Image(np.ones_like(like.data))


def pixel_stats(reference: Image, test: Image) -> dict[str, float]:
    """MSE / RMSE / MAE / SNR between two rasters on the 8-bit scale.

    SNR is ``10 log10(mean(ref^2) / MSE)``; identical inputs give the
    infinity sentinel, an all-black reference gives -infinity.
    """
    if reference.data.shape != test.data.shape:
        raise ShapeMismatchError(
            "reference shape %r vs test shape %r"
            % (reference.data.shape, test.data.shape)
        )
    diff = (reference.data - test.data) * PEAK
    mse = float(np.mean(diff * diff))
    mae = float(np.mean(np.abs(diff)))
    signal = float(np.mean((reference.data * PEAK) ** 2))
    if mse == 0.0:
        snr = math.inf
    elif signal == 0.0:
        snr = -math.inf
    else:
        snr = 10.0 * math.log10(signal / mse)
    return {"mse": mse, "rmse": math.sqrt(mse), "mae": mae, "snr": snr}


def psnr(reference: Image, test: Image) -> float:
    """Peak signal-to-noise ratio in dB; infinity for identical inputs."""
    mse = pixel_stats(reference, test)["mse"]
    if mse == 0.0:
        return math.inf
    return 20.0 * math.log10(PEAK) - 10.0 * math.log10(mse)


def _gaussian_taps(n: int, sigma: float) -> np.ndarray:
    xs = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    t = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return t / t.sum()


def _ssim_terms(x: np.ndarray, y: np.ndarray, taps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel luminance and contrast-structure term maps (valid region)."""
    mu_x = _kernels.gaussian_valid(x, taps)
    mu_y = _kernels.gaussian_valid(y, taps)
    xx = _kernels.gaussian_valid(x * x, taps)
    yy = _kernels.gaussian_valid(y * y, taps)
    xy = _kernels.gaussian_valid(x * y, taps)
    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y
    c1 = (K1 * PEAK) ** 2
    c2 = (K2 * PEAK) ** 2
    lum = (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
    cs = (2.0 * cov + c2) / (var_x + var_y + c2)
    return lum, cs


def ms_ssim(reference: Image, test: Image) -> float:
    """Multi-scale structural similarity on the luminance plane.

    Up to five dyadic scales (2x2 mean downsampling); contrast-structure
    terms at every scale, the luminance term only at the coarsest, combined
    with the standard per-scale exponents. Fewer scales are used when the
    image cannot host the 11-tap window after halving, with the exponent
    subset renormalized. Negative term means clamp to zero.
    """
    if reference.data.shape != test.data.shape:
        raise ShapeMismatchError(
            "reference shape %r vs test shape %r"
            % (reference.data.shape, test.data.shape)
        )
    x = to_luminance(reference).data * PEAK
    y = to_luminance(test).data * PEAK
    m = min(x.shape)
    if m < 2:
        raise ValueError("image too small for structural comparison (min dim %d)" % m)
    win = SSIM_WINDOW if m >= SSIM_WINDOW else (m if m % 2 == 1 else m - 1)
    taps = _gaussian_taps(win, SSIM_SIGMA)
    scales = 1
    cur = m
    while scales < len(MS_WEIGHTS) and cur // 2 >= win:
        cur //= 2
        scales += 1
    weights = np.asarray(MS_WEIGHTS[:scales], dtype=np.float64)
    if scales < len(MS_WEIGHTS):
        weights = weights / weights.sum()
    score = 1.0
    for s in range(scales):
        lum, cs = _ssim_terms(x, y, taps)
        if s == scales - 1:
            term = float(np.mean(lum * cs))
        else:
            term = float(np.mean(cs))
            x = _kernels.downsample2x(x)
            y = _kernels.downsample2x(y)
        score *= max(term, 0.0) ** weights[s]
    return float(score)


def external_metric(
    descriptor: MetricDescriptor,
    reference_path,
    test_path,
    timeout: float = DEFAULT_METRIC_TIMEOUT,
) -> MetricScore:
    """Run an external metric command on two image files.

    The command template is split shell-style, then ``{ref}``/``{test}``
    are substituted per token (paths with spaces stay single arguments).
    The plugin must exit 0 and print a real number as its last non-empty
    stdout line.
    """
    if descriptor.command is None:
        raise ValueError("metric %r is builtin, not external" % descriptor.id)
    tokens = [
        t.replace("{ref}", str(reference_path)).replace("{test}", str(test_path))
        for t in shlex.split(descriptor.command)
    ]
    try:
        proc = subprocess.run(tokens, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise MetricError(
            "metric %r timed out after %gs" % (descriptor.id, timeout)
        ) from exc
    except OSError as exc:
        raise MetricError("metric %r failed to launch: %s" % (descriptor.id, exc)) from exc
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-1:] or [""]
        raise MetricError(
            "metric %r exited with status %d: %s" % (descriptor.id, proc.returncode, tail[0])
        )
    lines = [ln.strip() for ln in proc.stdout.splitlines() if ln.strip()]
    if not lines:
        raise MetricError("metric %r produced no output" % descriptor.id)
    try:
        value = float(lines[-1])
    except ValueError:
        raise MetricError(
            "metric %r output is not a number: %r" % (descriptor.id, lines[-1])
        ) from None
    if math.isnan(value):
        raise MetricError("metric %r returned NaN" % descriptor.id)
    return MetricScore(descriptor.id, value)


_BUILTIN_FUNCS: dict[str, Callable[[Image, Image], float]] = {
    "psnr": psnr,
    "ms_ssim": ms_ssim,
    "mse": lambda ref, test: pixel_stats(ref, test)["mse"],
    "rmse": lambda ref, test: pixel_stats(ref, test)["rmse"],
    "mae": lambda ref, test: pixel_stats(ref, test)["mae"],
    "snr": lambda ref, test: pixel_stats(ref, test)["snr"],
}


def default_registry() -> list[MetricDescriptor]:
    """Builtin metric descriptors in canonical order."""
    polarity = {"psnr": "higher", "ms_ssim": "higher", "snr": "higher"}
    return [
        MetricDescriptor(mid, polarity.get(mid, "lower"))
        for mid in ("psnr", "ms_ssim", "mse", "rmse", "mae", "snr")
    ]


def score_images(
    descriptor: MetricDescriptor,
    reference: Image,
    test: Image,
    workdir=None,
    timeout: float = DEFAULT_METRIC_TIMEOUT,
) -> float:
    """Score a (reference, test) pair with a builtin or external metric.

    External metrics see the pair as freshly written PNG files in a
    temporary directory (under ``workdir`` when given).
    """
    if descriptor.command is None:
        func = _BUILTIN_FUNCS.get(descriptor.id)
        if func is None:
            raise MetricError(
                "unknown builtin metric %r (builtins: %s)"
                % (descriptor.id, ", ".join(sorted(_BUILTIN_FUNCS)))
            )
        return func(reference, test)
    base = str(workdir) if workdir is not None else None
    with tempfile.TemporaryDirectory(prefix="metric-", dir=base) as tmp:
        ref_path = Path(tmp) / "ref.png"
        test_path = Path(tmp) / "test.png"
        save_image(reference, ref_path)
        save_image(test, test_path)
        return external_metric(descriptor, ref_path, test_path, timeout=timeout).value


def is_better(descriptor: MetricDescriptor, candidate: MetricScore, incumbent: MetricScore) -> bool:
    """Strict comparison honoring polarity; ties are not better.

    Both scores must come from ``descriptor``'s metric.
    """
    if candidate.metric_id != descriptor.id or incumbent.metric_id != descriptor.id:
        raise ValueError(
            "scores from metric %r/%r compared under metric %r"
            % (candidate.metric_id, incumbent.metric_id, descriptor.id)
        )
    if descriptor.polarity == "higher":
        return candidate.value > incumbent.value
    return candidate.value < incumbent.value


def gate_metrics(
    triples: Sequence[EvalTriple],
    registry: Sequence[MetricDescriptor],
    workdir=None,
) -> GateReport:
    """Screen metrics against the raw-capture and all-white controls.

    For each metric: ``raw_error`` is the percentage of scored triples
    where the raw capture beats the enhanced page, ``white_error`` the
    percentage where the white frame beats the raw capture. A triple that
    fails to score (plugin error) shrinks that metric's denominator and is
    reported in the row's failure list.
    """
    if not triples:
        raise ValueError("gate needs at least one triple")
    rows = []
    for metric in registry:
        raw_wins = 0
        white_wins = 0
        scored = 0
        failures: list[tuple[str, str]] = []
        for triple in triples:
            try:
                s_enh = MetricScore(metric.id, score_images(metric, triple.reference, triple.enhanced, workdir))
                s_raw = MetricScore(metric.id, score_images(metric, triple.reference, triple.raw, workdir))
                s_white = MetricScore(metric.id, score_images(metric, triple.reference, triple.white, workdir))
            except MetricError as exc:
                failures.append((triple.entry_id, str(exc)))
                continue
            scored += 1
            if is_better(metric, s_raw, s_enh):
                raw_wins += 1
            if is_better(metric, s_white, s_raw):
                white_wins += 1
        raw_error = 100.0 * raw_wins / scored if scored else 0.0
        white_error = 100.0 * white_wins / scored if scored else 0.0
        rows.append(
            GateRow(
                metric_id=metric.id,
                raw_error=raw_error,
                white_error=white_error,
                scored=scored,
                failed=len(failures),
                failures=tuple(failures),
            )
        )
    return GateReport(tuple(rows), len(triples))


def rank_metrics(report: GateReport) -> list[str]:
    """Metric ids ordered by combined error ascending (best first).

    Ties break on raw error, then id.
    """
    ordered = sorted(report.rows, key=lambda r: (r.total, r.raw_error, r.metric_id))
    return [r.metric_id for r in ordered]


def render_gate_table(report: GateReport) -> str:
    """Fixed-width text table of gate outcomes, best metric first.

    Columns: Metric, Raw error, White error, Total (percentages).
    Scored/failed counts live in the structured records.
    """
    order = {mid: i for i, mid in enumerate(rank_metrics(report))}
    rows = sorted(report.rows, key=lambda r: order[r.metric_id])
    header = ("Metric", "Raw error", "White error", "Total")
    body = [
        (
            r.metric_id,
            "%.1f" % r.raw_error,
            "%.1f" % r.white_error,
            "%.1f" % r.total,
        )
        for r in rows
    ]
    widths = [
        max(len(header[i]), *(len(b[i]) for b in body)) if body else len(header[i])
        for i in range(len(header))
    ]
    def fmt(cells):
        return "  ".join(c.ljust(widths[i]) for i, c in enumerate(cells)).rstrip()
    lines = [fmt(header), fmt(tuple("-" * w for w in widths))]
    lines.extend(fmt(b) for b in body)
    return "\n".join(lines)


def gate_records(report: GateReport) -> list[dict]:
    """Gate report as JSON-ready records (one meta row, one row per metric)."""
    records: list[dict] = [{"kind": "gate_meta", "corpus_size": report.corpus_size}]
    for r in report.rows:
        records.append(
            {
                "kind": "gate_row",
                "metric": r.metric_id,
                "raw_error": r.raw_error,
                "white_error": r.white_error,
                "total": r.total,
                "scored": r.scored,
                "failed": r.failed,
            }
        )
    return records
