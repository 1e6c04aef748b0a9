"""Command-line entry points.

Exit convention: 0 on success, 1 on operational failure (unreadable
files, failing plugins, invalid corpora), 2 on usage errors. All
randomness flows from ``--seed``; identical invocations on identical
inputs produce bit-identical outputs.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys
from pathlib import Path

import click

from . import augment as aug
from . import harness, iqa, server
from .enhance import IlluminationSurface, ToneParams, enhance_document
from .imaging import Image, ImagingError, load_image, resample, save_image

log = logging.getLogger(__name__)

_FORMATS = click.Choice(["table", "records", "csv"])


def _friendly(func):
    """Map domain failures to exit status 1 with a readable message."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.ClickException:
            raise
        except (
            ImagingError,
            harness.ManifestError,
            harness.EngineError,
            iqa.MetricError,
            ValueError,
            OSError,
        ) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise click.ClickException("cannot read config %s: %s" % (path, exc))
    except json.JSONDecodeError as exc:
        raise click.ClickException("config %s is not valid JSON: %s" % (path, exc.msg))
    if not isinstance(obj, dict):
        raise click.ClickException("config %s must hold a JSON object" % path)
    return obj


@click.group()
@click.option(
    "--config",
    type=click.Path(dir_okay=False),
    envvar="DOCENHANCE_CONFIG",
    default=None,
    help="JSON config file (tone, augment, metrics, engines, jobs).",
)
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug logging.")
@click.version_option(package_name="docenhance", prog_name="docenhance")
@click.pass_context
def cli(ctx, config, verbose):
    """Document enhancement, lighting augmentation, and IQA benchmarking."""
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = _load_config(config)


def _tone_from(config: dict, black, white, gamma) -> ToneParams:
    base = config.get("tone", {}) if isinstance(config.get("tone", {}), dict) else {}
    return ToneParams(
        black_point=black if black is not None else base.get("black_point", 0.05),
        white_point=white if white is not None else base.get("white_point", 0.92),
        gamma=gamma if gamma is not None else base.get("gamma", 1.0),
    )


def _metric_registry(config: dict) -> dict[str, iqa.MetricDescriptor]:
    registry = {m.id: m for m in iqa.default_registry()}
    for i, entry in enumerate(config.get("metrics", [])):
        if not isinstance(entry, dict) or "id" not in entry:
            raise click.ClickException("config metrics[%d] needs an 'id'" % i)
        try:
            desc = iqa.MetricDescriptor(
                id=entry["id"],
                polarity=entry.get("polarity", "higher"),
                command=entry.get("command"),
            )
        except ValueError as exc:
            raise click.ClickException("config metrics[%d]: %s" % (i, exc))
        registry[desc.id] = desc
    return registry


def _engine_registry(config: dict) -> dict[str, harness.EngineDescriptor]:
    registry = {
        harness.CLASSICAL_ENGINE_ID: harness.EngineDescriptor(harness.CLASSICAL_ENGINE_ID)
    }
    for i, entry in enumerate(config.get("engines", [])):
        if not isinstance(entry, dict) or "id" not in entry:
            raise click.ClickException("config engines[%d] needs an 'id'" % i)
        try:
            desc = harness.EngineDescriptor(id=entry["id"], command=entry.get("command"))
        except ValueError as exc:
            raise click.ClickException("config engines[%d]: %s" % (i, exc))
        registry[desc.id] = desc
    return registry


def _select(registry: dict, csv_ids: str, what: str) -> list:
    out = []
    for raw_id in csv_ids.split(","):
        mid = raw_id.strip()
        if not mid:
            continue
        if mid not in registry:
            raise click.ClickException(
                "unknown %s %r (available: %s)" % (what, mid, ", ".join(sorted(registry)))
            )
        out.append(registry[mid])
    if not out:
        raise click.ClickException("no %ss selected" % what)
    return out


def _format_value(value: float) -> str:
    if value == float("inf"):
        return "inf"
    if value == float("-inf"):
        return "-inf"
    return "%.6f" % value


@cli.command()
@click.argument("input_path", metavar="INPUT", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", metavar="OUTPUT", type=click.Path(dir_okay=False, writable=True))
@click.option("--surface", "surface_path", type=click.Path(dir_okay=False, writable=True),
              default=None, help="Also write the estimated illumination surface here.")
@click.option("--black-point", type=float, default=None, help="Tone black point (default 0.05).")
@click.option("--white-point", type=float, default=None, help="Tone white point (default 0.92).")
@click.option("--gamma", type=float, default=None, help="Tone gamma (default 1.0).")
@click.option("--window", type=int, default=None,
              help="Structuring window (odd); default round(min(w,h)/16).")
@click.pass_obj
@_friendly
def enhance(config, input_path, output_path, surface_path, black_point, white_point, gamma, window):
    """Enhance one captured page: divide out lighting, stretch tone."""
    tone = _tone_from(config, black_point, white_point, gamma)
    raw = load_image(input_path)
    enhanced, surface = enhance_document(raw, tone, window)
    save_image(enhanced, output_path)
    if surface_path:
        save_image(Image(surface.data), surface_path)
    click.echo("wrote %s (%dx%d)" % (output_path, enhanced.width, enhanced.height))


@cli.group()
def surface():
    """Extract or apply illumination surfaces."""


@surface.command("extract")
@click.argument("raw_path", metavar="RAW", type=click.Path(exists=True, dir_okay=False))
@click.argument("enhanced_path", metavar="ENHANCED", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", metavar="OUTPUT", type=click.Path(dir_okay=False, writable=True))
@_friendly
def surface_extract(raw_path, enhanced_path, output_path):
    """Recover the light field relating RAW to ENHANCED."""
    surf = aug.extract_surface(load_image(raw_path), load_image(enhanced_path))
    save_image(Image(surf.data), output_path)
    click.echo("wrote %s" % output_path)


@surface.command("apply")
@click.argument("clean_path", metavar="CLEAN", type=click.Path(exists=True, dir_okay=False))
@click.argument("surface_path", metavar="SURFACE", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", metavar="OUTPUT", type=click.Path(dir_okay=False, writable=True))
@_friendly
def surface_apply(clean_path, surface_path, output_path):
    """Shade a clean page with a stored surface raster."""
    clean = load_image(clean_path)
    surf = IlluminationSurface.from_array(load_image(surface_path).data, clamp=True)
    save_image(aug.apply_surface(clean, surf), output_path)
    click.echo("wrote %s" % output_path)


@cli.command()
@click.argument("manifest_path", metavar="MANIFEST", type=click.Path(exists=True, dir_okay=False))
@click.argument("bank_dir", metavar="BANK_DIR", type=click.Path(exists=True, file_okay=False))
@click.argument("out_dir", metavar="OUT_DIR", type=click.Path(file_okay=False))
@click.option("--crops", type=int, default=None, help="Crops per page (default 8).")
@click.option("--seed", type=int, default=None, help="Master RNG seed (default 0).")
@click.option("--threshold", type=float, default=None,
              help="Laplacian energy gate (default 1e6).")
@click.option("--size", type=int, default=None, help="Crop side length (default 256).")
@click.pass_obj
@_friendly
def augment(config, manifest_path, bank_dir, out_dir, crops, seed, threshold, size):
    """Synthesize shaded/clean training pairs from clean pages.

    Clean pages come from the manifest's reference role; surfaces from
    BANK_DIR (every PNG/PPM/PGM, sorted by name). Pairs and a provenance
    JSONL land in OUT_DIR.
    """
    base = config.get("augment", {}) if isinstance(config.get("augment", {}), dict) else {}
    cfg = aug.AugmentConfig(
        crop_size=size if size is not None else base.get("crop_size", aug.DEFAULT_CROP_SIZE),
        crops_per_page=crops if crops is not None else base.get("crops_per_page", 8),
        energy_threshold=(
            threshold if threshold is not None
            else base.get("energy_threshold", aug.DEFAULT_ENERGY_THRESHOLD)
        ),
        seed=seed if seed is not None else base.get("seed", 0),
    )
    manifest = harness.load_manifest(manifest_path)
    bank = aug.load_surface_bank(bank_dir)
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    pages = [(e.id, load_image(e.reference)) for e in manifest.entries]
    lines = []
    count = 0
    per_page: dict[str, int] = {}
    for pair in aug.make_augmented_set(pages, bank, cfg):
        k = per_page.get(pair.provenance.page_id, 0)
        per_page[pair.provenance.page_id] = k + 1
        stem = "%s_%04d" % (harness._safe_name(pair.provenance.page_id), k)
        in_name = stem + "_in.png"
        gt_name = stem + "_gt.png"
        save_image(pair.input, out_root / in_name)
        save_image(pair.target, out_root / gt_name)
        rec = {"input": in_name, "target": gt_name}
        rec.update(pair.provenance.to_record())
        lines.append(json.dumps(rec, sort_keys=True))
        count += 1
    (out_root / "pairs.jsonl").write_text("".join(ln + "\n" for ln in lines))
    click.echo("wrote %d pairs from %d pages to %s" % (count, len(pages), out_root))


@cli.group()
def iqa_group():
    """Score images and sanity-gate metrics."""


# click uses the function name by default; expose the group as `iqa`
cli.add_command(iqa_group, name="iqa")


@iqa_group.command("score")
@click.argument("reference_path", metavar="REFERENCE", type=click.Path(exists=True, dir_okay=False))
@click.argument("test_path", metavar="TEST", type=click.Path(exists=True, dir_okay=False))
@click.option("--metrics", default="psnr,ms_ssim", show_default=True,
              help="Comma-separated metric ids.")
@click.option("--format", "fmt", type=_FORMATS, default="table", show_default=True)
@click.pass_obj
@_friendly
def iqa_score(config, reference_path, test_path, metrics, fmt):
    """Score TEST against REFERENCE (TEST is resampled if sizes differ)."""
    registry = _metric_registry(config)
    selected = _select(registry, metrics, "metric")
    reference = load_image(reference_path)
    test = load_image(test_path)
    if test.data.shape[:2] != reference.data.shape[:2]:
        test = resample(test, reference.width, reference.height)
    rows = []
    for metric in selected:
        value = iqa.score_images(metric, reference, test)
        rows.append((metric.id, value))
    if fmt == "records":
        for mid, value in rows:
            rec = {"kind": "score", "metric": mid, "value": harness._json_value(value)}
            click.echo(json.dumps(rec, sort_keys=True, separators=(",", ":")))
    else:
        width = max(len(mid) for mid, _ in rows)
        for mid, value in rows:
            click.echo("%s  %s" % (mid.ljust(width), _format_value(value)))


@iqa_group.command("gate")
@click.argument("manifest_path", metavar="MANIFEST", type=click.Path(exists=True, dir_okay=False))
@click.option("--metrics", default=None,
              help="Comma-separated metric ids (default: psnr,ms_ssim plus configured).")
@click.option("--engine", "engine_id", default=None,
              help="Gate against this engine's renditions (default: first per entry).")
@click.option("--format", "fmt", type=_FORMATS, default="table", show_default=True)
@click.pass_obj
@_friendly
def iqa_gate(config, manifest_path, metrics, engine_id, fmt):
    """Screen metrics against raw-capture and all-white controls."""
    registry = _metric_registry(config)
    if metrics is None:
        ids = ["psnr", "ms_ssim"] + [
            m["id"] for m in config.get("metrics", []) if isinstance(m, dict) and "id" in m
        ]
        metrics = ",".join(dict.fromkeys(ids))
    selected = _select(registry, metrics, "metric")
    manifest = harness.load_manifest(manifest_path)
    report, skipped = harness.run_gate(manifest, selected, engine_id)
    if skipped:
        log.warning("%d manifest entries had no rendition to gate", skipped)
    if fmt == "records":
        for rec in iqa.gate_records(report):
            click.echo(json.dumps(rec, sort_keys=True, separators=(",", ":")))
    else:
        click.echo(iqa.render_gate_table(report))
        click.echo("")
        click.echo("rank: %s" % " > ".join(iqa.rank_metrics(report)))


@cli.group("eval")
def eval_group():
    """Benchmark enhancement engines over a corpus."""


@eval_group.command("run")
@click.argument("manifest_path", metavar="MANIFEST", type=click.Path(exists=True, dir_okay=False))
@click.option("--engines", default=harness.CLASSICAL_ENGINE_ID, show_default=True,
              help="Comma-separated engine ids.")
@click.option("--metrics", default="psnr,ms_ssim", show_default=True,
              help="Comma-separated metric ids.")
@click.option("--jobs", type=int, default=None,
              help="Worker threads (default: available hardware parallelism).")
@click.option("--workdir", type=click.Path(file_okay=False), default=None,
              help="Keep engine outputs here (default: temporary).")
@click.option("--format", "fmt", type=_FORMATS, default="table", show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Also write the chosen format to this file.")
@click.option("--black-point", type=float, default=None)
@click.option("--white-point", type=float, default=None)
@click.option("--gamma", type=float, default=None)
@click.pass_obj
@_friendly
def eval_run(config, manifest_path, engines, metrics, jobs, workdir, fmt, out_path,
             black_point, white_point, gamma):
    """Score every selected engine with every selected metric."""
    manifest = harness.load_manifest(manifest_path)
    engine_sel = _select(_engine_registry(config), engines, "engine")
    metric_sel = _select(_metric_registry(config), metrics, "metric")
    tone = _tone_from(config, black_point, white_point, gamma)
    n_jobs = jobs if jobs is not None else int(config.get("jobs", os.cpu_count() or 1))
    report = harness.run_evaluation(
        manifest, engine_sel, metric_sel, jobs=n_jobs, workdir=workdir, tone=tone
    )
    if fmt == "records":
        text = harness.records_to_jsonl(harness.report_records(report))
    elif fmt == "csv":
        text = harness.render_csv(report)
    else:
        text = harness.render_benchmark_table(report) + "\n"
    if out_path:
        Path(out_path).write_text(text)
        click.echo("wrote %s" % out_path)
    else:
        click.echo(text, nl=False)


@cli.command()
@click.argument("manifest_path", metavar="MANIFEST", type=click.Path(exists=True, dir_okay=False))
@click.option("--judgments", type=click.Path(dir_okay=False), default="judgments.jsonl",
              show_default=True, help="Append-only judgment log.")
@click.option("--report", "report_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Records JSONL from 'eval run' to serve as scores.")
@click.option("--static", "static_dir", type=click.Path(file_okay=False), default=None,
              help="Review UI bundle directory.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.pass_obj
@_friendly
def serve(config, manifest_path, judgments, report_path, static_dir, host, port):
    """Serve the review API (and UI bundle, if provided)."""
    manifest = harness.load_manifest(manifest_path)
    records = harness.load_score_records(report_path) if report_path else None
    srv = server.ReviewServer(
        manifest,
        judgments_path=judgments,
        report=records,
        static_dir=static_dir,
        host=host,
        port=port,
    )
    click.echo("serving %d entries on %s (judgments -> %s)" % (len(manifest), srv.url, judgments))
    try:
        srv.serve_forever()
    except KeyboardInterrupt:
        click.echo("shutting down")


def main():
    cli(prog_name="docenhance")


if __name__ == "__main__":
    main()
