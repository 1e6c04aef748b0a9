from __future__ import annotations

import json

import numpy as np
import pytest

import pagegen
import _report
from docenhance.imaging import save_image


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def text_page_rgb():
    return pagegen.text_page(256, 256, channels=3, seed=7)


@pytest.fixture
def corpus(tmp_path):
    """Small on-disk corpus: clean pages shaded by known surfaces + manifest.

    Returns (manifest_path, entries) where each entry dict holds the id and
    the in-memory clean/raw images (the manifest's reference role is the
    clean page, raw is the shaded capture).
    """
    from docenhance.augment import apply_surface

    root = tmp_path / "corpus"
    root.mkdir()
    entries = []
    lines = []
    for i in range(4):
        clean = pagegen.text_page(96, 96, channels=3, seed=100 + i)
        surface = pagegen.smooth_surface(96, 96, channels=1, seed=200 + i)
        raw = apply_surface(clean, surface)
        ref_path = root / ("ref_%d.png" % i)
        raw_path = root / ("raw_%d.png" % i)
        save_image(clean, ref_path)
        save_image(raw, raw_path)
        entry_id = "page-%02d" % i
        entries.append({"id": entry_id, "clean": clean, "raw": raw})
        lines.append(
            json.dumps({"id": entry_id, "raw": raw_path.name, "reference": ref_path.name})
        )
    manifest_path = root / "manifest.jsonl"
    manifest_path.write_text("".join(ln + "\n" for ln in lines))
    return manifest_path, entries


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in _report.LINES:
            terminalreporter.write_line(line)
