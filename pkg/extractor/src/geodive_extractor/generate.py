"""Drive a text-to-image generation client over a prompt file.

Plugin contract: a client is a callable taking one PromptRow and returning
encoded image bytes (written to disk untouched); it may expose an
``extension`` attribute (default "png") and raises to signal failure for
that prompt. Progress is journaled per row, so an interrupted or partially
failed run can be resumed; completed rows are never regenerated.

No hosted generation API is integrated here: the built-in client is a
deterministic stub, and `module:attr` specs load any local client behind
the same contract.
"""

from __future__ import annotations

import importlib
import io
from dataclasses import dataclass
from pathlib import Path

from .manifest import ManifestRow, write_manifest


@dataclass(frozen=True)
class PromptRow:
    prompt_text: str
    object: str
    region: str
    country: str
    prompt_kind: str
    replicate_index: int


def read_prompts(path: str | Path) -> list[PromptRow]:
    """Read a prompt file produced by the engine's build-prompts command."""
    rows: list[PromptRow] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 6:
            raise ValueError(f"{path}: line {lineno}: expected 6 fields, got {len(fields)}")
        text, obj, region, country, kind, rep = fields
        rows.append(PromptRow(text, obj, region, country, kind, int(rep)))
    return rows


class StubClient:
    """Returns one fixed tiny image for every prompt; for pipeline tests."""

    extension = "png"

    def __init__(self) -> None:
        from PIL import Image

        buf = io.BytesIO()
        Image.new("RGB", (8, 8), color=(200, 30, 30)).save(buf, format="PNG")
        self._payload = buf.getvalue()

    def __call__(self, prompt: PromptRow) -> bytes:
        return self._payload


def make_client(spec: str):
    """Client factory: "stub" or a "module:attr" import path."""
    if spec == "stub":
        return StubClient()
    if ":" in spec:
        module_name, attr = spec.split(":", 1)
        client = getattr(importlib.import_module(module_name), attr)
        return client() if isinstance(client, type) else client
    raise ValueError(f"unknown client {spec!r} (expected 'stub' or 'module:attr')")


def _read_journal(path: Path) -> dict[int, str]:
    done: dict[int, str] = {}
    if not path.exists():
        return done
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        index, status, detail = line.split("\t", 2)
        if status == "ok":
            done[int(index)] = detail
        else:
            done.pop(int(index), None)  # failed rows are retried on resume
    return done


def run_generation(
    prompts_path: str | Path, client, out_dir: str | Path
) -> tuple[list[ManifestRow], list[str]]:
    """Generate one image per prompt row; returns (manifest rows, failures).

    Images land in ``out_dir/images``, the manifest at ``out_dir/manifest.tsv``
    with one row per prompt in prompt order; failed prompts become gap rows
    with an empty path. ``out_dir/journal.tsv`` records per-row completion
    and makes reruns resume instead of regenerating.
    """
    prompts = read_prompts(prompts_path)
    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    journal_path = out_dir / "journal.tsv"
    done = _read_journal(journal_path)

    extension = getattr(client, "extension", "png")
    rows: list[ManifestRow] = []
    failures: list[str] = []
    with open(journal_path, "a", encoding="utf-8") as journal:
        for i, prompt in enumerate(prompts):
            if i in done:
                relative = done[i]
            else:
                try:
                    payload = client(prompt)
                    relative = f"images/{i:06d}.{extension}"
                    (out_dir / relative).write_bytes(payload)
                    journal.write(f"{i}\tok\t{relative}\n")
                    journal.flush()
                except Exception as exc:  # client failures are per-prompt data
                    failures.append(f"prompt {i} ({prompt.prompt_text!r}): {exc}")
                    journal.write(f"{i}\terror\t{exc}\n")
                    journal.flush()
                    relative = ""
            rows.append(
                ManifestRow(
                    path=relative,
                    id=f"gen-{i:06d}",
                    object=prompt.object,
                    region=prompt.region,
                    country=prompt.country,
                    source="generated",
                    prompt_kind=prompt.prompt_kind,
                    prompt_text=prompt.prompt_text,
                )
            )
    write_manifest(rows, out_dir / "manifest.tsv")
    return rows, failures
