"""Command-line surface of the extractor.

Subcommands:
  extract      embed a manifest of images into a GEODIVE-EMB/1 file
  embed-texts  embed object names into a text-embedding file
  generate     drive a generation client over a prompt file (resumable)

Exit codes: 0 success, 1 any failure (load errors, decode errors, or
generation runs with failed prompts).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backends import ModelLoadError, make_backend
from .crop import DecodeError
from .generate import make_client, read_prompts, run_generation
from .jobs import JOB_KINDS, ExtractionJob, embed_object_texts, run_extraction


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geodive-extract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="embed manifest images")
    p_extract.add_argument("--manifest", required=True, type=Path)
    p_extract.add_argument("--kind", required=True, choices=JOB_KINDS)
    p_extract.add_argument("--out", required=True, type=Path)
    p_extract.add_argument("--backend", default="reference", help="reference | inception | clip")
    p_extract.add_argument("--dim", type=int, default=64, help="reference-backend feature dimension")
    p_extract.add_argument("--weights", default=None, help="local weights file / checkpoint dir")
    p_extract.add_argument("--batch-size", type=int, default=32)
    p_extract.add_argument("--device", default="cpu")

    p_texts = sub.add_parser("embed-texts", help="embed object names")
    p_texts.add_argument("--out", required=True, type=Path)
    source = p_texts.add_mutually_exclusive_group(required=True)
    source.add_argument("--objects-file", type=Path, help="one object name per line")
    source.add_argument("--from-prompts", type=Path, help="collect object names from a prompt file")
    p_texts.add_argument("--backend", default="reference")
    p_texts.add_argument("--dim", type=int, default=64)
    p_texts.add_argument("--weights", default=None)
    p_texts.add_argument("--device", default="cpu")

    p_gen = sub.add_parser("generate", help="run a generation client over prompts")
    p_gen.add_argument("--prompts", required=True, type=Path)
    p_gen.add_argument("--out-dir", required=True, type=Path)
    p_gen.add_argument("--client", default="stub", help="'stub' or module:attr plugin spec")
    return parser


def _object_names(args: argparse.Namespace) -> list[str]:
    if args.objects_file is not None:
        names = [line.strip() for line in args.objects_file.read_text(encoding="utf-8").splitlines()]
        return [n for n in names if n]
    seen: dict[str, None] = {}
    for row in read_prompts(args.from_prompts):
        seen.setdefault(row.object)
    return list(seen)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "extract":
            backend = make_backend(args.backend, dim=args.dim, weights=args.weights, device=args.device)
            job = ExtractionJob(
                manifest_path=args.manifest,
                kind=args.kind,
                output_path=args.out,
                batch_size=args.batch_size,
                device=args.device,
            )
            count = run_extraction(job, backend)
            print(f"{args.out}: wrote {count} records (dim={backend.dim}, backend={backend.backend_id})")
            return 0
        if args.command == "embed-texts":
            backend = make_backend(args.backend, dim=args.dim, weights=args.weights, device=args.device)
            names = _object_names(args)
            count = embed_object_texts(names, backend, args.out)
            print(f"{args.out}: wrote {count} text embeddings")
            return 0
        if args.command == "generate":
            client = make_client(args.client)
            rows, failures = run_generation(args.prompts, client, args.out_dir)
            print(f"{args.out_dir / 'manifest.tsv'}: {len(rows)} rows, {len(failures)} failed")
            for failure in failures:
                print(f"  {failure}", file=sys.stderr)
            return 1 if failures else 0
    except (ModelLoadError, DecodeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
