#!/usr/bin/env python3
"""Build a lbpspot manifest from a directory of word images and a labels file.

The labels file has one word image per line: a path relative to --images,
whitespace, then the transcription (which may be empty for unlabeled
words). The page id is pulled out of the image's basename with
--page-regex, and pages listed in --test-pages form the test split while
every other page lands in train.

Example, for a layout like words/305/305-01-02.png with labels.txt lines
"305/305-01-02.png orders":

    scripts/make_manifest.py \
        --images /data/gw/words \
        --labels /data/gw/labels.txt \
        --page-regex '^(\\d+)' \
        --test-pages 305,306,307,308,309 \
        --output gw.tsv
"""

import argparse
import os
import re
import sys


def main() -> int:
    parser = argparse.ArgumentParser(
        description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument("--images", required=True, help="root directory of word images")
    parser.add_argument(
        "--labels",
        required=True,
        help="file of lines: relative-path [transcription]",
    )
    parser.add_argument(
        "--page-regex",
        default=r"^(\d+)",
        help="regex whose first group, matched against the basename, is the page id",
    )
    parser.add_argument(
        "--test-pages",
        default="",
        help="comma-separated page ids that form the test split",
    )
    parser.add_argument(
        "--lowercase",
        action="store_true",
        help="lowercase transcriptions in the manifest",
    )
    parser.add_argument("--output", "-o", required=True, help="manifest to write")
    args = parser.parse_args()

    page_re = re.compile(args.page_regex)
    test_pages = {p.strip() for p in args.test_pages.split(",") if p.strip()}
    out_dir = os.path.dirname(os.path.abspath(args.output)) or "."

    rows = []
    missing = 0
    with open(args.labels, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split(None, 1)
            rel = parts[0]
            transcription = parts[1].strip() if len(parts) > 1 else ""
            if args.lowercase:
                transcription = transcription.lower()
            if "\t" in transcription:
                print(
                    f"{args.labels}:{lineno}: transcription contains a tab",
                    file=sys.stderr,
                )
                return 1

            source = os.path.join(args.images, rel)
            if not os.path.isfile(source):
                print(f"warning: missing image {source}", file=sys.stderr)
                missing += 1
                continue

            match = page_re.search(os.path.basename(rel))
            if not match:
                print(
                    f"{args.labels}:{lineno}: page regex does not match {rel!r}",
                    file=sys.stderr,
                )
                return 1
            page = match.group(1)
            split = "test" if page in test_pages else "train"
            rows.append((os.path.relpath(source, out_dir), transcription, page, split))

    if not rows:
        print("no usable rows; nothing written", file=sys.stderr)
        return 1

    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("# generated by make_manifest.py\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")

    by_split = {}
    for _, _, _, split in rows:
        by_split[split] = by_split.get(split, 0) + 1
    print(
        f"wrote {len(rows)} rows to {args.output} "
        f"({by_split.get('train', 0)} train, {by_split.get('test', 0)} test, "
        f"{missing} missing images skipped)"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
