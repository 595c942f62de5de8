"""`coldbrew-convert --name cora --out bundles/cora [--source DIR_OR_URL]`."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .convert import REGISTRY, ConversionError, SourceSpec, convert


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="coldbrew-convert", description=__doc__)
    parser.add_argument("--name", required=True,
                        help=f"dataset name; registry: {', '.join(sorted(REGISTRY))}")
    parser.add_argument("--out", required=True)
    parser.add_argument("--source", help="local directory or archive URL override")
    parser.add_argument("--expect-nodes", type=int, dest="expected_nodes")
    parser.add_argument("--expect-classes", type=int, dest="expected_classes")
    parser.add_argument("--expect-dim", type=int, dest="expected_dim")
    parser.add_argument("--layout", choices=("content", "pubmed"))
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    spec = REGISTRY.get(args.name)
    overrides = {k: v for k, v in vars(args).items()
                 if k in ("expected_nodes", "expected_classes", "expected_dim", "layout")
                 and v is not None}
    if args.source:
        overrides["source"] = args.source
    if spec is None:
        required = ("expected_nodes", "expected_classes", "expected_dim")
        if not args.source or any(overrides.get(k) is None for k in required):
            print(f"error: unknown dataset {args.name!r}; pass --source and the "
                  "--expect-* values", file=sys.stderr)
            return 2
        spec = SourceSpec(name=args.name, source=args.source,
                          expected_nodes=overrides["expected_nodes"],
                          expected_classes=overrides["expected_classes"],
                          expected_dim=overrides["expected_dim"],
                          layout=overrides.get("layout", "content"))
    elif overrides:
        spec = dataclasses.replace(spec, **overrides)

    try:
        log = convert(spec, args.out)
    except ConversionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("\n".join(log.lines()))
    return 0


if __name__ == "__main__":
    sys.exit(main())
