"""One-shot command line front end: convert <source_dir> <name> <out.json>."""

import argparse
import sys

from .convert import VAL_SIZE, SourceError, convert


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="planetoid-convert",
        description="Convert a pickled ind.* citation dataset directory "
                    "into the classifier's JSON dataset format")
    parser.add_argument("source_dir", help="directory holding the ind.<name>.* files")
    parser.add_argument("name", help="dataset name (cora, citeseer, pubmed)")
    parser.add_argument("out_path", help="output JSON path; manifest lands beside it")
    parser.add_argument("--val-size", type=int, default=VAL_SIZE)
    args = parser.parse_args(argv)
    try:
        manifest = convert(args.source_dir, args.name, args.out_path,
                           val_size=args.val_size)
    except SourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{manifest.dataset}: {manifest.nodes} nodes, "
          f"{manifest.features} features, {manifest.classes} classes, "
          f"{manifest.edges} edges; splits {manifest.splits}")
    print(f"wrote {args.out_path} and {args.out_path}.manifest.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
