import argparse
import logging
import sys
from pathlib import Path

from .export import ExportError, ExportJob, export


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dmner-export",
        description="Encode surface strings with a transformer model and "
                    "write a dmner embedding-store file.",
    )
    parser.add_argument("--names", type=Path, required=True,
                        help="input file, one surface string per line")
    parser.add_argument("--model", required=True,
                        help="model identifier or local model directory")
    parser.add_argument("--out", type=Path, required=True,
                        help="output store file")
    parser.add_argument("--batch", type=int, default=64)
    parser.add_argument("--pooling", choices=("cls", "mean"), default="cls")
    parser.add_argument("--normalize", action=argparse.BooleanOptionalAction,
                        default=True, help="L2-normalize vectors (default on)")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    try:
        job = ExportJob(args.names, args.model, args.out,
                        batch_size=args.batch, pooling=args.pooling,
                        normalize=args.normalize)
        count, dim = export(job)
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out} ({count} vectors, dim {dim})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
