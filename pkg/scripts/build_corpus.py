"""
Corpus Builder - Writes the seeded test-field corpus to disk

The GNS and Poincare-Wirtinger suites evaluate their ratios over a fixed
set of compactly supported fields. This script builds that set once and
caches it as field dumps plus an index.csv, so later runs and notebooks can
load the identical fields with src.core.inequalities.load_corpus.

Usage:
    python scripts/build_corpus.py --output corpus --seed 0
    python scripts/build_corpus.py --output corpus --d 3 --h 0.0625 --size 16
"""

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.core.errors import GridError  # noqa: E402
from src.core.inequalities import CORPUS_SIZE, build_corpus, default_corpus_domain, save_corpus  # noqa: E402

# === DEFAULTS ===
DEFAULT_OUTPUT = Path("corpus")
DEFAULT_H = 1.0 / 32
DEFAULT_SUPPORT = 0.75

logger = logging.getLogger("build_corpus")


def main() -> int:
    parser = argparse.ArgumentParser(description="Build and cache the seeded field corpus")
    parser.add_argument("--output", type=Path, default=DEFAULT_OUTPUT)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--d", type=int, default=2)
    parser.add_argument("--h", type=float, default=DEFAULT_H)
    parser.add_argument("--size", type=int, default=CORPUS_SIZE)
    parser.add_argument("--support", type=float, default=DEFAULT_SUPPORT)
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
                        datefmt="%H:%M:%S")

    if (args.output / "index.csv").exists():
        logger.warning(f"Overwriting corpus at {args.output}")
    try:
        domain = default_corpus_domain(args.d, 1.0, args.h)
        corpus = build_corpus(domain, seed=args.seed, size=args.size, support=args.support)
    except GridError as e:
        logger.error(f"Cannot build corpus: {e}")
        return 2
    save_corpus(args.output, corpus)
    kinds = {}
    for entry in corpus:
        kinds[entry.kind] = kinds.get(entry.kind, 0) + 1
    logger.info(f"{len(corpus)} fields on {domain.shape}: "
                + ", ".join(f"{n} {kind}" for kind, n in sorted(kinds.items())))
    return 0


if __name__ == "__main__":
    sys.exit(main())
