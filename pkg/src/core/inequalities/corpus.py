"""
Seeded field corpus for inequality statistics.

32 compactly supported scalar fields on a square box: smooth random fields
(coarse noise refined by spline zoom and multiplied by a cutoff), tents and
ball indicators. The corpus can be cached on disk and verified on reload.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from scipy import ndimage

from ..errors import GridError
from ..fields import GridDomain, GridFunction, load_field, save_field


logger = logging.getLogger(__name__)

CORPUS_SIZE = 32
KINDS = ("smooth", "tent", "indicator")
INDEX_FILE = "index.csv"


@dataclass
class CorpusField:
    corpus_id: int
    kind: str
    field: GridFunction
    seed: Optional[int] = None


def default_corpus_domain(d: int = 2, half_width: float = 1.0, h: float = 1.0 / 32) -> GridDomain:
    return GridDomain.cube(d, half_width, h)


def _cutoff(radius: np.ndarray, support: float) -> np.ndarray:
    """Smooth bump, 1 at the center, 0 from `support` on."""
    t = np.clip(radius / support, 0.0, 1.0)
    return np.where(t < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - t * t, 1e-300)), 0.0)


def _smooth(domain: GridDomain, rng: np.random.Generator, support: float) -> np.ndarray:
    coarse = rng.standard_normal((8,) * domain.d)
    zoom = [n / 8.0 for n in domain.shape]
    fine = ndimage.zoom(coarse, zoom, order=3, mode="nearest")
    fine = fine[tuple(slice(0, n) for n in domain.shape)]
    radius = np.linalg.norm(domain.centers(), axis=-1)
    return fine * _cutoff(radius, support)


def _tent(domain: GridDomain, rng: np.random.Generator, support: float) -> np.ndarray:
    width = rng.uniform(0.25, 0.5) * support
    center = rng.uniform(-1.0, 1.0, domain.d) * (support - width) / np.sqrt(domain.d)
    radius = np.linalg.norm(domain.centers() - center, axis=-1)
    return rng.uniform(0.5, 2.0) * np.clip(1.0 - radius / width, 0.0, None)


def _indicator(domain: GridDomain, rng: np.random.Generator, support: float) -> np.ndarray:
    width = rng.uniform(0.2, 0.5) * support
    center = rng.uniform(-1.0, 1.0, domain.d) * (support - width) / np.sqrt(domain.d)
    radius = np.linalg.norm(domain.centers() - center, axis=-1)
    return np.where(radius < width, rng.uniform(0.5, 2.0), 0.0)


_BUILDERS = {"smooth": _smooth, "tent": _tent, "indicator": _indicator}


def build_corpus(domain: Optional[GridDomain] = None, seed: int = 0,
                 size: int = CORPUS_SIZE, support: float = 0.75) -> List[CorpusField]:
    """
    Build the seeded corpus, cycling through the field kinds.

    Every field vanishes outside B_support and carries exterior value 0.

    Raises:
        GridError: If the support ball does not fit in the box
    """
    domain = domain or default_corpus_domain()
    if support >= min(min(abs(a) for a in domain.origin), min(domain.upper)):
        raise GridError(f"Support radius {support} does not fit in the box {domain.describe()}")
    rng = np.random.default_rng(seed)
    corpus = []
    for corpus_id in range(size):
        kind = KINDS[corpus_id % len(KINDS)]
        values = _BUILDERS[kind](domain, rng, support)
        u = GridFunction(domain, values, exterior=np.zeros(1))
        if u.is_zero():
            # indicator smaller than a cell; fall back to a tent at the origin
            values = np.clip(1.0 - np.linalg.norm(domain.centers(), axis=-1) / support, 0.0, None)
            u = GridFunction(domain, values, exterior=np.zeros(1))
        corpus.append(CorpusField(corpus_id, kind, u, seed))
    logger.info(f"Corpus built: {size} fields, seed={seed}, shape={domain.shape}")
    return corpus


def _shape_key(values) -> str:
    return "x".join(format(v, ".17g") for v in values)


def save_corpus(directory: Union[str, Path], corpus: List[CorpusField]) -> Path:
    """Write one field dump per entry plus an index table."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for entry in corpus:
        name = f"field_{entry.corpus_id:03d}.nlhg"
        save_field(directory / name, entry.field)
        dom = entry.field.domain
        rows.append({"corpus_id": entry.corpus_id, "kind": entry.kind, "file": name,
                     "l2": float(np.linalg.norm(entry.field.values)),
                     "seed": -1 if entry.seed is None else entry.seed,
                     "shape": _shape_key(dom.shape), "h": dom.h,
                     "origin": _shape_key(dom.origin)})
    pd.DataFrame(rows).to_csv(directory / INDEX_FILE, index=False, float_format="%.17g")
    logger.info(f"Corpus cached at: {directory}")
    return directory


def corpus_exists(directory: Union[str, Path]) -> bool:
    exists = (Path(directory) / INDEX_FILE).exists()
    if exists:
        logger.info(f"Corpus found at {directory}")
    else:
        logger.info(f"Corpus not found at {directory}")
    return exists


def load_corpus(directory: Union[str, Path], verify: bool = True) -> List[CorpusField]:
    """
    Read a cached corpus.

    Raises:
        GridError: Missing index, or a field whose norm disagrees with the index
    """
    directory = Path(directory)
    if not corpus_exists(directory):
        raise GridError(f"No corpus index in {directory}")
    index = pd.read_csv(directory / INDEX_FILE)
    corpus = []
    for row in index.itertuples(index=False):
        u = load_field(directory / row.file)
        if verify and not np.isclose(np.linalg.norm(u.values), row.l2, rtol=1e-12, atol=0.0):
            raise GridError(f"Corpus field {row.corpus_id} does not match its index entry")
        seed = getattr(row, "seed", -1)
        corpus.append(CorpusField(int(row.corpus_id), str(row.kind), u,
                                  None if seed < 0 else int(seed)))
    return corpus


def _index_matches(directory: Path, domain: GridDomain, seed: int) -> bool:
    """True when the cached index was built from `seed` on the grid of `domain`."""
    index = pd.read_csv(directory / INDEX_FILE, dtype={"shape": str, "origin": str})
    if not {"seed", "shape", "h", "origin"} <= set(index.columns):
        return False
    return bool((index["seed"] == seed).all()
                and (index["shape"] == _shape_key(domain.shape)).all()
                and (index["origin"] == _shape_key(domain.origin)).all()
                and np.allclose(index["h"], domain.h, rtol=1e-12, atol=0.0))


def cached_corpus(directory: Union[str, Path], domain: Optional[GridDomain] = None,
                  seed: int = 0) -> List[CorpusField]:
    """
    Load the corpus from `directory`, building and saving it first if absent.

    A cache built from another seed or grid is rebuilt in place.
    """
    directory = Path(directory)
    domain = domain or default_corpus_domain()
    if corpus_exists(directory):
        if _index_matches(directory, domain, seed):
            return load_corpus(directory)
        logger.warning(f"Corpus at {directory} was built for another seed or grid; rebuilding")
        for stale in directory.glob("field_*.nlhg"):
            stale.unlink()
    corpus = build_corpus(domain, seed)
    save_corpus(directory, corpus)
    return corpus
