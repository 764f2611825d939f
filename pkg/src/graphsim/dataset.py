"""Graph corpora: JSON Lines IO, synthetic generation, query/database splits and
ground-truth labels with an on-disk cache."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .assignment import assignment_ged
from .errors import (
    CacheCorrupt,
    CorpusTooSmall,
    GraphValidationError,
    InvalidConfig,
    MissingLabels,
    OracleFailure,
    ParseError,
    ValidationError,
)
from .ged import astar_ged, beam_ged, ged_to_similarity, normalized_ged
from .graph import Graph, validate_graph

GedOracle = Callable[[Graph, Graph], int]


@dataclass(frozen=True)
class Corpus:
    graphs: tuple[Graph, ...]
    vocab: tuple[str, ...]
    name: str = "corpus"
    seed: Optional[int] = None

    def __post_init__(self):
        ids = [g.id for g in self.graphs]
        if len(set(ids)) != len(ids):
            raise InvalidConfig("graph ids must be unique")
        missing = {label for g in self.graphs for label in g.labels} - set(self.vocab)
        if missing:
            raise InvalidConfig(f"vocabulary misses labels {sorted(missing)}")

    def __len__(self):
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    @cached_property
    def by_id(self) -> dict[str, Graph]:
        return {g.id: g for g in self.graphs}

    def __getitem__(self, gid: str) -> Graph:
        return self.by_id[gid]

    @property
    def ids(self) -> list[str]:
        return [g.id for g in self.graphs]

    @property
    def labeled(self) -> bool:
        return len(self.vocab) > 1


def _vocab_of(graphs: Iterable[Graph]) -> tuple[str, ...]:
    return tuple(sorted({label for g in graphs for label in g.labels}))


def load_corpus(path) -> Corpus:
    """Read one graph per line: ``{"id": str, "labels": [str], "edges": [[u, v]]}``."""
    path = Path(path)
    graphs = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, exc.msg) from None
            try:
                g = validate_graph(record)
            except GraphValidationError as exc:
                raise ValidationError(lineno, exc) from None
            if g.id in seen:
                raise ValidationError(lineno, f"duplicate graph id {g.id!r}")
            seen.add(g.id)
            graphs.append(g)
    return Corpus(tuple(graphs), _vocab_of(graphs), name=path.stem)


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for g in corpus.graphs:
            fh.write(json.dumps(g.to_record(), separators=(",", ":")) + "\n")


def generate_synthetic(
    count: int, max_nodes: int, label_count: int, seed: int, edge_prob: float = 0.2
) -> Corpus:
    """Random connected graphs with ``min(2, max_nodes)..max_nodes`` nodes.

    Each graph is a random spanning tree plus independent extra edges with
    probability ``edge_prob``; node labels are drawn uniformly from
    ``label_count`` symbols.
    """
    if count < 1 or max_nodes < 1 or label_count < 1:
        raise InvalidConfig("need count, max_nodes and label_count of at least 1")
    if not 0.0 <= edge_prob <= 1.0:
        raise InvalidConfig("edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    alphabet = [f"L{k}" for k in range(label_count)]
    width = len(str(count - 1))
    graphs = []
    for index in range(count):
        n = int(rng.integers(min(2, max_nodes), max_nodes + 1))
        perm = rng.permutation(n)
        edges = set()
        for k in range(1, n):
            parent = int(perm[rng.integers(0, k)])
            child = int(perm[k])
            edges.add((min(parent, child), max(parent, child)))
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < edge_prob:
                    edges.add((u, v))
        labels = [alphabet[int(i)] for i in rng.integers(0, label_count, size=n)]
        graphs.append(Graph.build(f"g{index:0{width}d}", labels, sorted(edges)))
    return Corpus(tuple(graphs), tuple(alphabet), name="synthetic", seed=seed)


@dataclass(frozen=True)
class Split:
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]

    @property
    def database(self) -> tuple[str, ...]:
        """Training plus validation graphs, the set queries are ranked against."""
        return self.train + self.val

    @property
    def queries(self) -> tuple[str, ...]:
        return self.test


def split_corpus(corpus: Corpus, ratios: Sequence[float] = (0.6, 0.2, 0.2), seed: int = 0) -> Split:
    """Deterministic train/val/test split.

    Validation and test sizes are rounded down; the remainder goes to training.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or not math.isclose(sum(ratios), 1.0):
        raise InvalidConfig(f"ratios must be three nonnegative numbers summing to 1, got {ratios}")
    n = len(corpus)
    if n < 5:
        raise CorpusTooSmall(f"need at least 5 graphs to split, got {n}")
    n_val = math.floor(ratios[1] * n + 1e-9)
    n_test = math.floor(ratios[2] * n + 1e-9)
    n_train = n - n_val - n_test
    ids = corpus.ids
    perm = np.random.default_rng(seed).permutation(n)
    picked = [ids[i] for i in perm]
    return Split(
        train=tuple(sorted(picked[:n_train])),
        val=tuple(sorted(picked[n_train : n_train + n_val])),
        test=tuple(sorted(picked[n_train + n_val :])),
    )


@dataclass(frozen=True)
class LabeledPair:
    id_a: str
    id_b: str
    ged: int
    nged: float
    sim: float

    @classmethod
    def from_ged(cls, id_a: str, id_b: str, ged: int, n_a: int, n_b: int) -> "LabeledPair":
        return cls(id_a, id_b, int(ged), normalized_ged(ged, n_a, n_b), ged_to_similarity(ged, n_a, n_b))


def training_pairs(split: Split) -> list[tuple[str, str]]:
    return [(a, b) for a in split.train for b in split.database]


def validation_pairs(split: Split) -> list[tuple[str, str]]:
    return [(a, b) for a in split.val for b in split.val]


def evaluation_pairs(split: Split) -> list[tuple[str, str]]:
    return [(q, d) for q in split.test for d in split.database]


def cache_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


class LabelCache:
    """Append-only JSON Lines store of ``{"a", "b", "ged"}`` records.

    Keys are order-normalized, since GED is symmetric.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self.values: dict[tuple[str, str], int] = {}
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    a, b, ged = rec["a"], rec["b"], rec["ged"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise CacheCorrupt(f"{self.path}:{lineno}: {exc}") from None
                if not isinstance(a, str) or not isinstance(b, str):
                    raise CacheCorrupt(f"{self.path}:{lineno}: ids must be strings")
                if not isinstance(ged, int) or isinstance(ged, bool) or ged < 0:
                    raise CacheCorrupt(f"{self.path}:{lineno}: ged must be a nonnegative integer")
                key = cache_key(a, b)
                if self.values.get(key, ged) != ged:
                    raise CacheCorrupt(f"{self.path}:{lineno}: conflicting ged for {key}")
                self.values[key] = ged

    def __contains__(self, pair) -> bool:
        return cache_key(*pair) in self.values

    def __len__(self):
        return len(self.values)

    def get(self, a: str, b: str) -> int:
        try:
            return self.values[cache_key(a, b)]
        except KeyError:
            raise MissingLabels(f"no ground truth for pair ({a}, {b})") from None

    def add_many(self, items: Iterable[tuple[tuple[str, str], int]]) -> None:
        new = []
        for pair, ged in items:
            key = cache_key(*pair)
            if key not in self.values:
                self.values[key] = int(ged)
                new.append((key, int(ged)))
        if self.path is not None and new:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                for (a, b), ged in new:
                    fh.write(json.dumps({"a": a, "b": b, "ged": ged}, separators=(",", ":")) + "\n")

    def labeled(self, corpus: Corpus, pairs: Iterable[tuple[str, str]]) -> list[LabeledPair]:
        out = []
        for a, b in pairs:
            ged = self.get(a, b)
            out.append(LabeledPair.from_ged(a, b, ged, corpus[a].n, corpus[b].n))
        return out


def min_upper_bound_ged(g1: Graph, g2: Graph, beam_width: int = 10) -> int:
    """Smallest of the beam, Hungarian and Jonker-Volgenant upper bounds."""
    return min(
        beam_ged(g1, g2, beam_width),
        assignment_ged(g1, g2, "hungarian"),
        assignment_ged(g1, g2, "jonker_volgenant"),
    )


ORACLES: dict[str, GedOracle] = {"exact": astar_ged, "min_upper": min_upper_bound_ged}


def _run_oracle(job):
    oracle, key, g1, g2 = job
    try:
        return key, int(oracle(g1, g2)), None
    except Exception as exc:  # reported as OracleFailure by the caller
        return key, None, repr(exc)


def compute_labels(
    pairs: Iterable[tuple[str, str]],
    corpus: Corpus,
    oracle: GedOracle = astar_ged,
    cache: Optional[LabelCache] = None,
    workers: int = 1,
) -> LabelCache:
    """Fill ``cache`` with GED values for every pair it does not hold yet."""
    cache = cache if cache is not None else LabelCache()
    todo = []
    queued = set()
    for a, b in pairs:
        key = cache_key(a, b)
        if key in cache.values or key in queued:
            continue
        queued.add(key)
        todo.append((oracle, key, corpus[key[0]], corpus[key[1]]))
    if not todo:
        return cache

    def consume(results):
        batch = []
        for key, ged, error in results:
            if error is not None:
                cache.add_many(batch)
                raise OracleFailure(key, error)
            batch.append((key, ged))
            if len(batch) >= 256:
                cache.add_many(batch)
                batch = []
        cache.add_many(batch)

    if workers > 1:
        import multiprocessing

        with multiprocessing.get_context("spawn").Pool(workers) as pool:
            consume(pool.imap(_run_oracle, todo, chunksize=16))
    else:
        consume(map(_run_oracle, todo))
    return cache


def label_pairs(
    split: Split,
    corpus: Corpus,
    oracle: GedOracle = astar_ged,
    cache_path=None,
    workers: int = 1,
) -> list[LabeledPair]:
    """Ground truth for training, validation and evaluation pairs, in that order.

    Values already present in ``cache_path`` are reused; new ones are appended.
    """
    groups = [training_pairs(split), validation_pairs(split), evaluation_pairs(split)]
    cache = LabelCache(cache_path)
    compute_labels((p for group in groups for p in group), corpus, oracle, cache, workers)
    return [lp for group in groups for lp in cache.labeled(corpus, group)]
