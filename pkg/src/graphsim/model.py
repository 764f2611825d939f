"""GSimCNN: multi-scale GCN embeddings, node-node interaction matrices,
per-scale CNNs and a dense head producing a similarity score in (0, 1).

Also holds the EmbAvg baseline and the training loop shared by both models.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np

from . import nn
from .dataset import Corpus, LabelCache, Split, training_pairs, validation_pairs
from .errors import DivergenceDetected, EmptyTrainingSet, InvalidConfig, ShapeMismatch
from .graph import Graph, bfs_order, initial_features, normalized_adjacency
from .nn import Tape, Tensor

log = logging.getLogger(__name__)

MatrixMode = Literal["resize", "pad_only"]


@dataclass(frozen=True)
class ConvStage:
    """``conv(window, stride, in_channels, out_channels)`` then ``maxpool(pool)``."""

    window: int
    stride: int
    in_channels: int
    out_channels: int
    pool: int


DEFAULT_CNN = (
    ConvStage(6, 1, 1, 16, 2),
    ConvStage(6, 1, 16, 32, 2),
    ConvStage(5, 1, 32, 64, 2),
    ConvStage(5, 1, 64, 128, 3),
    ConvStage(5, 1, 128, 128, 3),
)


@dataclass(frozen=True)
class ModelConfig:
    vocab: Optional[tuple[str, ...]] = None
    gcn_dims: tuple[int, ...] = (64, 32, 16)
    resize_m: int = 10
    cnn_spec: tuple[ConvStage, ...] = DEFAULT_CNN
    dense_dims: tuple[int, ...] = (32, 1)
    scales_used: tuple[int, ...] = (1, 2, 3)
    matrix_mode: MatrixMode = "resize"
    dtype: str = "float32"
    seed: int = 0

    def __post_init__(self):
        if self.resize_m < 1:
            raise InvalidConfig("resize_m must be at least 1")
        if not self.gcn_dims:
            raise InvalidConfig("at least one GCN layer is required")
        if not self.dense_dims or self.dense_dims[-1] != 1:
            raise InvalidConfig("the dense head must end in width 1")
        if not self.scales_used or any(s < 1 or s > len(self.gcn_dims) for s in self.scales_used):
            raise InvalidConfig(f"scales must be drawn from 1..{len(self.gcn_dims)}")
        if self.matrix_mode not in ("resize", "pad_only"):
            raise InvalidConfig(f"unknown matrix mode {self.matrix_mode!r}")
        if self.cnn_spec and self.cnn_spec[0].in_channels != 1:
            raise InvalidConfig("the first CNN stage must take one input channel")
        for prev, nxt in zip(self.cnn_spec, self.cnn_spec[1:]):
            if prev.out_channels != nxt.in_channels:
                raise InvalidConfig("CNN stage channels do not chain")

    @property
    def input_dim(self) -> int:
        return 1 if self.vocab is None else len(self.vocab)

    @classmethod
    def for_corpus(cls, corpus: Corpus, **overrides) -> "ModelConfig":
        vocab = corpus.vocab if corpus.labeled else None
        return cls(vocab=vocab, **overrides)

    def with_(self, **changes) -> "ModelConfig":
        data = asdict(self)
        data.update(changes)
        return ModelConfig.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        data = dict(data)
        if data.get("vocab") is not None:
            data["vocab"] = tuple(data["vocab"])
        for key in ("gcn_dims", "dense_dims", "scales_used"):
            if key in data:
                data[key] = tuple(data[key])
        if "cnn_spec" in data:
            data["cnn_spec"] = tuple(s if isinstance(s, ConvStage) else ConvStage(**s) for s in data["cnn_spec"])
        return cls(**data)


def cnn_trace(config: ModelConfig) -> list[int]:
    """Spatial size of the interaction image after each pooling stage."""
    size = config.resize_m
    sizes = []
    for stage in config.cnn_spec:
        size = math.ceil(size / stage.stride)
        size = math.ceil(size / stage.pool)
        sizes.append(size)
    return sizes


def feature_width(config: ModelConfig) -> int:
    """Width of the concatenated CNN outputs fed to the dense head."""
    if config.cnn_spec:
        side = cnn_trace(config)[-1]
        per_scale = config.cnn_spec[-1].out_channels * side * side
    else:
        per_scale = config.resize_m * config.resize_m
    return per_scale * len(config.scales_used)


def _glorot(rng, shape, fan_in, fan_out, dtype):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def init_gcn_params(config: ModelConfig, rng) -> dict[str, Tensor]:
    params = {}
    dims = (config.input_dim,) + tuple(config.gcn_dims)
    for layer, (d_in, d_out) in enumerate(zip(dims, dims[1:]), start=1):
        params[f"gcn{layer}.W"] = _glorot(rng, (d_in, d_out), d_in, d_out, config.dtype)
        params[f"gcn{layer}.b"] = np.zeros(d_out, dtype=config.dtype)
    return {k: Tensor(v, requires_grad=True, name=k) for k, v in params.items()}


def init_params(config: ModelConfig) -> dict[str, Tensor]:
    """Seeded initial weights: uniform Glorot for matrices and kernels, zero biases."""
    rng = np.random.default_rng(config.seed)
    params = init_gcn_params(config, rng)
    raw = {}
    for scale in config.scales_used:
        for i, st in enumerate(config.cnn_spec, start=1):
            k = st.window
            raw[f"cnn{scale}.conv{i}.W"] = _glorot(
                rng, (st.out_channels, st.in_channels, k, k), st.in_channels * k * k, st.out_channels * k * k, config.dtype
            )
            raw[f"cnn{scale}.conv{i}.b"] = np.zeros(st.out_channels, dtype=config.dtype)
    dims = (feature_width(config),) + tuple(config.dense_dims)
    for i, (d_in, d_out) in enumerate(zip(dims, dims[1:]), start=1):
        raw[f"dense{i}.W"] = _glorot(rng, (d_in, d_out), d_in, d_out, config.dtype)
        raw[f"dense{i}.b"] = np.zeros(d_out, dtype=config.dtype)
    params.update({k: Tensor(v, requires_grad=True, name=k) for k, v in raw.items()})
    return params


def gcn_layer(h, adj, w, b) -> Tensor:
    """``ReLU(adj @ h @ w + b)`` with ``adj`` the self-looped, degree-normalized adjacency."""
    h, adj = nn.as_tensor(h), nn.as_tensor(adj)
    if adj.shape[-1] != h.shape[-2] or adj.shape[-2] != adj.shape[-1]:
        raise ShapeMismatch(f"adjacency {adj.shape} does not match embeddings {h.shape}")
    return nn.relu(nn.add(nn.matmul(adj, nn.matmul(h, w)), b))


def interaction_matrix(h1, h2, m: int, mode: MatrixMode = "resize") -> Tensor:
    """Inner products between all node pairs of two graphs at one scale.

    The smaller embedding matrix is padded with zero rows to ``max(N1, N2)``.
    ``mode="resize"`` resamples the product to ``m x m``; ``mode="pad_only"``
    returns it unresized.
    """
    h1, h2 = nn.as_tensor(h1), nn.as_tensor(h2)
    if h1.ndim != 2 or h2.ndim != 2 or h1.shape[1] != h2.shape[1]:
        raise ShapeMismatch(f"embeddings must be N x D with equal D, got {h1.shape} and {h2.shape}")
    n = max(h1.shape[0], h2.shape[0])

    def pad(h):
        missing = n - h.shape[0]
        if missing == 0:
            return h
        return nn.concat([h, np.zeros((missing, h.shape[1]), dtype=h.dtype)], axis=0)

    s = nn.matmul(pad(h1), nn.transpose(pad(h2)))
    if mode == "resize":
        return nn.bilinear_resize(s, m)
    if mode == "pad_only":
        return s
    raise InvalidConfig(f"unknown matrix mode {mode!r}")


@dataclass
class GraphInput:
    """BFS-ordered GCN inputs for one graph."""

    n: int
    features: np.ndarray
    adjacency: np.ndarray


def prepare_graph(g: Graph, vocab, dtype) -> GraphInput:
    order = bfs_order(g)
    h = initial_features(g, vocab)[order]
    a = normalized_adjacency(g)[np.ix_(order, order)]
    return GraphInput(g.n, h.astype(dtype), a.astype(dtype))


def _stack_side(inputs: Sequence[GraphInput], nmax: int, dim: int, dtype):
    b = len(inputs)
    x = np.zeros((b, nmax, dim), dtype=dtype)
    a = np.zeros((b, nmax, nmax), dtype=dtype)
    mask = np.zeros((b, nmax, 1), dtype=dtype)
    for i, gi in enumerate(inputs):
        x[i, : gi.n] = gi.features
        a[i, : gi.n, : gi.n] = gi.adjacency
        mask[i, : gi.n] = 1
    return x, a, mask


class _PairModel:
    """Shared plumbing: parameter storage, input caching, batched scoring, IO."""

    kind = "base"

    def __init__(self, config: ModelConfig, params: Optional[dict[str, Tensor]] = None):
        self.config = config
        self.params = params if params is not None else self.init_params(config)
        self._inputs: dict[Graph, GraphInput] = {}

    def init_params(self, config):
        raise NotImplementedError

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        if set(state) != set(self.params):
            raise ShapeMismatch("parameter names differ from the model's")
        for k, arr in state.items():
            if arr.shape != self.params[k].shape:
                raise ShapeMismatch(f"{k}: shape {arr.shape} != {self.params[k].shape}")
            self.params[k].data = np.array(arr, dtype=self.config.dtype)

    def graph_input(self, g: Graph) -> GraphInput:
        gi = self._inputs.get(g)
        if gi is None:
            gi = self._inputs[g] = prepare_graph(g, self.config.vocab, self.config.dtype)
        return gi

    def embed(self, inputs: Sequence[GraphInput], nmax: int) -> tuple[list[Tensor], np.ndarray]:
        """Per-layer node embeddings for a batch, zero beyond each graph's size."""
        x, a, mask = _stack_side(inputs, nmax, self.config.input_dim, self.config.dtype)
        h = Tensor(x)
        layers = []
        for layer in range(1, len(self.config.gcn_dims) + 1):
            h = gcn_layer(h, a, self.params[f"gcn{layer}.W"], self.params[f"gcn{layer}.b"])
            h = nn.mul(h, mask)
            layers.append(h)
        return layers, mask

    def forward_batch(self, pairs: Sequence[tuple[Graph, Graph]]) -> Tensor:
        raise NotImplementedError

    def predict(self, pairs: Sequence[tuple[Graph, Graph]], batch_size: int = 256) -> np.ndarray:
        out = []
        for start in range(0, len(pairs), batch_size):
            out.append(self.forward_batch(pairs[start : start + batch_size]).data.astype(np.float64))
        return np.concatenate(out) if out else np.zeros(0)

    def score(self, g1: Graph, g2: Graph) -> float:
        return float(self.predict([(g1, g2)])[0])

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        nn.save_params(directory / "params.json", self.state())
        meta = {"model": self.kind, "config": self.config.to_dict()}
        (directory / "config.json").write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")


class GSimCNN(_PairModel):
    kind = "gsimcnn"

    def init_params(self, config):
        return init_params(config)

    def resize_operators(self, pairs_n: Sequence[tuple[int, int]], nmax: int) -> np.ndarray:
        """Per-pair ``m x nmax`` matrices ``R`` with ``R S R^T`` the resized
        (or zero-embedded, in pad_only mode) interaction image."""
        m = self.config.resize_m
        r = np.zeros((len(pairs_n), m, nmax), dtype=self.config.dtype)
        for i, (n1, n2) in enumerate(pairs_n):
            n = max(n1, n2)
            if self.config.matrix_mode == "resize":
                r[i, :, :n] = nn.interpolation_matrix(n, m)
            else:
                if n > m:
                    raise ShapeMismatch(f"pad_only mode needs graphs of at most {m} nodes, got {n}")
                r[i, np.arange(n), np.arange(n)] = 1.0
        return r

    def images(self, pairs: Sequence[tuple[Graph, Graph]]) -> dict[int, Tensor]:
        """``B x m x m`` interaction images per scale."""
        in1 = [self.graph_input(a) for a, _ in pairs]
        in2 = [self.graph_input(b) for _, b in pairs]
        nmax = max(gi.n for gi in in1 + in2)
        h1, _ = self.embed(in1, nmax)
        h2, _ = self.embed(in2, nmax)
        r = Tensor(self.resize_operators([(a.n, b.n) for a, b in zip(in1, in2)], nmax))
        rt = nn.transpose(r)
        out = {}
        for scale in self.config.scales_used:
            s = nn.matmul(h1[scale - 1], nn.transpose(h2[scale - 1]))
            out[scale] = nn.matmul(nn.matmul(r, s), rt)
        return out

    def forward_batch(self, pairs: Sequence[tuple[Graph, Graph]]) -> Tensor:
        b = len(pairs)
        m = self.config.resize_m
        feats = []
        for scale, img in self.images(pairs).items():
            x = nn.reshape(img, (b, 1, m, m))
            for i, st in enumerate(self.config.cnn_spec, start=1):
                x = nn.conv2d(x, self.params[f"cnn{scale}.conv{i}.W"], self.params[f"cnn{scale}.conv{i}.b"], st.stride)
                x = nn.maxpool2d(nn.relu(x), st.pool)
            feats.append(nn.reshape(x, (b, -1)))
        z = nn.concat(feats, axis=1) if len(feats) > 1 else feats[0]
        n_dense = len(self.config.dense_dims)
        for i in range(1, n_dense + 1):
            z = nn.add(nn.matmul(z, self.params[f"dense{i}.W"]), self.params[f"dense{i}.b"])
            if i < n_dense:
                z = nn.relu(z)
        return nn.sigmoid(nn.reshape(z, (b,)))


class EmbAvg(_PairModel):
    """Baseline: sigmoid of the dot product of mean last-layer node embeddings."""

    kind = "embavg"

    def init_params(self, config):
        return init_gcn_params(config, np.random.default_rng(config.seed))

    def graph_embeddings(self, inputs: Sequence[GraphInput], nmax: int) -> Tensor:
        layers, mask = self.embed(inputs, nmax)
        counts = mask.sum(axis=1, keepdims=True)
        weights = np.swapaxes(mask / counts, 1, 2)
        return nn.matmul(Tensor(weights), layers[-1])

    def forward_batch(self, pairs: Sequence[tuple[Graph, Graph]]) -> Tensor:
        in1 = [self.graph_input(a) for a, _ in pairs]
        in2 = [self.graph_input(b) for _, b in pairs]
        nmax = max(gi.n for gi in in1 + in2)
        e1 = self.graph_embeddings(in1, nmax)
        e2 = self.graph_embeddings(in2, nmax)
        dot = nn.tensor_sum(nn.mul(e1, e2), axis=-1)
        return nn.sigmoid(nn.reshape(dot, (len(pairs),)))


MODELS = {"gsimcnn": GSimCNN, "embavg": EmbAvg}


def load_model(directory) -> _PairModel:
    directory = Path(directory)
    meta = json.loads((directory / "config.json").read_text(encoding="utf-8"))
    cls = MODELS[meta["model"]]
    model = cls(ModelConfig.from_dict(meta["config"]))
    model.load_state(nn.load_params(directory / "params.json"))
    return model


def forward(g1: Graph, g2: Graph, params: dict[str, Tensor], config: ModelConfig) -> float:
    """Predicted similarity of one pair."""
    return GSimCNN(config, params).score(g1, g2)


def embavg_score(g1: Graph, g2: Graph, params: dict[str, Tensor], config: ModelConfig) -> float:
    return EmbAvg(config, params).score(g1, g2)


@dataclass
class TrainConfig:
    iterations: int = 2000
    batch_size: int = 128
    lr: float = 0.001
    seed: int = 0
    eval_every: int = 100


@dataclass
class TrainResult:
    model: _PairModel
    history: list[dict] = field(default_factory=list)
    best_iteration: Optional[int] = None
    best_val_loss: Optional[float] = None


def _targets(pairs, corpus: Corpus, labels: LabelCache) -> np.ndarray:
    return np.array([lp.sim for lp in labels.labeled(corpus, pairs)])


def evaluate_loss(model: _PairModel, corpus: Corpus, pairs, targets, batch_size: int = 512) -> float:
    graphs = [(corpus[a], corpus[b]) for a, b in pairs]
    pred = model.predict(graphs, batch_size)
    return float(np.mean((pred - targets) ** 2))


def train(
    model: _PairModel,
    corpus: Corpus,
    split: Split,
    labels: LabelCache,
    hyper: TrainConfig = TrainConfig(),
    train_pairs: Optional[Sequence[tuple[str, str]]] = None,
    val_pairs: Optional[Sequence[tuple[str, str]]] = None,
) -> TrainResult:
    """Minimize the squared error between predicted and true similarity with Adam.

    Batches are sampled with replacement; within a batch every other pair is
    fed in swapped orientation, alternating with the iteration parity. The
    model is evaluated on the validation pairs every ``hyper.eval_every``
    iterations (and after the last one) and the parameters with the lowest
    validation loss are restored at the end.
    """
    train_pairs = list(training_pairs(split) if train_pairs is None else train_pairs)
    val_pairs = list(validation_pairs(split) if val_pairs is None else val_pairs)
    result = TrainResult(model)
    if hyper.iterations <= 0:
        return result
    if not train_pairs:
        raise EmptyTrainingSet("no training pairs")

    y_train = _targets(train_pairs, corpus, labels).astype(model.config.dtype)
    y_val = _targets(val_pairs, corpus, labels) if val_pairs else None
    graphs = [(corpus[a], corpus[b]) for a, b in train_pairs]

    rng = np.random.default_rng(hyper.seed)
    params = model.parameters()
    optimizer = nn.Adam(params, lr=hyper.lr)
    best_state, best_loss, best_iter = None, math.inf, None
    running = []
    for it in range(1, hyper.iterations + 1):
        idx = rng.integers(0, len(train_pairs), size=hyper.batch_size)
        flip = (np.arange(hyper.batch_size) + it) % 2 == 1
        batch = [graphs[i][::-1] if f else graphs[i] for i, f in zip(idx, flip)]
        with Tape() as tape:
            loss = nn.mse_loss(model.forward_batch(batch), y_train[idx])
        value = loss.item()
        if not math.isfinite(value):
            raise DivergenceDetected(f"loss became {value} at iteration {it}")
        optimizer.step(nn.backward(tape, loss, params))
        running.append(value)

        if it % hyper.eval_every == 0 or it == hyper.iterations:
            train_loss = float(np.mean(running))
            running = []
            if y_val is not None:
                val_loss = evaluate_loss(model, corpus, val_pairs, y_val)
            else:
                val_loss = train_loss
            result.history.append({"iteration": it, "train_loss": train_loss, "val_loss": val_loss})
            log.info("iteration %d train %.6f val %.6f", it, train_loss, val_loss)
            if val_loss < best_loss:
                best_loss, best_iter, best_state = val_loss, it, model.state()

    model.load_state(best_state)
    result.best_iteration = best_iter
    result.best_val_loss = best_loss
    return result


def copy_model(model: _PairModel) -> _PairModel:
    clone = type(model)(model.config, {k: Tensor(v.data.copy(), True, k) for k, v in model.params.items()})
    return clone
