"""Training orchestration: epochs, negative sampling, optimization, logging,
finite-difference gradient verification, and checkpoint round-trips."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autograd as ag
from .autograd import Tape, Tensor
from .config import ConfigError, substream
from .corpus import CaseDocument, CorpusSplit
from .embeddings import EmbeddingTable
from .model import (
    ModelDims,
    ModelParams,
    init_params,
    score_catchwords_against,
    score_document,
)
from .objective import LossBreakdown, LossConfig, ScoreStats, score_statistics, total_loss
from .optim import AdamState, adam_step, clip_global_norm, global_norm

log = logging.getLogger(__name__)

_CHECKPOINT_FORMAT = "lexcatch-checkpoint"
_CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    """Training aborted (non-finite loss or unusable inputs)."""


class GradientCheckError(AssertionError):
    """Analytic and numeric gradients disagree beyond tolerance."""


class CheckpointError(ValueError):
    """Checkpoint file is corrupt, truncated, or from another config."""


@dataclass
class TrainConfig:
    dims: ModelDims
    loss: LossConfig = field(default_factory=LossConfig)
    lr: float = 1e-4
    clip_norm: float = 5.0
    epochs: int = 10
    seed: int = 1
    precision: str = "double"
    checkpoint_interval: int = 0   # epochs between snapshots; 0 = final only
    token_cap: int = 2000          # training-time sentence-token cap; 0 = off

    def dtype(self):
        return np.float32 if self.precision == "single" else np.float64

    def validate(self):
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")


@dataclass
class TrainStepRecord:
    step: int
    doc_id: str
    breakdown: LossBreakdown
    grad_norm_pre: float
    grad_norm_post: float


@dataclass
class TrainLog:
    rows: list[TrainStepRecord] = field(default_factory=list)
    epoch_mean_losses: list[float] = field(default_factory=list)
    excluded_docs: int = 0

    def write_csv(self, path: str | Path, header_lines: Sequence[str] = ()) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("step,doc_id," + ",".join(LossBreakdown.CSV_FIELDS)
                     + ",grad_norm_pre,grad_norm_post\n")
            for row in self.rows:
                terms = ",".join(repr(getattr(row.breakdown, f)) for f in LossBreakdown.CSV_FIELDS)
                fh.write(f"{row.step},{row.doc_id},{terms},"
                         f"{row.grad_norm_pre!r},{row.grad_norm_post!r}\n")


def cap_document(doc: CaseDocument, cap: int, rng: np.random.Generator) -> CaseDocument:
    """Bound per-step memory: keep a random contiguous sentence run whose
    token total fits the cap (always at least one sentence)."""
    if cap <= 0 or doc.sentence_token_count() <= cap:
        return doc
    start = int(rng.integers(0, len(doc.sentences)))
    picked = [doc.sentences[start]]
    tokens = len(doc.sentences[start])
    for s in doc.sentences[start + 1:]:
        if tokens + len(s) > cap:
            break
        picked.append(s)
        tokens += len(s)
    return CaseDocument(id=doc.id, year=doc.year,
                        sentences=tuple(picked), catchphrases=doc.catchphrases)


def _document_stats(params, emb, doc, negatives) -> ScoreStats:
    """Forward pass for one training step: own stats plus cross pairings."""
    enc, sheet = score_document(params, doc, emb)
    e_c, std_c = score_statistics(sheet.all_catchword_scores())
    e_s, std_s = score_statistics(sheet.all_sentence_scores())
    e_c_cross: list[Tensor] = []
    e_s_neg: list[Tensor] = []
    for neg in negatives:
        neg_enc, neg_sheet = score_document(params, neg, emb)
        e_s_neg.append(ag.mean(neg_sheet.all_sentence_scores()))
        cross = score_catchwords_against(params, enc, neg_enc.document_feature)
        e_c_cross.append(ag.mean(ag.concat(cross)))
    return ScoreStats(e_c=e_c, std_c=std_c, e_s=e_s, std_s=std_s,
                      e_c_cross=e_c_cross, e_s_neg=e_s_neg)


def train(split: CorpusSplit | Sequence[CaseDocument], emb: EmbeddingTable,
          cfg: TrainConfig, checkpoint_path: str | Path | None = None,
          config_hash: str = "") -> tuple[ModelParams, TrainLog]:
    """Optimize the scoring model over the train side of a split.

    One optimizer step per document: sample the negative set, forward the
    document and its cross pairings, backprop the composite loss, clip by
    global norm, apply Adam. Document order is reshuffled and negatives are
    resampled every epoch, all from named substreams of the seed.
    """
    cfg.validate()
    train_docs = list(split.train) if isinstance(split, CorpusSplit) else list(split)
    docs = [d for d in train_docs if d.catchphrases]
    excluded = len(train_docs) - len(docs)
    if excluded:
        log.warning("excluded %d documents without catchphrases from training", excluded)
    if not docs:
        raise ConfigError("train side has no documents with catchphrases")
    if emb.dim != cfg.dims.d:
        raise ConfigError(f"embedding dim {emb.dim} does not match configured d={cfg.dims.d}")

    dtype = cfg.dtype()
    rng_init = substream(cfg.seed, "init")
    rng_shuffle = substream(cfg.seed, "shuffle")
    rng_neg = substream(cfg.seed, "negatives")
    rng_cap = substream(cfg.seed, "cap")

    params = init_params(cfg.dims, rng_init, dtype)
    adam = AdamState.for_params(params.tensors())
    train_log = TrainLog(excluded_docs=excluded)
    warned_small_pool = False
    step = 0

    for epoch in range(cfg.epochs):
        order = rng_shuffle.permutation(len(docs))
        epoch_total = 0.0
        for idx in order:
            doc = docs[int(idx)]
            pool = [j for j in range(len(docs)) if j != idx]
            n_negs = min(cfg.loss.negative_set_size, len(pool))
            if n_negs < cfg.loss.negative_set_size and not warned_small_pool:
                log.warning(
                    "only %d negative documents available (requested %d); "
                    "o2 term %s", n_negs, cfg.loss.negative_set_size,
                    "skipped" if n_negs == 0 else "averaged over fewer negatives")
                warned_small_pool = True
            chosen = rng_neg.choice(len(pool), size=n_negs, replace=False) if n_negs else []
            negatives = [cap_document(docs[pool[int(j)]], cfg.token_cap, rng_cap) for j in chosen]
            stepped_doc = cap_document(doc, cfg.token_cap, rng_cap)

            step += 1
            with Tape() as tape:
                stats = _document_stats(params, emb, stepped_doc, negatives)
                loss, breakdown = total_loss(stats, cfg.loss)
            if not np.isfinite(breakdown.total):
                raise TrainingError(
                    f"non-finite loss at step {step} (doc {doc.id}): {breakdown}")
            grads = tape.gradients(loss, params.tensors())
            pre = global_norm(grads)
            grads = clip_global_norm(grads, cfg.clip_norm)
            post = global_norm(grads)
            adam_step(adam, params.tensors(), grads, cfg.lr)

            epoch_total += breakdown.total
            train_log.rows.append(TrainStepRecord(
                step=step, doc_id=doc.id, breakdown=breakdown,
                grad_norm_pre=pre, grad_norm_post=post))

        train_log.epoch_mean_losses.append(epoch_total / len(docs))
        log.info("epoch %d/%d mean loss %.6f", epoch + 1, cfg.epochs,
                 train_log.epoch_mean_losses[-1])
        if (checkpoint_path and cfg.checkpoint_interval > 0
                and (epoch + 1) % cfg.checkpoint_interval == 0):
            save_checkpoint(params, adam, cfg, checkpoint_path, config_hash=config_hash)

    if checkpoint_path:
        save_checkpoint(params, adam, cfg, checkpoint_path, config_hash=config_hash)
    return params, train_log


def gradient_check(params: ModelParams, emb: EmbeddingTable, doc: CaseDocument,
                   negatives: Sequence[CaseDocument], loss_cfg: LossConfig,
                   h: float = 1e-5, tol: float = 1e-4, kink_eps: float = 1e-3) -> float:
    """Compare analytic gradients of the full objective to central differences.

    Runs in double precision over every parameter coordinate. Hinge arguments
    closer than kink_eps to their kink are moved off it by nudging the margin
    for that term (the objective is piecewise smooth; the check must not
    straddle a kink). Returns the max relative error, raising
    GradientCheckError with the worst coordinate when it reaches ``tol``.
    Relative error uses denominator max(|analytic|, |numeric|, 1e-6), so
    near-zero coordinates are compared absolutely at 1e-10.
    """
    if params.dtype != np.float64:
        raise ValueError("gradient check requires double-precision parameters")

    def build_loss() -> Tensor:
        stats = _document_stats(params, emb, doc, list(negatives))
        return total_loss(stats, loss_cfg)[0]

    # Nudge margins whose hinge argument sits within kink_eps of zero.
    stats = _document_stats(params, emb, doc, list(negatives))
    gaps = {
        "m1": stats.e_c.item() - stats.e_s.item(),
        "m3": (stats.e_c.item() + stats.std_c.item()) - (stats.e_s.item() + stats.std_s.item()),
        "m4": (stats.e_c.item() - stats.std_c.item()) - stats.e_s.item(),
    }
    adjustments = {}
    for name, gap in gaps.items():
        margin = getattr(loss_cfg, name)
        if abs(margin - gap) < kink_eps:
            adjustments[name] = gap + 2.0 * kink_eps
    m2 = loss_cfg.m2
    for cross, own in zip(stats.e_c_cross, stats.e_s_neg):
        gap = own.item() - cross.item()
        if abs(m2 - gap) < kink_eps:
            adjustments["m2"] = max(adjustments.get("m2", 0.0), gap + 2.0 * kink_eps)
    if adjustments:
        log.info("gradient check nudged margins off hinge kinks: %s", adjustments)
        loss_cfg = LossConfig(**{**loss_cfg.__dict__, **adjustments})

    with Tape() as tape:
        loss = build_loss()
    analytic = tape.gradients(loss, params.tensors())

    worst = 0.0
    worst_coord = ("", 0, 0.0, 0.0)
    for (name, tensor), grad in zip(params.named(), analytic):
        flat = tensor.data.reshape(-1)
        grad = grad.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            up = build_loss().item()
            flat[i] = keep - h
            down = build_loss().item()
            flat[i] = keep
            numeric = (up - down) / (2.0 * h)
            err = abs(grad[i] - numeric) / max(abs(grad[i]), abs(numeric), 1e-6)
            if err > worst:
                worst = err
                worst_coord = (name, i, float(grad[i]), numeric)
    if worst >= tol:
        name, i, a, n = worst_coord
        raise GradientCheckError(
            f"max relative error {worst:.3e} at {name}[{i}]: analytic {a:.6e}, numeric {n:.6e}")
    return worst


def _checkpoint_payload(params: ModelParams, adam: AdamState, cfg: TrainConfig,
                        config_hash: str) -> dict:
    return {
        "dims": {"d": cfg.dims.d, "k": cfg.dims.k, "c": cfg.dims.c, "h": cfg.dims.h},
        "precision": cfg.precision,
        "seed": cfg.seed,
        "config_hash": config_hash,
        "params": {name: t.data.tolist() for name, t in params.named()},
        "adam": {
            "t": adam.t,
            "beta1": adam.beta1,
            "beta2": adam.beta2,
            "eps": adam.eps,
            "m": [m.tolist() for m in adam.m],
            "v": [v.tolist() for v in adam.v],
        },
    }


def _payload_checksum(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_checkpoint(params: ModelParams, adam: AdamState, cfg: TrainConfig,
                    path: str | Path, config_hash: str = "") -> None:
    """Versioned structured-text checkpoint, written atomically."""
    payload = _checkpoint_payload(params, adam, cfg, config_hash)
    doc = {
        "format": _CHECKPOINT_FORMAT,
        "version": _CHECKPOINT_VERSION,
        "checksum": _payload_checksum(payload),
        "payload": payload,
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    os.replace(tmp, path)


def load_checkpoint(path: str | Path, expected_config_hash: str | None = None
                    ) -> tuple[ModelParams, AdamState, dict]:
    """Load and verify a checkpoint; returns (params, adam state, metadata)."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: corrupt checkpoint (not parseable JSON)") from exc
    if not isinstance(doc, dict) or doc.get("format") != _CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: not a recognized checkpoint file")
    if doc.get("version") != _CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: checkpoint version {doc.get('version')} != supported {_CHECKPOINT_VERSION}")
    payload = doc.get("payload")
    if payload is None or doc.get("checksum") != _payload_checksum(payload):
        raise CheckpointError(f"{path}: checksum mismatch (corrupt or edited checkpoint)")
    if expected_config_hash is not None and payload["config_hash"] != expected_config_hash:
        raise CheckpointError(
            f"{path}: checkpoint config hash {payload['config_hash']} != expected {expected_config_hash}")

    dims = ModelDims(**payload["dims"])
    dtype = np.float32 if payload["precision"] == "single" else np.float64
    expected_shapes = {
        "conv_kernel": (dims.c, dims.window_dim),
        "mlp_hidden_weight": (dims.h, 3 * dims.c),
        "mlp_hidden_bias": (dims.h,),
        "mlp_out_weight": (1, dims.h),
        "mlp_out_bias": (),
    }
    tensors = {}
    for name, shape in expected_shapes.items():
        arr = np.asarray(payload["params"][name], dtype=dtype)
        if arr.shape != shape:
            raise CheckpointError(
                f"{path}: parameter {name} has shape {arr.shape}, expected {shape} for dims {dims}")
        tensors[name] = Tensor(arr, requires_grad=True)
    params = ModelParams(dims=dims, **tensors)

    adam_doc = payload["adam"]
    adam = AdamState(
        beta1=adam_doc["beta1"], beta2=adam_doc["beta2"], eps=adam_doc["eps"], t=adam_doc["t"],
        m=[np.asarray(m, dtype=dtype) for m in adam_doc["m"]],
        v=[np.asarray(v, dtype=dtype) for v in adam_doc["v"]],
    )
    for moment, (name, shape) in zip(adam.m + adam.v, list(expected_shapes.items()) * 2):
        if moment.shape != shape:
            raise CheckpointError(f"{path}: optimizer moment for {name} has wrong shape")
    meta = {"seed": payload["seed"], "config_hash": payload["config_hash"],
            "precision": payload["precision"]}
    return params, adam, meta
