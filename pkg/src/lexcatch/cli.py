"""Command-line surface: train, extract, evaluate, score-stats.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error. Every
output artifact embeds the effective config and its hash in its header.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import figures, rouge, selector, stats
from .config import ConfigError, RunConfig, build_run_config, read_config_file
from .embeddings import (
    EmbeddingTable,
    corpus_restriction,
    load_cache,
    load_embeddings_file,
    save_cache,
)
from .model import ModelDims, score_document
from .objective import LossConfig
from .trainer import TrainConfig, load_checkpoint, train

log = logging.getLogger(__name__)


def _require_path(path: str, what: str) -> Path:
    if not path:
        raise ConfigError(f"{what} is required")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{what} does not exist: {p}")
    return p


def _load_corpus(cfg: RunConfig):
    _require_path(cfg.corpus_dir, "corpus directory (--corpus-dir)")
    docs = corpus_mod.load_corpus_dir(cfg.corpus_dir)
    return corpus_mod.split_by_year(docs, cfg.test_year)


def _load_embeddings(cfg: RunConfig, docs, cache: str | None) -> EmbeddingTable:
    if cache and Path(cache).exists():
        table = load_cache(cache)
        if table.dim != cfg.dim:
            raise ConfigError(f"embedding cache dim {table.dim} != configured dim {cfg.dim}")
        return table
    _require_path(cfg.embeddings, "embeddings path (--embeddings)")
    restrict = corpus_restriction(tok for doc in docs for seq in
                                  (*doc.sentences, *doc.catchphrases) for tok in seq)
    table = load_embeddings_file(cfg.embeddings, cfg.dim, restrict)
    log.info("loaded %d embedding vectors (dim %d)", len(table), table.dim)
    if cache:
        save_cache(table, cache)
    return table


def _train_config(cfg: RunConfig) -> TrainConfig:
    return TrainConfig(
        dims=ModelDims(d=cfg.dim, k=cfg.window_k, c=cfg.filters, h=cfg.hidden),
        loss=LossConfig.from_run_config(cfg),
        lr=cfg.lr,
        clip_norm=cfg.clip_norm,
        epochs=cfg.epochs,
        seed=cfg.seed,
        precision=cfg.precision,
        checkpoint_interval=cfg.checkpoint_interval,
        token_cap=cfg.token_cap,
    )


def cmd_train(cfg: RunConfig, checkpoint_out: str, log_out: str,
              embeddings_cache: str | None = None, corpus_dump: str | None = None) -> None:
    split = _load_corpus(cfg)
    if corpus_dump:
        corpus_mod.dump_corpus(list(split.train) + list(split.test), corpus_dump)
    emb = _load_embeddings(cfg, list(split.train) + list(split.test), embeddings_cache)
    _, train_log = train(split, emb, _train_config(cfg),
                         checkpoint_path=checkpoint_out, config_hash=cfg.config_hash())
    train_log.write_csv(log_out, cfg.header_lines())
    log.info("wrote checkpoint %s and train log %s (%d steps)",
             checkpoint_out, log_out, len(train_log.rows))


def cmd_extract(cfg: RunConfig, checkpoint_path: str, out_path: str,
                embeddings_cache: str | None = None) -> None:
    split = _load_corpus(cfg)
    if not split.test:
        raise ConfigError(f"no documents for test year {cfg.test_year}")
    params, _, _ = load_checkpoint(_require_path(checkpoint_path, "checkpoint (--checkpoint)"))
    if params.dims.d != cfg.dim:
        raise ConfigError(f"checkpoint d={params.dims.d} != configured dim {cfg.dim}")
    emb = _load_embeddings(cfg, list(split.test), embeddings_cache)
    blocks = []
    for doc in split.test:
        _, sheet = score_document(params, doc, emb)
        anchors = selector.select_anchors(sheet, cfg.top_t)
        phrases = selector.extract_phrases(doc, anchors, cfg.radius)
        blocks.append((doc.id, len(anchors), phrases))
    selector.write_phrases_file(out_path, blocks, cfg.header_lines())
    log.info("extracted phrases for %d documents into %s", len(blocks), out_path)


def cmd_evaluate(cfg: RunConfig, phrases_path: str, out_prefix: str, figure: bool = True) -> None:
    """Score extracted phrases against gold catchphrases of the test year.

    Documents without gold catchphrases cannot be scored and are dropped
    from the extraction side (extract emits them regardless).
    """
    split = _load_corpus(cfg)
    extractions = selector.read_phrases_file(_require_path(phrases_path, "phrases file (--phrases)"))
    golds = {doc.id: list(doc.catchphrases) for doc in split.test if doc.catchphrases}
    if not golds:
        raise ConfigError(f"no gold catchphrases for test year {cfg.test_year}")
    unscorable = sorted(set(extractions) - set(golds))
    if unscorable:
        log.info("dropping %d extraction-only documents without gold catchphrases", len(unscorable))
        extractions = {k: v for k, v in extractions.items() if k in golds}
    report = rouge.evaluate_corpus(extractions, golds)
    header = cfg.header_lines()
    rouge.write_report_text(report, f"{out_prefix}.txt", header)
    rouge.write_report_csv(report, f"{out_prefix}.csv", header)
    if figure:
        figures.render_rouge_report(report, f"{out_prefix}.png")
    avg = report.averages["ROUGE-1"]
    log.info("ROUGE-1 average P=%.4f R=%.4f F=%.4f over %d documents",
             avg.precision, avg.recall, avg.f_measure, len(report.per_document))


def cmd_score_stats(cfg: RunConfig, checkpoint_path: str, out_prefix: str,
                    negatives_seed: int, figure: bool = True,
                    embeddings_cache: str | None = None) -> None:
    split = _load_corpus(cfg)
    if not split.test:
        raise ConfigError(f"no documents for test year {cfg.test_year}")
    params, _, _ = load_checkpoint(_require_path(checkpoint_path, "checkpoint (--checkpoint)"))
    emb = _load_embeddings(cfg, list(split.test), embeddings_cache)
    doc_rows, pair_rows, rates = stats.compute_corpus_stats(
        params, emb, list(split.test), cfg.negative_set_size, negatives_seed)
    header = cfg.header_lines() + [f"negatives_seed={negatives_seed}"]
    stats.write_stats_csv(doc_rows, pair_rows, f"{out_prefix}.csv", header)
    stats.write_stats_summary(rates, f"{out_prefix}_summary.csv", header)
    if figure:
        figures.render_score_stats(doc_rows, pair_rows, f"{out_prefix}.png")
    log.info("constraint satisfaction: o1=%.2f o2=%.2f o3=%.2f o4=%.2f o5=%.2f",
             rates.o1, rates.o2, rates.o3, rates.o4, rates.o5)


def _add_config_flags(p: argparse.ArgumentParser, *, need_embeddings: bool) -> None:
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--corpus-dir", dest="corpus_dir")
    p.add_argument("--test-year", dest="test_year", type=int)
    if need_embeddings:
        p.add_argument("--embeddings")
        p.add_argument("--embeddings-cache", dest="embeddings_cache",
                       help="binary cache path: loaded when present, else written")
        p.add_argument("--dim", type=int)
    p.add_argument("--seed", type=int)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--filters", type=int)
    p.add_argument("--window-k", dest="window_k", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--clip-norm", dest="clip_norm", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--precision", choices=("double", "single"))
    p.add_argument("--checkpoint-interval", dest="checkpoint_interval", type=int)
    p.add_argument("--token-cap", dest="token_cap", type=int)
    for name in ("margin1", "margin2", "margin3", "margin4",
                 "coeff-a1", "coeff-a2", "coeff-b1", "coeff-b2", "coeff-b3", "coeff-b4"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), type=float)
    p.add_argument("--negative-set-size", dest="negative_set_size", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexcatch",
        description="Train, run, and evaluate the legal catchphrase extractor.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a scoring model and write a checkpoint")
    _add_config_flags(p, need_embeddings=True)
    _add_train_flags(p)
    p.add_argument("--checkpoint-out", required=True)
    p.add_argument("--train-log-out", required=True)
    p.add_argument("--corpus-dump", help="optional normalized corpus dump for debugging")

    p = sub.add_parser("extract", help="extract phrases for the test year")
    _add_config_flags(p, need_embeddings=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--top-t", dest="top_t", type=int)
    p.add_argument("--radius", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="ROUGE report for an extraction file")
    _add_config_flags(p, need_embeddings=False)
    p.add_argument("--phrases", required=True)
    p.add_argument("--out-prefix", required=True,
                   help="writes <prefix>.txt, <prefix>.csv and <prefix>.png")
    p.add_argument("--no-figure", action="store_true")

    p = sub.add_parser("score-stats", help="score statistics and constraint satisfaction")
    _add_config_flags(p, need_embeddings=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--negatives-seed", dest="negatives_seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True,
                   help="writes <prefix>.csv, <prefix>_summary.csv and <prefix>.png")
    p.add_argument("--no-figure", action="store_true")

    return parser


_CONFIG_KEYS = {f.name for f in RunConfig.__dataclass_fields__.values()}  # type: ignore[attr-defined]


def _run_config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {k: v for k, v in vars(args).items() if k in _CONFIG_KEYS and v is not None}
    return build_run_config(file_values, overrides)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _run_config_from_args(args)
        if args.command == "train":
            cmd_train(cfg, args.checkpoint_out, args.train_log_out,
                      embeddings_cache=args.embeddings_cache, corpus_dump=args.corpus_dump)
        elif args.command == "extract":
            cmd_extract(cfg, args.checkpoint, args.out, embeddings_cache=args.embeddings_cache)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.phrases, args.out_prefix, figure=not args.no_figure)
        elif args.command == "score-stats":
            cmd_score_stats(cfg, args.checkpoint, args.out_prefix, args.negatives_seed,
                            figure=not args.no_figure, embeddings_cache=args.embeddings_cache)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - single CLI failure funnel
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
