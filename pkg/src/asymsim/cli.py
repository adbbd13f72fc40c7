"""Command-line entry point: ``asymsim <subcommand> ...`` (or ``python -m asymsim``)."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .checkpoint import (CheckpointError, DocNadeBundle, load_checkpoint, model_hash,
                         save_checkpoint)
from .config import DocNadeConfig, ModelConfig, SyntheticConfig, TrainConfig, default_seed
from .corpus import CorpusError, Ticket, gen_synthetic, load_pairs, load_tickets
from .corpus import split_pairs
from .docnade import perplexity
from .embed import EmbeddingFormatError
from .evaluation import EvalReport, eval_retrieval, eval_sts
from .index import build_index, retrieve_topk
from .pipeline import fit_docnade, new_model
from .siamese import ChannelWeights, PairWeights, train
from .text import Vocab, build_vocab

log = logging.getLogger("asymsim")


def _sibling(path: str, name: str) -> Path:
    return Path(path).with_name(name)


# --------------------------------------------------------------------------- commands


def cmd_gen_corpus(args) -> int:
    cfg = SyntheticConfig(n_clusters=args.clusters, tickets_per_cluster=args.per_cluster,
                          seed=args.seed, n_pairs=args.pairs, unique_queries=args.unique_queries,
                          n_heldout_queries=args.heldout, noise_rate=args.noise)
    corpus = gen_synthetic(cfg)
    corpus.save(args.out)
    print(f"wrote {len(corpus.kb)} tickets, {len(corpus.queries)} queries, "
          f"{len(corpus.pairs)} pairs, {len(corpus.heldout_queries)} held-out queries to {args.out}")
    return 0


def _corpus_tickets(in_dir: Path):
    kb = load_tickets(in_dir / "kb.jsonl", "kb")
    queries = in_dir / "queries.jsonl"
    return kb, (load_tickets(queries, "query") if queries.exists() else [])


def cmd_build_vocab(args) -> int:
    kb, queries = _corpus_tickets(Path(args.in_dir))
    vocab = build_vocab(list(kb) + list(queries), args.min_count)
    vocab.save(args.out)
    print(f"{len(vocab)} words -> {args.out}")
    return 0


def cmd_train_docnade(args) -> int:
    in_dir = Path(args.in_dir)
    kb, queries = _corpus_tickets(in_dir)
    vocab = Vocab.load(args.vocab) if args.vocab else build_vocab(list(kb) + list(queries))
    cfg = DocNadeConfig(topics=args.topics, epochs=args.epochs, learning_rate=args.lr,
                        seed=args.seed)
    model = fit_docnade(kb, vocab, cfg)
    hyper = {"topics": cfg.topics, "epochs": cfg.epochs, "learning_rate": cfg.learning_rate,
             "patience": cfg.patience, "shuffle_words": cfg.shuffle_words}
    save_checkpoint(DocNadeBundle(model, vocab, hyper, args.seed), args.out)
    print(f"docnade with {cfg.topics} topics over {len(vocab)} words -> {args.out}")
    return 0


def cmd_eval_ppl(args) -> int:
    bundle = load_checkpoint(args.model, expect="docnade")
    docs = []
    for ticket in load_tickets(args.docs, args.kind):
        parts = [ticket.subject, ticket.description, ticket.solution or ""]
        docs.append(bundle.vocab.encode(" ".join(parts)).ids)
    print(f"{perplexity(bundle.model, docs):.3f}")
    return 0


def cmd_train(args) -> int:
    bundle = load_checkpoint(args.docnade, expect="docnade")
    kb = load_tickets(args.kb, "kb")
    queries = load_tickets(args.queries or _sibling(args.pairs, "queries.jsonl"), "query")
    pairs = load_pairs(args.pairs, queries, kb)
    cfg = ModelConfig(topics=bundle.model.topics, paper_exact=args.paper_exact)
    cw = ChannelWeights(args.wh, args.we, args.wt)
    pw = PairWeights(args.v_sub_sub, args.v_desc_desc, args.v_sub_desc, args.v_sub_sol,
                     args.v_desc_sol)
    emb = None if args.no_pretrained else args.emb
    model = new_model(bundle.vocab, bundle.model, cfg, args.seed, emb, cw, pw)
    train_pairs, dev_pairs = split_pairs(pairs, 1.0 - args.dev_fraction, args.seed)
    tcfg = TrainConfig(epochs=args.epochs, dropout=args.dropout, clip_norm=args.clip,
                       learn_weights=args.learn_weights, seed=args.seed)
    result = train(model, train_pairs, dev_pairs, queries, kb, tcfg)
    result.model.meta.update({"seed": args.seed, "train": {
        "epochs": tcfg.epochs, "dropout": tcfg.dropout, "clip_norm": tcfg.clip_norm,
        "learn_weights": tcfg.learn_weights, "best_epoch": result.best_epoch}})
    save_checkpoint(result.model, args.out)
    for rec in result.history:
        dev = "n/a" if rec.dev_mse is None else f"{rec.dev_mse:.5f}"
        print(f"epoch {rec.epoch:3d}  train {rec.train_mse:.5f}  dev {dev}")
    print(f"best epoch {result.best_epoch} -> {args.out}")
    return 0


def _print_report(report: EvalReport, json_path: str | None) -> None:
    print(report.table())
    payload = json.dumps(report.to_dict(), sort_keys=False)
    if json_path:
        Path(json_path).write_text(payload + "\n")
    print(payload)


def cmd_eval_sts(args) -> int:
    model = load_checkpoint(args.model, expect="siamese")
    kb = load_tickets(args.kb, "kb")
    queries = load_tickets(args.queries or _sibling(args.pairs, "queries.jsonl"), "query")
    r, rho, err = eval_sts(model, load_pairs(args.pairs, queries, kb), queries, kb)
    _print_report(EvalReport(r=r, rho=rho, mse=err), args.json)
    return 0


def cmd_eval_retrieval(args) -> int:
    model = load_checkpoint(args.model, expect="siamese")
    kb = load_tickets(args.kb, "kb")
    queries = load_tickets(args.queries, "query")
    gold = load_pairs(args.gold, queries, kb)
    report = EvalReport().update(eval_retrieval(model, queries, kb, gold, args.k,
                                                policy=args.relevance))
    if args.pairs:
        lq = load_tickets(_sibling(args.pairs, "queries.jsonl"), "query")
        r, rho, err = eval_sts(model, load_pairs(args.pairs, lq, kb), lq, kb)
        report.r, report.rho, report.mse = r, rho, err
    _print_report(report, args.json)
    return 0


def cmd_retrieve(args) -> int:
    model = load_checkpoint(args.model, expect="siamese")
    index = build_index(load_tickets(args.kb, "kb"), model)
    query = Ticket("query", args.subject, args.description)
    results = retrieve_topk(query, index, model, args.k)
    print(json.dumps({"results": [r.to_json() for r in results]}, indent=2))
    return 0


def cmd_serve(args) -> int:
    from .service import serve
    model = load_checkpoint(args.model, expect="siamese")
    index = build_index(load_tickets(args.kb, "kb"), model)
    print(f"model {model_hash(model)[:12]}, {len(index)} tickets indexed", flush=True)
    serve(index, model, args.host, args.port)
    return 0


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    seed = default_seed()
    p = argparse.ArgumentParser(prog="asymsim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-corpus", help="write a seeded synthetic ticket corpus")
    g.add_argument("--clusters", type=int, default=20)
    g.add_argument("--per-cluster", type=int, default=10)
    g.add_argument("--pairs", type=int, default=200)
    g.add_argument("--heldout", type=int, default=40)
    g.add_argument("--noise", type=float, default=SyntheticConfig.noise_rate)
    g.add_argument("--unique-queries", action="store_true")
    g.add_argument("--seed", type=int, default=seed)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_corpus)

    v = sub.add_parser("build-vocab", help="frequency-ordered vocabulary of a corpus directory")
    v.add_argument("--in", dest="in_dir", required=True)
    v.add_argument("--min-count", type=int, default=1)
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_build_vocab)

    d = sub.add_parser("train-docnade", help="fit the topic model on KB documents")
    d.add_argument("--in", dest="in_dir", required=True)
    d.add_argument("--vocab")
    d.add_argument("--topics", type=int, default=100)
    d.add_argument("--epochs", type=int, default=20)
    d.add_argument("--lr", type=float, default=DocNadeConfig.learning_rate)
    d.add_argument("--seed", type=int, default=seed)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_train_docnade)

    e = sub.add_parser("eval-ppl", help="per-word perplexity of merged ticket texts")
    e.add_argument("--model", required=True)
    e.add_argument("--docs", required=True)
    e.add_argument("--kind", choices=("kb", "query"), default="kb")
    e.set_defaults(func=cmd_eval_ppl)

    t = sub.add_parser("train", help="train the Siamese similarity model")
    t.add_argument("--pairs", required=True)
    t.add_argument("--kb", required=True)
    t.add_argument("--queries")
    t.add_argument("--docnade", required=True)
    t.add_argument("--emb")
    t.add_argument("--no-pretrained", action="store_true")
    t.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    t.add_argument("--seed", type=int, default=seed)
    t.add_argument("--dev-fraction", type=float, default=0.2)
    t.add_argument("--out", required=True)
    cw, pw = ChannelWeights(), PairWeights()
    t.add_argument("--wh", type=float, default=cw.W_h)
    t.add_argument("--we", type=float, default=cw.W_E)
    t.add_argument("--wt", type=float, default=cw.W_T)
    t.add_argument("--v-sub-sub", type=float, default=pw.v_sub_sub)
    t.add_argument("--v-desc-desc", type=float, default=pw.v_desc_desc)
    t.add_argument("--v-sub-desc", type=float, default=pw.v_sub_desc)
    t.add_argument("--v-sub-sol", type=float, default=pw.v_sub_sol)
    t.add_argument("--v-desc-sol", type=float, default=pw.v_desc_sol)
    t.add_argument("--dropout", type=float, default=TrainConfig.dropout)
    t.add_argument("--clip", type=float, default=TrainConfig.clip_norm)
    t.add_argument("--paper-exact", action="store_true", help="zero, frozen LSTM gate biases")
    t.add_argument("--learn-weights", action="store_true")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("eval-sts", help="Pearson, Spearman and MSE on labeled pairs")
    s.add_argument("--model", required=True)
    s.add_argument("--pairs", required=True)
    s.add_argument("--kb", required=True)
    s.add_argument("--queries")
    s.add_argument("--json")
    s.set_defaults(func=cmd_eval_sts)

    r = sub.add_parser("eval-retrieval", help="MAP, MRR and Acc at 1, 5 and 10")
    r.add_argument("--model", required=True)
    r.add_argument("--kb", required=True)
    r.add_argument("--queries", required=True)
    r.add_argument("--gold", required=True)
    r.add_argument("--pairs", help="labeled pairs for the STS columns (optional)")
    r.add_argument("--k", type=int, default=10)
    r.add_argument("--relevance", choices=("yes", "yes+rel"), default="yes")
    r.add_argument("--json")
    r.set_defaults(func=cmd_eval_retrieval)

    q = sub.add_parser("retrieve", help="top-k KB tickets for one query")
    q.add_argument("--model", required=True)
    q.add_argument("--kb", required=True)
    q.add_argument("--subject", required=True)
    q.add_argument("--description", default="")
    q.add_argument("--k", type=int, default=10)
    q.set_defaults(func=cmd_retrieve)

    h = sub.add_parser("serve", help="JSON retrieval endpoint")
    h.add_argument("--model", required=True)
    h.add_argument("--kb", required=True)
    h.add_argument("--host", default="127.0.0.1")
    h.add_argument("--port", type=int, default=8080)
    h.set_defaults(func=cmd_serve)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CorpusError, CheckpointError, EmbeddingFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
