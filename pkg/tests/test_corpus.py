import json

import pytest

from asymsim.config import SyntheticConfig
from asymsim.corpus import (_Writer, CorpusError, LabeledPair, RelatednessLabel, SplitMix64,
                            SyntheticCorpus, Ticket, TicketSet, cluster_label, gen_synthetic,
                            label_to_score, load_pairs, load_tickets, rescale_target,
                            split_pairs, write_jsonl)
from asymsim.text import tokenize_text


def test_label_scores_and_targets():
    assert [label_to_score(lab) for lab in RelatednessLabel] == [1.0, 3.0, 5.0]
    assert rescale_target(5.0) == 1.0 and rescale_target(3.0) == 0.5 and rescale_target(1.0) == 0.0
    with pytest.raises(ValueError):
        rescale_target(6.0)


def test_labels_are_ordered():
    assert RelatednessLabel.NO < RelatednessLabel.REL < RelatednessLabel.YES


def test_ticket_rejects_empty_subject():
    with pytest.raises(CorpusError):
        Ticket("x", "  ", "desc")


def test_ticketset_rejects_duplicate_ids():
    ts = TicketSet([Ticket("a", "s", "d")])
    with pytest.raises(CorpusError):
        ts.add(Ticket("a", "s2", "d2"))


def test_splitmix64_reference_stream():
    # published reference outputs for seed 1234567
    rng = SplitMix64(1234567)
    assert [rng.next_u64() for _ in range(5)] == [
        6457827717110365317, 3203168211198807973, 9817491932198370423,
        4593380528125082431, 16408922859458223821]


def test_splitmix64_bounded_and_unit_interval():
    rng = SplitMix64(9)
    draws = [rng.below(7) for _ in range(2000)]
    assert set(draws) == set(range(7))
    assert all(0.0 <= SplitMix64(s).random() < 1.0 for s in range(50))


def test_split_421_pairs():
    pairs = [LabeledPair.make(f"q{i}", "t", RelatednessLabel.YES) for i in range(421)]
    tr, dev = split_pairs(pairs, 0.8, seed=1)
    assert (len(tr), len(dev)) == (337, 84)
    assert sorted(p.query_id for p in tr + dev) == sorted(p.query_id for p in pairs)


def test_split_deterministic_under_seed():
    pairs = [LabeledPair.make(f"q{i}", "t", RelatednessLabel.NO) for i in range(30)]
    assert split_pairs(pairs, 0.8, 5) == split_pairs(pairs, 0.8, 5)
    assert split_pairs(pairs, 0.8, 5) != split_pairs(pairs, 0.8, 6)


def test_cluster_label_rule():
    assert cluster_label(3, 3) is RelatednessLabel.YES
    assert cluster_label(3, 4) is RelatednessLabel.REL
    assert cluster_label(3, 5) is RelatednessLabel.NO


def _dump(corpus: SyntheticCorpus, path):
    corpus.save(path)
    return {f.name: f.read_bytes() for f in sorted(path.iterdir())}


def test_synthetic_is_byte_identical_across_runs(tmp_path):
    cfg = SyntheticConfig(n_clusters=20, tickets_per_cluster=10, seed=7)
    a = _dump(gen_synthetic(cfg), tmp_path / "a")
    b = _dump(gen_synthetic(cfg), tmp_path / "b")
    assert a == b


def test_synthetic_shapes():
    c = gen_synthetic(SyntheticConfig(seed=3))
    assert len(c.kb) == 200 and len(c.pairs) == 200 and len(c.heldout_queries) == 40
    assert len(c.heldout_gold) == 40 * 200
    assert all(t.solution for t in c.kb) and all(q.solution is None for q in c.queries)


def test_unique_queries_flag():
    c = gen_synthetic(SyntheticConfig(seed=3, unique_queries=True))
    assert len(c.queries) == 200
    assert len({p.query_id for p in c.pairs}) == 200


def test_zero_noise_intra_cluster_pairs_are_yes():
    c = gen_synthetic(SyntheticConfig(seed=11, noise_rate=0.0))
    for p in c.pairs:
        assert p.label is cluster_label(c.clusters[p.query_id], c.clusters[p.ticket_id])
    intra = [p for p in c.pairs if c.clusters[p.query_id] == c.clusters[p.ticket_id]]
    assert intra and all(p.label is RelatednessLabel.YES for p in intra)


def test_component_mean_lengths():
    c = gen_synthetic(SyntheticConfig(seed=2))
    sub = [len(tokenize_text(t.subject)) for t in c.kb]
    desc = [len(tokenize_text(t.description)) for t in c.kb]
    assert abs(sum(sub) / len(sub) - 5.0) <= 1.5
    assert abs(sum(desc) / len(desc) - 65.0) <= 6.5


def test_noise_rate_roughly_respected():
    c = gen_synthetic(SyntheticConfig(seed=4, noise_rate=0.3, n_pairs=600))
    flipped = sum(p.label is not cluster_label(c.clusters[p.query_id], c.clusters[p.ticket_id])
                  for p in c.pairs)
    assert 0.2 < flipped / len(c.pairs) < 0.4


def test_save_load_round_trip(tmp_path):
    c = gen_synthetic(SyntheticConfig(seed=5, n_clusters=4, tickets_per_cluster=3, n_pairs=12,
                                      n_heldout_queries=4))
    c.save(tmp_path)
    back = SyntheticCorpus.load(tmp_path)
    assert list(back.kb) == list(c.kb) and back.pairs == c.pairs
    assert back.heldout_gold == c.heldout_gold


def test_loader_reports_line_numbers(tmp_path):
    path = tmp_path / "kb.jsonl"
    path.write_text(json.dumps({"id": "a", "subject": "s", "description": "d", "solution": "x"})
                    + "\n" + "{not json\n")
    with pytest.raises(CorpusError, match=":2:"):
        load_tickets(path, "kb")


def test_loader_requires_solution_for_kb(tmp_path):
    path = tmp_path / "kb.jsonl"
    path.write_text(json.dumps({"id": "a", "subject": "s", "description": "d"}) + "\n")
    with pytest.raises(CorpusError, match="solution"):
        load_tickets(path, "kb")


def test_pairs_loader_checks_ids(tmp_path):
    kb = TicketSet([Ticket("t", "s", "d", "x")])
    qs = TicketSet([Ticket("q", "s", "d")])
    path = tmp_path / "p.jsonl"
    write_jsonl(path, [LabeledPair.make("q", "zzz", RelatednessLabel.YES)])
    with pytest.raises(CorpusError, match="unknown ticket"):
        load_pairs(path, qs, kb)


def _words(texts):
    return {w for t in texts for w in tokenize_text(t)}


def test_solution_vocabulary_disjoint_from_problem_words():
    cfg = SyntheticConfig(seed=3)
    w = _Writer(cfg, SplitMix64(cfg.seed))
    problem = {x for pool in w.pools for x in pool}
    solution = {x for pool in w.solution_pools for x in pool}
    assert problem and solution and not problem & solution
    c = gen_synthetic(cfg)
    sol_words = _words(t.solution for t in c.kb)
    assert not sol_words & {x.lower() for x in problem}
    assert sol_words & {x.lower() for x in solution}


def test_synthetic_embeddings_cluster_structure():
    cfg = SyntheticConfig(seed=4, emb_dim=64)
    c = gen_synthetic(cfg)
    vecs = c.embeddings
    assert all(v.shape == (64,) for v in vecs.values())
    # query-side variants are absent from the pretrained vocabulary
    kb_words = _words(t.subject + " " + t.description for t in c.kb)
    q_words = _words(q.subject + " " + q.description for q in c.queries)
    assert any(w not in vecs for w in q_words - kb_words)
    assert gen_synthetic(cfg).embeddings.keys() == vecs.keys()


def test_embeddings_file_round_trip(tmp_path):
    import numpy as np

    from asymsim.embed import load_pretrained
    from asymsim.text import build_vocab

    c = gen_synthetic(SyntheticConfig(seed=5, emb_dim=8))
    c.save(tmp_path)
    vocab = build_vocab(list(c.kb))
    table = load_pretrained(tmp_path / "embeddings.txt", vocab, np.random.default_rng(0), 8)
    for w in vocab.words:
        if w in c.embeddings:
            np.testing.assert_array_equal(table.matrix[vocab.index[w]], c.embeddings[w])
