import math

import numpy as np
import pytest

from asymsim.config import DocNadeConfig
from asymsim.docnade import (DocNadeModel, conditional, doc_nll, hidden, mean_nll, nll_and_grad,
                             perplexity, topic_vector, train_docnade)

from oracles import docnade_hidden, docnade_nll, softmax


def seeded(V=7, H=4, seed=0, scale=0.5):
    m = DocNadeModel.init(V, H, np.random.default_rng(seed), scale)
    m.c[:] = np.random.default_rng(seed + 1).normal(size=H) * 0.3
    m.b[:] = np.random.default_rng(seed + 2).normal(size=V) * 0.3
    return m


def test_initial_hidden_is_half():
    m = DocNadeModel.zeros(5, 3)
    np.testing.assert_array_equal(hidden([1, 2], 0, m), np.full(3, 0.5))


def test_zero_input_weights_make_hidden_constant():
    m = seeded()
    m.W[:] = 0.0
    doc = [1, 4, 2, 2]
    for i in range(5):
        np.testing.assert_allclose(hidden(doc, i, m), hidden(doc, 0, m), atol=0)


def test_hidden_matches_prefix_oracle():
    m = seeded()
    doc = [3, 0, 6, 3]
    for i in range(len(doc) + 1):
        np.testing.assert_allclose(hidden(doc, i, m), docnade_hidden(doc, i, m.W.tolist(), m.c),
                                   atol=1e-12)


def test_conditional_uniform_and_normalised():
    m = DocNadeModel.zeros(10, 3)
    np.testing.assert_allclose(conditional([1, 2], 1, m), np.full(10, 0.1), atol=1e-15)
    s = seeded()
    for i in (1, 2, 3):
        assert abs(conditional([1, 5, 2], i, s).sum() - 1.0) < 1e-10


def test_conditional_matches_softmax_oracle():
    m = seeded(V=7)
    doc = [2, 5, 1]
    h = docnade_hidden(doc, 2, m.W.tolist(), m.c)
    expect = softmax([m.b[v] + float(m.U[v] @ h) for v in range(7)])
    np.testing.assert_allclose(conditional(doc, 3, m), expect, atol=1e-12)


def test_uniform_nll_closed_form():
    assert doc_nll([1, 2, 3], DocNadeModel.zeros(10, 4)) == pytest.approx(3 * math.log(10), abs=1e-12)


def test_nll_matches_oracle_and_factorisation():
    m = seeded()
    doc = [1, 1, 6, 0, 3]
    nll = doc_nll(doc, m)
    assert nll == pytest.approx(docnade_nll(doc, m.W.tolist(), m.c, m.U.tolist(), m.b), abs=1e-10)
    prod = np.prod([conditional(doc, i, m)[doc[i - 1]] for i in range(1, 6)])
    assert math.exp(-nll) == pytest.approx(prod, rel=1e-9)


def test_nll_additive_over_positions():
    m = seeded()
    doc = [2, 4, 1]
    twice = doc + doc
    per_pos = [-math.log(conditional(twice, i, m)[twice[i - 1]]) for i in range(1, 7)]
    assert doc_nll(twice, m) == pytest.approx(sum(per_pos), abs=1e-12)


def test_gradient_matches_finite_differences():
    m = seeded(V=12, H=5, seed=3)
    doc = [4, 11, 4]
    _, grads = nll_and_grad(doc, m)
    eps, worst = 1e-5, 0.0
    for name, arr in m.arrays().items():
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + eps
            up = doc_nll(doc, m)
            arr[idx] = old - eps
            down = doc_nll(doc, m)
            arr[idx] = old
            num = (up - down) / (2 * eps)
            a = grads[name][idx]
            worst = max(worst, abs(a - num) / max(abs(a), abs(num), 1e-8))
    assert worst < 1e-4


def test_perplexity_examples():
    assert perplexity(DocNadeModel.zeros(100, 3), [[1, 2], [5, 6, 7]]) == pytest.approx(100, abs=1e-6)
    m = DocNadeModel.zeros(2, 1)  # uniform over 2 words
    assert perplexity(m, [[1]]) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        perplexity(m, [])


def test_topic_vector_is_final_hidden():
    m = seeded()
    doc = [1, 2, 3, 4]
    np.testing.assert_array_equal(topic_vector(m, doc), hidden(doc, 4, m))
    tv = topic_vector(m, [0])
    assert np.all((tv > 0) & (tv < 1))


def _toy_docs(n=20, V=30, seed=0):
    rng = np.random.default_rng(seed)
    docs = []
    for d in range(n):
        topic = d % 3
        words = rng.integers(topic * 10, topic * 10 + 10, size=12)
        docs.append(words)
    return docs


def test_zero_epochs_returns_initialisation():
    init = seeded(V=30, H=5)
    out = train_docnade(_toy_docs(), 30, DocNadeConfig(topics=5, epochs=0), init=init)
    for k, v in init.arrays().items():
        np.testing.assert_array_equal(out.arrays()[k], v)


def test_training_reduces_nll_and_is_deterministic():
    docs = _toy_docs()
    cfg = DocNadeConfig(topics=8, epochs=50, seed=3)
    init = DocNadeModel.init(30, 8, np.random.default_rng(3), cfg.init_scale)
    a = train_docnade(docs, 30, cfg)
    b = train_docnade(docs, 30, cfg)
    assert mean_nll(a, docs) < mean_nll(init, docs)
    for k in a.arrays():
        np.testing.assert_array_equal(a.arrays()[k], b.arrays()[k])


def test_trained_heldout_perplexity_improves():
    docs = _toy_docs(seed=1)
    held = _toy_docs(n=6, seed=2)
    cfg = DocNadeConfig(topics=8, epochs=100, seed=0)
    init = DocNadeModel.init(30, 8, np.random.default_rng(0), cfg.init_scale)
    assert perplexity(train_docnade(docs, 30, cfg), held) < perplexity(init, held)
