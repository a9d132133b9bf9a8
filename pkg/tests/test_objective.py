import math

import numpy as np
import pytest

from clozeclass.errors import ValidationError
from clozeclass.model.classifiers import ClassifierSpec, build_features, make_classifier
from clozeclass.model.objective import (
    BatchItem,
    batch_objective,
    batch_objective_and_grads,
    elbo_term,
)
from clozeclass.model.params import ModelParams
from clozeclass.model.worddist import word_logprob_ns

from oracles import (
    elbo_exact_oracle,
    elbo_ns_oracle,
    exact_logprob_oracle,
    log_marginal_oracle,
    posterior_oracle,
)


def zero_params(num_classes=1, vocab=12, dim=3):
    return ModelParams(
        category_vectors=np.zeros((num_classes, dim)),
        word_embeddings=np.zeros((vocab, dim)),
        classifier_params=np.zeros(1),
    )


def random_params(rng, num_classes=3, vocab=7, dim=4):
    return ModelParams(
        category_vectors=rng.normal(size=(num_classes, dim)) * 0.7,
        word_embeddings=rng.normal(size=(vocab, dim)) * 0.7,
        classifier_params=np.zeros(1),
    )


def test_single_class_collapse():
    p = zero_params()
    value = elbo_term(np.array([1.0]), 0, list(range(1, 11)), p)
    assert value == pytest.approx(-7.624619, abs=1e-6)
    # q = [1] has zero entropy and log prior 0, so this is pure Eq. 5
    assert value == pytest.approx(word_logprob_ns(0, 0, list(range(1, 11)), p))


def test_symmetry_cancellation(rng):
    # identical class vectors make word scores class-independent, so the
    # uniform q's prior and entropy terms cancel exactly
    dim = 4
    shared = rng.normal(size=dim)
    p = ModelParams(
        category_vectors=np.tile(shared, (3, 1)),
        word_embeddings=rng.normal(size=(6, dim)),
        classifier_params=np.zeros(1),
    )
    q = np.full(3, 1.0 / 3.0)
    negs = [1, 4, 2]
    want = word_logprob_ns(0, 0, negs, p)
    assert elbo_term(q, 0, negs, p) == pytest.approx(want, abs=1e-12)


def test_matches_formula_oracle(rng):
    for _ in range(50):
        p = random_params(rng)
        q = rng.dirichlet(np.ones(3))
        w = int(rng.integers(7))
        negs = rng.integers(0, 7, size=5).tolist()
        want = elbo_ns_oracle(
            q.tolist(),
            w,
            negs,
            p.category_vectors.tolist(),
            p.word_embeddings.tolist(),
            p.prior.tolist(),
        )
        assert elbo_term(q, w, negs, p) == pytest.approx(want, abs=1e-10)


def test_zero_probability_class_contributes_nothing(rng):
    p = random_params(rng, num_classes=2)
    q = np.array([1.0, 0.0])
    value = elbo_term(q, 0, [1, 2], p)
    assert math.isfinite(value)
    want = word_logprob_ns(0, 0, [1, 2], p) + math.log(p.prior[0])
    assert value == pytest.approx(want, abs=1e-9)


def test_q_must_sum_to_one():
    with pytest.raises(ValidationError):
        elbo_term(np.array([0.7, 0.7]), 0, [1], zero_params(num_classes=2))


def test_jensen_bound_and_posterior_equality(rng):
    for _ in range(100):
        p = random_params(rng)
        cat = p.category_vectors.tolist()
        emb = p.word_embeddings.tolist()
        prior = p.prior.tolist()
        w = int(rng.integers(7))
        q = rng.dirichlet(np.ones(3) * float(rng.uniform(0.3, 3.0)))
        bound = elbo_exact_oracle(q.tolist(), w, cat, emb, prior)
        marginal = log_marginal_oracle(w, cat, emb, prior)
        assert bound <= marginal + 1e-9
        posterior = posterior_oracle(w, cat, emb, prior)
        tight = elbo_exact_oracle(posterior, w, cat, emb, prior)
        assert tight == pytest.approx(marginal, abs=1e-9)


def batch_for(rng, spec, params, n_items=3, n_steps=2, negatives=4):
    vocab = params.vocab_size
    batch = []
    for _ in range(n_items):
        n = int(rng.integers(1, spec.max_len + 1))
        feats = build_features(rng.normal(size=(n, spec.feature_dim)), spec.max_len)
        steps = tuple(
            (int(rng.integers(vocab)), rng.integers(0, vocab, size=negatives))
            for _ in range(n_steps)
        )
        batch.append(BatchItem(features=feats, steps=steps))
    return batch


def test_batch_objective_equals_sum_of_terms(rng):
    spec = ClassifierSpec(kind="meanpool", num_classes=3, feature_dim=4, max_len=5)
    classifier = make_classifier(spec)
    params = ModelParams(
        category_vectors=rng.normal(size=(3, 4)),
        word_embeddings=rng.normal(size=(7, 4)),
        classifier_params=rng.normal(size=classifier.init_params(rng).size),
    )
    batch = batch_for(rng, spec, params)
    total = batch_objective(batch, params, classifier)
    want = 0.0
    from clozeclass.model.classifiers import softmax

    for item in batch:
        z, _ = classifier.logits(item.features, params.classifier_params)
        q = softmax(z)
        for w, negs in item.steps:
            want += elbo_term(q, w, negs, params)
    assert total == pytest.approx(want, abs=1e-9)


def test_grads_value_matches_objective(rng):
    spec = ClassifierSpec(kind="meanpool", num_classes=2, feature_dim=3, max_len=4)
    classifier = make_classifier(spec)
    params = ModelParams(
        category_vectors=rng.normal(size=(2, 3)),
        word_embeddings=rng.normal(size=(6, 3)),
        classifier_params=rng.normal(size=classifier.init_params(rng).size),
    )
    batch = batch_for(rng, spec, params)
    value, grads = batch_objective_and_grads(batch, params, classifier)
    assert value == pytest.approx(batch_objective(batch, params, classifier))
    assert grads.category_vectors.shape == params.category_vectors.shape
    assert grads.word_embeddings.shape == params.word_embeddings.shape
    assert grads.classifier.shape == params.classifier_params.shape


def test_duplicate_negatives_accumulate(rng):
    # the same negative listed twice must receive twice the gradient
    spec = ClassifierSpec(kind="meanpool", num_classes=2, feature_dim=3, max_len=4)
    classifier = make_classifier(spec)

    def make_params():
        r = np.random.default_rng(3)
        return ModelParams(
            category_vectors=r.normal(size=(2, 3)),
            word_embeddings=r.normal(size=(5, 3)),
            classifier_params=r.normal(size=classifier.init_params(r).size),
        )

    feats = build_features(rng.normal(size=(3, 3)), 4)
    dup = [BatchItem(features=feats, steps=(((0, np.array([2, 2]))),))]
    h = 1e-6
    params = make_params()
    _, grads = batch_objective_and_grads(dup, params, classifier)
    up = make_params()
    up.word_embeddings[2] += np.array([h, 0.0, 0.0])
    down = make_params()
    down.word_embeddings[2] -= np.array([h, 0.0, 0.0])
    fd = (
        batch_objective(dup, up, classifier)
        - batch_objective(dup, down, classifier)
    ) / (2 * h)
    assert grads.word_embeddings[2][0] == pytest.approx(fd, abs=1e-6)


def test_exact_oracle_agreement_is_sanity_checked(rng):
    # the oracles themselves must agree with the library's exact softmax
    p = random_params(rng)
    for c in range(3):
        for w in range(7):
            lib = float(
                (p.word_embeddings @ p.category_vectors[c])[w]
                - np.log(np.exp(p.word_embeddings @ p.category_vectors[c]).sum())
            )
            want = exact_logprob_oracle(
                w, c, p.category_vectors.tolist(), p.word_embeddings.tolist()
            )
            assert lib == pytest.approx(want, abs=1e-9)
