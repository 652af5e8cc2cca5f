# SPDX-License-Identifier: Apache-2.0
import math

import pytest

import ssdvae

TINY = dict(
    synth__frames=3,
    synth__slot_vocab=8,
    synth__home_size=2,
    synth__train_docs=150,
    synth__valid_docs=40,
    synth__test_docs=40,
    synth__events=3,
    synth__inc_docs=60,
    model__frames=3,
    model__vocab=60,
    model__events=3,
    model__embed_dim=6,
    model__frame_dim=6,
    model__enc_layers=1,
    model__enc_hidden=4,
    model__dec_layers=1,
    model__dec_hidden=8,
    model__role_dim=3,
    train__batch=25,
    train__max_epochs=2,
    train__lr=0.003,
)


@pytest.fixture(scope="module")
def data():
    return ssdvae.synth(ssdvae.config(**TINY))


@pytest.fixture(scope="module")
def trained(data):
    return ssdvae.train(ssdvae.config(**TINY), data["train"], data["valid"])


def test_config_round_trip():
    text = ssdvae.config(train__epsilon=0.9)
    assert "train.epsilon = 0.90000000000000002" in text
    assert ssdvae.config_text({}, text) == text
    assert all(ssdvae.describe_key(k) for k in ssdvae.config_keys())
    with pytest.raises(ssdvae.ConfigError):
        ssdvae.config(train__nothing=1)


def test_gumbel_softmax():
    p = ssdvae.gumbel_softmax([math.log(2.0), 0.0, 0.0], 1.0, [0.0, 0.0, 0.0])
    assert p == pytest.approx([0.5, 0.25, 0.25])
    assert ssdvae.entropy([0.5, 0.5]) == pytest.approx(math.log(2.0))
    with pytest.raises(ssdvae.ContractError):
        ssdvae.gumbel_softmax([0.0, 1.0], 0.0, [0.0, 0.0])


def test_synth_is_deterministic(data):
    again = ssdvae.synth(ssdvae.config(**TINY))
    assert again["train"] == data["train"]
    assert len(data["train"]) == 150
    assert data["oracle_ppl_test"] > 1.0


def test_train_and_evaluate(data, trained, tmp_path):
    model, history = trained
    assert [h["epoch"] for h in history] == [1, 2]
    assert model.best_metric == min(h["valid"] for h in history)
    ppl = model.perplexity(data["test"])
    assert 1.0 < ppl < model.vocab_size
    assert model.perplexity(data["test"]) == ppl

    path = str(tmp_path / "m.ckpt")
    model.save(path)
    back = ssdvae.Model.load(path)
    assert back.perplexity(data["test"]) == ppl
    assert back.config_text == model.config_text


def test_cloze_and_generation(data, trained):
    model, _ = trained
    samples = ssdvae.build_inc(data["inc_source"], 30)
    r = model.inc_accuracy(samples)
    assert 0.0 <= r["accuracy"] <= 1.0
    assert len(r["predictions"]) == 30

    seed = data["test"][0].split("\t")[1].split()[:4]
    script = model.generate(seed, n=2, temperature=0.0)
    assert len(script) == 2
    for frame, tokens in script:
        assert 0 <= frame < 3
        assert len(tokens) == 4
    assert model.generate(seed, n=2, temperature=0.0) == script
    frames = model.predict_frames(data["test"][:5])
    assert len(frames) == 5
