"""Exercises the Python bindings end to end on a tiny model.

Build the extension first, e.g. `maturin develop -m crates/py/Cargo.toml`,
or copy target/release/libspellcap_py.so next to this file as spellcap_py.so.
"""

import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import spellcap_py as sc


def main():
    data = sc.generate_dataset(60, seed=3)
    assert len(data) == 60
    assert data == sc.generate_dataset(60, seed=3)
    gold, nbest = data[0]
    assert gold and 1 <= len(nbest) <= 3

    zero = "".join(
        f"{k} = 0\n"
        for k in [
            "letter_sub_prob", "filler_prob", "nato_prob", "fullname_prob", "name_drop_prob",
            "name_corrupt_prob", "nato_variant_prob", "nato_collapse_prob", "label_error_prob", "jitter",
        ]
    )
    clean = sc.generate_dataset(20, seed=1, noise=zero + "nbest = 1\npattern_weights = spell_only:1\n")
    for g, hyps in clean:
        name, conf, source = sc.baseline_predict(hyps)
        assert (name, source) == (g, "baseline"), (g, hyps, name)
        assert 0.0 <= conf <= 1.0

    name, conf, _ = sc.baseline_predict(["jone/0.9 j/0.7 o/0.6 n/0.6 e/0.6"])
    assert name == "jone"

    assert sc.edit_distance("kitten", "sitting") == 3
    assert sc.word_error_rate(["a", "b"], ["a", "c"]) == 0.5
    assert sc.edit_distance_confidence("jon", "john/0.9 j/0.8") == 0.75

    results = [("ann", 0.9, "ann"), ("bob", 0.1, "rob"), ("cy", 0.5, "cy"), ("di", 0.3, "dee")]
    assert sc.exact_match_error(results) == 0.5
    curve = sc.er_curve(results, n_points=4)
    assert [round(e, 6) for _, e, _ in curve] == [0.5, round(1 / 3, 6), 0.0, 0.0]

    corpus = [hyps[0] for _, hyps in data]
    bpe = sc.Bpe.learn([" ".join(t.rsplit("/", 1)[0] for t in h.split()) for h in corpus], 30)
    assert bpe.vocab_size == 33 + len(bpe.merges)
    assert bpe.decode(bpe.encode("j o h n")) == "j o h n"

    model = sc.Model(bpe, seed=0, n_layers=1, n_heads=2, d_model=16, d_ff=32)
    history = model.train(data[:50], data[50:], learning_rate=3e-3, epochs=2, batch_size=16)
    assert [h[0] for h in history] == [1, 2]
    assert all(h[1] > 0 and h[2] is not None for h in history)
    pred = model.predict("j o h n")
    assert pred[2] == "seq2seq"

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "m.ckpt")
        model.save(path)
        again = sc.Model.load(path)
        assert again.n_params == model.n_params
        # checkpoints store f32 weights
        a, b = again.predict("j o h n"), model.predict("j o h n")
        assert a[0] == b[0] and abs(a[1] - b[1]) < 1e-3
        try:
            sc.Model.load(os.path.join(d, "missing.ckpt"))
        except OSError:
            pass
        else:
            raise AssertionError("expected OSError")

    try:
        sc.generate_dataset(0)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    print("smoke test ok")


if __name__ == "__main__":
    main()
