"""Smoke test for the lyricist_entropy extension module.

Build and install it first:

    pip install maturin
    maturin develop -m crates/python/Cargo.toml --release

then run `python python/smoke_test.py`.
"""

import math
import sys
import tempfile
from pathlib import Path

import lyricist_entropy as le


def check(cond, message):
    if not cond:
        sys.exit(f"FAIL: {message}")
    print(f"ok   {message}")


def main():
    check(le.entropy_of_counts([29, 1]) > 0.146 and le.entropy_of_counts([29, 1]) < 0.147,
          "entropy of [29, 1] is about 0.146 nats")
    check(abs(le.entropy_of_counts([3] * 8, base="2") - 3.0) < 1e-12, "uniform over 8 singers is 3 bits")

    corpus = le.Corpus.hypothesis(1)
    print(f"     {corpus!r}")
    stats = le.lyricist_entropies(corpus)
    check(len(stats) == corpus.n_lyricists, "one entropy row per lyricist")

    quantile = le.group(corpus)
    kmeans = le.group(corpus, method="kmeans")
    print(f"     {quantile!r}\n     {kmeans!r}")
    check(sum(kmeans.sizes()) == corpus.n_lyricists, "k-means keeps every lyricist")

    dataset = le.sample(corpus, quantile, seed=7)
    model = le.train(dataset, corpus)
    run = le.score(model, dataset, corpus)
    check(run["total"] > 0, f"scored {run['total']} test songs, accuracy {run['correct'] / run['total']:.2f}")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "corpus.jsonl"
        corpus.write_jsonl(path)
        check(len(le.Corpus.load(path)) == len(corpus), "corpus round-trips through jsonl")

        config = {"groupings": ["quantile"], "homogenous_repetitions": 1, "heterogenous_repetitions": 2}
        summary = le.run_experiment(path, Path(tmp) / "run", config)
        check(summary["failed"] == 0 and summary["datasets"] == 7, "experiment ran 7 datasets")
        for c in summary["correlations"]:
            r = c["correlation"]["pearson_r"] if c["correlation"] else math.nan
            print(f"     {c['experiment']}: r = {r:.3f}")
        check((Path(tmp) / "run" / "manifest.json").exists(), "manifest written")

    try:
        le.group(corpus, method="median")
    except ValueError:
        check(True, "unknown grouping method raises ValueError")
    else:
        check(False, "unknown grouping method raises ValueError")
    print("smoke test passed")


if __name__ == "__main__":
    main()
