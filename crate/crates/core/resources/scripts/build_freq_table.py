"""Build resources/wiki_freq_en.tsv from the wordfreq "large" English list.

wordfreq's English data blends several sources, English Wikipedia among them.
Each bin i of the cBpack file holds words with frequency 10^(-i/100); the
table stores that frequency scaled to occurrences per 10^9 tokens.

Usage: python3 build_freq_table.py path/to/large_en.msgpack.gz > wiki_freq_en.tsv
"""

import gzip
import re
import sys

import msgpack

WORD = re.compile(r"[^\W_]+(?:['\-][^\W_]+)*")


def main(path):
    with gzip.open(path, "rb") as fh:
        data = msgpack.load(fh, raw=False)
    header, bins = data[0], data[1:]
    assert header.get("format") == "cB", header
    print("# word frequencies per 1e9 tokens, built from wordfreq 3.1.1 large_en")
    print("# version: wordfreq-3.1.1-large-en")
    for i, words in enumerate(bins):
        per_billion = 1e9 * 10 ** (-i / 100)
        for w in sorted(words):
            if WORD.fullmatch(w) and any(c.isalpha() for c in w):
                print(f"{w}\t{per_billion:.6g}")


if __name__ == "__main__":
    main(sys.argv[1])
