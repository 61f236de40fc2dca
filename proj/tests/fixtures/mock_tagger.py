#!/usr/bin/env python3
"""Stand-in tagger speaking the JSONL filter protocol.

Reads {"tokens": [...]} per line, answers {"tags": [{"tag","begin","end"}]}
with spans over the space-joined text. Tags come from a tiny lookup so the
tests can predict them exactly.
"""
import json
import sys

LEXICON = {
    "the": "DET",
    "a": "DET",
    "dog": "NOUN",
    "cat": "NOUN",
    "barks": "VERB",
    "runs": "VERB",
    "quickly": "ADV",
    "and": "CCONJ",
}
PUNCT = set(".,;:!?")


def tag_word(word):
    if word in LEXICON:
        return LEXICON[word]
    if all(c in PUNCT for c in word):
        return "PUNCT"
    if word[:1].isupper():
        return "PROPN"
    return "NOUN"


def main():
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        tokens = json.loads(line)["tokens"]
        spans = []
        offset = 0
        for tok in tokens:
            spans.append(
                {"tag": tag_word(tok), "begin": offset, "end": offset + len(tok)}
            )
            offset += len(tok) + 1
        sys.stdout.write(json.dumps({"tags": spans}) + "\n")


if __name__ == "__main__":
    main()
