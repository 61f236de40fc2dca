#!/usr/bin/env python3
"""UPOS tagger filter speaking the JSONL protocol.

Reads {"tokens": [...]} per line (one sentence, already tokenized), answers
{"tags": [{"tag","begin","end"}]} with character spans over the space-joined
sentence text. Intended for
`prosoprobe tag --tagger "python3 tools/spacy_tagger.py"`.

Requires spaCy and a model (default en_core_web_sm).
"""

import argparse
import json
import sys


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spacy-model", default="en_core_web_sm")
    args = ap.parse_args()

    import spacy
    from spacy.tokens import Doc

    nlp = spacy.load(args.spacy_model, disable=["parser", "ner", "lemmatizer"])

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        words = json.loads(line)["tokens"]
        spans = []
        if words:
            # Pre-tokenized input: build the Doc ourselves so spaCy never
            # re-splits the words, keeping spans aligned 1:1.
            doc = Doc(nlp.vocab, words=words)
            for _, proc in nlp.pipeline:
                doc = proc(doc)
            offset = 0
            for word, token in zip(words, doc):
                spans.append(
                    {"tag": token.pos_, "begin": offset, "end": offset + len(word)}
                )
                offset += len(word) + 1
        sys.stdout.write(json.dumps({"tags": spans}) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
