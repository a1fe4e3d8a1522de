#!/usr/bin/env python3
"""Writes the seed knowledge-base entities (without PageRank) and link edges.

`retriever kb-build` turns these into data/kb.jsonl.
"""
import json
import math
import random
from pathlib import Path

HERE = Path(__file__).parent
DIM = 32

# kb_id, category, label, aliases, cluster
ENTITIES = [
    ("Q9036", "person", "Nikola Tesla", ["Nikola Tesla", "Tesla"], "science"),
    ("Q478214", "organization", "Tesla, Inc.", ["Tesla", "Tesla Inc.", "Nikola Tesla"], "business"),
    ("Q163343", "organization", "tesla (unit)", ["Tesla"], "science_unit"),
    ("Q937", "person", "Albert Einstein", ["Albert Einstein", "Einstein"], "science"),
    ("Q317521", "person", "Elon Musk", ["Elon Musk", "Musk"], "business"),
    ("Q1435", "location", "Zagreb", ["Zagreb"], "croatia"),
    ("Q224", "location", "Croatia", ["Hrvatska", "Republika Hrvatska", "Croatia"], "croatia"),
    ("Q1019513", "location", "Smiljan", ["Smiljan"], "croatia"),
    ("Q1384", "location", "New York", ["New York"], "usa"),
    ("Q60", "location", "New York City", ["New York City", "New York"], "usa"),
    ("Q201875", "organization", "GNK Dinamo Zagreb", ["Dinamo Zagreb", "Dinamo"], "football"),
    ("Q180344", "organization", "HNK Hajduk Split", ["Hajduk Split", "Hajduk"], "football"),
]

EDGES = [
    ("Q9036", "Q1019513"), ("Q9036", "Q60"), ("Q9036", "Q224"), ("Q937", "Q60"), ("Q937", "Q9036"),
    ("Q478214", "Q317521"), ("Q317521", "Q478214"), ("Q478214", "Q9036"), ("Q1435", "Q224"),
    ("Q1019513", "Q224"), ("Q60", "Q1384"), ("Q1384", "Q60"), ("Q201875", "Q1435"), ("Q180344", "Q224"),
    ("Q163343", "Q9036"), ("Q224", "Q1435"), ("Q201875", "Q224"),
]


def unit(v):
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def main():
    rng = random.Random(3)
    centers = {}
    for *_, cluster in ENTITIES:
        if cluster not in centers:
            centers[cluster] = unit([rng.gauss(0, 1) for _ in range(DIM)])
    # The "science" and "croatia" clusters overlap: Tesla was born in Smiljan.
    centers["croatia"] = unit([a + 0.6 * b for a, b in zip(centers["croatia"], centers["science"])])
    with open(HERE / "entities.jsonl", "w", encoding="utf-8") as f:
        for kb_id, cat, label, aliases, cluster in ENTITIES:
            emb = unit([c + rng.gauss(0, 0.25) for c in centers[cluster]])
            row = {"kb_id": kb_id, "category": cat, "label": label, "aliases": aliases,
                   "embedding": [round(x, 6) for x in emb]}
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    with open(HERE / "edges.tsv", "w", encoding="utf-8") as f:
        for a, b in EDGES:
            f.write(f"{a}\t{b}\n")


if __name__ == "__main__":
    main()
