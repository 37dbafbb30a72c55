"""Brute-force metric recount used as an independent oracle.

Works on plain lists of strings so it shares nothing with the package's
confusion-matrix code.
"""

from __future__ import annotations

import random


def recount(pred: list[str], gold: list[bool]) -> tuple[float | None, float | None]:
    """Return (error rate, F1 on False) over answered facts, or (None, None)."""
    pairs = [(p, g) for p, g in zip(pred, gold) if p != "NotAnswered"]
    if not pairs:
        return None, None
    wrong = sum(1 for p, g in pairs if (p == "True") != g)
    er = 100.0 * wrong / len(pairs)
    said_false = [g for p, g in pairs if p == "False"]
    really_false = [p for p, g in pairs if not g]
    hits = sum(1 for g in said_false if not g)
    if not said_false or not really_false:
        return er, 0.0
    precision = hits / len(said_false)
    recall = hits / len(really_false)
    if precision + recall == 0:
        return er, 0.0
    return er, 2 * precision * recall / (precision + recall) * 100.0


def random_vectors(count: int, seed: int = 7, max_n: int = 1000):
    """Yield (pred, gold) string/bool vectors including the degenerate shapes."""
    rng = random.Random(seed)
    edge = [
        (["True"] * 50, [True] * 50),
        (["True"] * 50, [False] * 50),
        (["False"] * 50, [False] * 50),
        (["False"] * 50, [True] * 50),
        (["NotAnswered"] * 50, [True] * 25 + [False] * 25),
        (["True"], [False]),
        (["False"], [False]),
    ]
    yield from edge
    for _ in range(count - len(edge)):
        n = rng.randint(1, max_n)
        p_true = rng.random()
        p_na = rng.choice([0.0, 0.05, 0.5, 1.0]) if rng.random() < 0.3 else rng.random() * 0.2
        gold = [rng.random() < p_true for _ in range(n)]
        pred = [
            "NotAnswered" if rng.random() < p_na else rng.choice(["True", "False"])
            for _ in range(n)
        ]
        yield pred, gold
