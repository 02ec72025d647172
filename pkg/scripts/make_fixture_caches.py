#!/usr/bin/env python3
"""Regenerate the replay caches shipped under fixtures/cache/.

The informalizations below are hand-written English renderings of each
fixture candidate, stored under the cache key the pipeline computes for
provider name "fixture".  Run from the repository root:

    python scripts/make_fixture_caches.py
"""

from pathlib import Path

from formalrank.cache import JsonFileCache, content_key
from formalrank.dataset import load_dataset

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
PROVIDER = "fixture"

INFORMAL_TEXTS = {
    ("math-recurring-product", "no1"): (
        "Suppose x equals 0.6 and y equals 6. Show that the product of x and y is 4."
    ),
    ("math-recurring-product", "no2"): (
        "Suppose x equals 2/3 and y equals 6. Show that the product of x and y is 4."
    ),
    ("math-recurring-product", "no3"): (
        "Suppose a equals 2/3 and b equals 6. Show that the product of a and b is 4."
    ),
    ("math-recurring-product", "no4"): (
        "Suppose x equals 0.66 and y equals 6. Show that the product of x and y is 4."
    ),
    ("math-recurring-product", "no5"): (
        "Suppose x equals 0.666 and y equals 6. Show that the product of x and y is 4."
    ),
    ("math-linear-eval", "c1"): (
        "If x = 5, show that the value of 3x + 2 is 17."
    ),
    ("math-linear-eval", "c2"): (
        "If y = 5, show that the value of 3y + 2 is 17."
    ),
    ("math-linear-eval", "c3"): (
        "If x = 5, show that the value of 3x + 2 is 18."
    ),
    ("math-linear-eval", "c4"): (
        "Show that 17 equals 17."
    ),
    ("numbertheory-2dvd4expn", "c1"): (
        "Show that for any natural number n, 2 divides 4 to the power n."
    ),
    ("numbertheory-2dvd4expn", "c2"): (
        "For every natural number n, show that 2 divides 4 raised to the power n."
    ),
    ("numbertheory-2dvd4expn", "c3"): (
        "Show that for any natural number n, 2 divides 2 to the power n."
    ),
    ("numbertheory-2dvd4expn", "c4"): (
        "Show that for any natural number n, 4 divides 4 to the power n."
    ),
    ("oracle-2dvd4expn", "c1"): (
        "For every natural number m, show that 2 divides 4 to the power m."
    ),
    ("oracle-2dvd4expn", "c2"): (
        "Show that 2 divides 4 raised to the real power n."
    ),
    ("oracle-2dvd4expn", "c3"): (
        "Show that 2 divides 4."
    ),
    ("oracle-recurring-product", "c1"): (
        "Assume a is 2/3 and b is 6. Show that a times b equals 4."
    ),
    ("oracle-recurring-product", "c2"): (
        "Show that 4 equals 4."
    ),
    ("oracle-recurring-product", "c3"): (
        "Assume x is 0.6 and y is 6. Show that x times y equals 4."
    ),
}


def main() -> None:
    cache = JsonFileCache(FIXTURES / "cache" / "informal")
    written = 0
    for dataset in ("fig1.jsonl", "mini_math.jsonl", "mini_oracle.jsonl"):
        for labeled in load_dataset(FIXTURES / dataset):
            problem = labeled.problem
            for candidate in problem.candidates:
                text = INFORMAL_TEXTS.get((problem.id, candidate.id))
                if text is None:
                    raise SystemExit(
                        f"no informal text for {problem.id}/{candidate.id}"
                    )
                key = content_key("informal", PROVIDER, candidate.formal_text)
                cache.put(key, {"informal_text": text, "provider": PROVIDER})
                written += 1
    print(f"wrote {written} informalization cache entries")


if __name__ == "__main__":
    main()
