#!/usr/bin/env python3
"""Regenerate the shipped analytics fixtures (deterministic; run from repo root).

Produces a synthetic two-day interaction log of 354 records containing exactly
50 mergeable pairs (25 with a 20 s gap, 25 with a 50 s gap; every other
same-thread gap is 300 s), so merging with a 60 s window yields 304
interactions. Tags over the 304 merged interactions follow the target
category distribution exactly.
"""

from __future__ import annotations

import random
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from tutor.analytics import merge_interactions, save_merged, save_tags  # noqa: E402
from tutor.config import Pricing  # noqa: E402
from tutor.service import REJECTION_NOTICE  # noqa: E402
from tutor.telemetry import InteractionRecord, compute_cost  # noqa: E402

OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "tutor" / "fixtures"

TARGET_DISTRIBUTION = {
    "ExplainConcept": 61,
    "Implement": 47,
    "HowTo": 38,
    "CodeCorrectness": 34,
    "CodeOnly": 31,
    "Unrelated": 23,
    "ExplainTaskDetail": 19,
    "FollowUp": 17,
    "ExplainCode": 13,
    "GiveExample": 13,
    "CourseMaterial": 5,
    "Misc": 3,
}

SINGLE_TEXTS = {
    "ExplainConcept": [
        "How do for-loops work in Python?",
        "How do functions work in Python?",
        "What is the difference between a list and a tuple?",
        "What does it mean that strings are immutable?",
        "How does variable scope work inside a function?",
        "What is a dictionary good for compared to a list?",
    ],
    "Implement": [
        "Please implement the function for me",
        "Write the code for task 2.",
        "Can you give me the full solution for the word count task?",
        "Just solve it for me, I ran out of time.",
        "Give me the code for the temperature converter.",
    ],
    "HowTo": [
        "How do I remove duplicates from a list?",
        "How do I loop over the items of a dictionary?",
        "How do I return two values from a function?",
        "How do I check whether a key is in a dictionary?",
        "How do I count how often each word occurs?",
    ],
    "CodeCorrectness": [
        "Why does this raise a KeyError when the name is not in the dictionary?",
        "My loop never stops, what is wrong with the condition?",
        "The function prints None instead of the result, why?",
        "I get an IndexError at basket[3], but the list has three items.",
        "Why is my total 0 after the loop?",
    ],
    "CodeOnly": [
        "counts = {}\nfor item in basket:\n    counts[item] = counts.get(item) + 1",
        "def average(values):\n    total = 0\n    for v in values:\n        total += v\nreturn total / len(values)",
        "for i in range(10)\n    print(i)",
        "ages = {\"ada\": 36}\nprint(ages[\"grace\"])",
        "shopping = []\nshopping.append(bread)",
    ],
    "Unrelated": [
        "What is the weather like today?",
        "Who won the football match yesterday?",
        "Can you recommend a good pizza recipe?",
        "What is the capital of France?",
    ],
    "ExplainTaskDetail": [
        "In task 2, do the keys have to be sorted alphabetically?",
        "Does task 1 require removing milk by value or by position?",
        "For the password task, does exactly eight characters count as valid?",
        "Should the average function return None or 0 for an empty list?",
    ],
    "FollowUp": [
        "Yes please",
        "Can you explain that again more slowly?",
        "And what about the second part?",
        "Ok, and then?",
        "That worked, thanks! One more question.",
    ],
    "ExplainCode": [
        "What does counts.get(item, 0) + 1 do exactly?",
        "What does the line low, high = min_and_max(values) mean?",
        "Can you explain what enumerate returns here?",
        "What does f\"{total:.2f}\" do in the print call?",
    ],
    "GiveExample": [
        "Can you give an example of a while loop with break?",
        "Can you show an example of a dictionary with the items method?",
        "Give me an example of list slicing.",
        "Can you show a small example of a function with a default parameter?",
    ],
    "CourseMaterial": [
        "Which lecture covers dictionaries?",
        "Where in the slides is the section about scope?",
        "Is there a course example for counting words?",
    ],
    "Misc": [
        "test",
        "asdf",
        "???",
    ],
}

PAIR_TEXTS = {
    "ExplainConcept": [
        ("How do nested loops work", "I mean when one for loop is inside another one?"),
        ("What is the difference between append and insert", "and when should I use which one?"),
    ],
    "HowTo": [
        ("How do I get the keys of a dictionary", "sorted alphabetically?"),
        ("How do I build a new list from an old one", "but with every price increased by 20 percent?"),
    ],
    "CodeCorrectness": [
        ("My function returns None", "even though I compute the right value inside the loop. Why?"),
        ("I get a TypeError in the total line", "it says int plus str is not supported."),
    ],
    "Implement": [
        ("Can you write the whole solution for task 3", "including the input handling part?"),
    ],
    "ExplainTaskDetail": [
        ("In the grade lookup task", "what should happen when the user types an empty name?"),
    ],
    "CodeOnly": [
        ("def is_valid(password):\n    for ch in password:", "        if ch.isdigit():\n            return True\n    return False"),
    ],
    "FollowUp": [
        ("Wait, that is not what I meant", "I meant the version with a while loop."),
    ],
    "GiveExample": [
        ("Can you give an example with a real list", "for instance a shopping list with three items?"),
    ],
    "Unrelated": [
        ("Do you know any good movies", "something to watch this weekend?"),
    ],
}

RESPONSES = [
    "Here is a hint: start from the empty case and think about what the loop should add each pass.",
    "A guiding question: which collection gives you lookup by key?",
    "Look at the course example with the get method; which part matches your task?",
    "Try tracing your code by hand with a two-element list. Where does it diverge from your expectation?",
    "Which variable changes inside the loop, and which should stay fixed?",
    "Check the assignment hint again: it names the method you need.",
]

PRICING = Pricing(prompt_price_per_1m=2.5, completion_price_per_1m=10.0)


def main() -> None:
    rng = random.Random(20251103)

    # Category slots for the 304 merged interactions, shuffled deterministically.
    slots: list[str] = []
    for category, count in TARGET_DISTRIBUTION.items():
        slots.extend([category] * count)
    assert len(slots) == 304
    rng.shuffle(slots)

    # Choose which merged interactions are two-record pairs: 25 at 20 s, 25 at 50 s.
    pair_categories = {cat for cat in PAIR_TEXTS}
    pair_indexes = [i for i, cat in enumerate(slots) if cat in pair_categories]
    rng.shuffle(pair_indexes)
    pairs = sorted(pair_indexes[:50])
    assert len(pairs) == 50
    pair_gap = {}
    for rank, index in enumerate(pairs):
        pair_gap[index] = 20 if rank % 2 == 0 else 50

    # Deal the 304 merged interactions across threads of 4-10, alternating days.
    thread_sizes = []
    remaining = 304
    while remaining > 0:
        size = min(remaining, rng.randint(4, 10))
        thread_sizes.append(size)
        remaining -= size

    days = [datetime(2025, 11, 3, 9, 0, 0, tzinfo=timezone.utc),
            datetime(2025, 11, 4, 9, 0, 0, tzinfo=timezone.utc)]

    records: list[InteractionRecord] = []
    category_by_interaction: dict[str, str] = {}
    cursor = 0
    counter = 0
    single_cursor: dict[str, int] = {}
    pair_cursor: dict[str, int] = {}

    def next_single(category: str) -> str:
        options = SINGLE_TEXTS[category]
        i = single_cursor.get(category, 0)
        single_cursor[category] = i + 1
        return options[i % len(options)]

    def next_pair(category: str) -> tuple[str, str]:
        options = PAIR_TEXTS[category]
        i = pair_cursor.get(category, 0)
        pair_cursor[category] = i + 1
        return options[i % len(options)]

    def make_record(thread_id: str, when: datetime, prompt: str, category: str) -> InteractionRecord:
        nonlocal counter
        counter += 1
        rejected = category == "Unrelated"
        response = REJECTION_NOTICE if rejected else RESPONSES[counter % len(RESPONSES)]
        prompt_tokens = 0 if rejected else (len(prompt) + 600) // 4
        completion_tokens = 0 if rejected else (len(response) + 3) // 4
        record = InteractionRecord(
            interaction_id=f"fx-i{counter:04d}",
            timestamp=when.strftime("%Y-%m-%dT%H:%M:%S.%fZ"),
            thread_id=thread_id,
            awareness="none",
            task_id=None,
            prompt_text=prompt,
            response_text=response,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            cost=float(compute_cost(prompt_tokens, completion_tokens, PRICING)),
            latency_ms=0 if rejected else 400 + (counter % 7) * 35,
            scope_verdict="out_of_scope" if rejected else "in_scope",
            leak_action="none",
            config_version=1,
            status="rejected" if rejected else "ok",
        )
        category_by_interaction[record.interaction_id] = category
        return record

    for thread_num, size in enumerate(thread_sizes):
        thread_id = f"fx-t{thread_num:03d}"
        day = days[thread_num % 2]
        when = day + timedelta(seconds=37 * thread_num)
        for _ in range(size):
            category = slots[cursor]
            if cursor in pair_gap:
                first, second = next_pair(category)
                records.append(make_record(thread_id, when, first, category))
                when += timedelta(seconds=pair_gap[cursor])
                records.append(make_record(thread_id, when, second, category))
            else:
                records.append(make_record(thread_id, when, next_single(category), category))
            when += timedelta(seconds=300)
            cursor += 1

    assert cursor == 304
    assert len(records) == 354, len(records)

    logs_dir = OUT_DIR / "logs"
    logs_dir.mkdir(parents=True, exist_ok=True)
    for old in logs_dir.glob("interactions-*.jsonl"):
        old.unlink()
    for record in records:
        path = logs_dir / f"interactions-{record.timestamp[:10]}.jsonl"
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(record.to_json_line() + "\n")

    # Merge with the shipped rule and tag per the slot plan.
    sortable = sorted((dict(r.__dict__) for r in records),
                      key=lambda r: (r["thread_id"], r["timestamp"]))
    merged = merge_interactions(sortable, 60.0)
    assert len(merged) == 304, len(merged)

    tags = {m.merged_id: category_by_interaction[m.interaction_ids[0]] for m in merged}
    observed: dict[str, int] = {}
    for category in tags.values():
        observed[category] = observed.get(category, 0) + 1
    assert observed == TARGET_DISTRIBUTION, observed

    save_merged(merged, OUT_DIR / "merged.json")
    save_tags(tags, OUT_DIR / "tags.json")
    print(f"wrote {len(records)} records, {len(merged)} merged interactions, "
          f"{len(tags)} tags under {OUT_DIR}")


if __name__ == "__main__":
    main()
