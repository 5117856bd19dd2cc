#!/usr/bin/env python3
"""Writes the synthetic sample corpus under data/sample/.

The real norms are not redistributable, so the sample mixes a handful of
hand-written items with generated "X is Y" metaphors. Output is fully
determined by SEED.

    python3 tools/make_sample_corpus.py [outdir]
"""

import csv
import json
import random
import sys
from pathlib import Path

SEED = 20231018

# (id, sentence, subject, object, source, paraphrases best..worst, question, object clause, fact)
# The object clause is the property sentence used by the QUD/similarity rationales.
EXAMPLES = [
    ("A bagpipe is a newborn baby.", "A bagpipe", "a newborn baby",
     ["A bagpipe is loud.", "A bagpipe is delicate.", "A bagpipe is a musical instrument.", "A bagpipe is quiet."],
     "How does a bagpipe sound?", "loud", "Bagpipes originated in Scotland."),
    ("A lawyer is a shark.", "A lawyer", "a shark",
     ["A lawyer is aggressive.", "A lawyer is a good swimmer.", "A lawyer is a legal professional.",
      "A lawyer is timid."],
     "How does a lawyer behave?", "aggressive", "Lawyers must pass a bar exam."),
    ("A smile is a magnet.", "A smile", "a magnet",
     ["A smile is attractive.", "A smile is metallic.", "A smile is a facial expression.", "A smile is repellent."],
     "What effect does a smile have on people?", "attractive", "Smiling uses muscles around the mouth."),
    ("Time is a thief.", "Time", "a thief",
     ["Time takes things away from us.", "Time is sneaky.", "Time is measured in hours.",
      "Time gives things to us."],
     "What does time do to us?", "something that takes things away", "Time is measured by clocks."),
    ("My classroom is a zoo.", "My classroom", "a zoo",
     ["My classroom is wild and noisy.", "My classroom is full of visitors.", "My classroom is a place to learn.",
      "My classroom is calm and orderly."],
     "What is my classroom like?", "wild and noisy", "Classrooms usually have desks and a board."),
    ("Education is a ladder.", "Education", "a ladder",
     ["Education helps you rise.", "Education is made of steps.", "Education takes place in schools.",
      "Education holds you down."],
     "What does education do for a person?", "something that helps you rise", "Education is compulsory in many countries."),
    ("My job is a jail.", "My job", "a jail",
     ["My job is confining.", "My job is guarded.", "My job is a source of income.", "My job is liberating."],
     "How does my job feel?", "confining", "Most jobs have fixed working hours."),
    ("A friend is an anchor.", "A friend", "an anchor",
     ["A friend keeps you steady.", "A friend is heavy.", "A friend is a person you know.",
      "A friend sets you adrift."],
     "What does a friend do for you?", "something that keeps you steady", "People often meet friends at school."),
    ("Music is medicine.", "Music", "medicine",
     ["Music is healing.", "Music is bitter.", "Music is organized sound.", "Music is harmful."],
     "What does music do for people?", "healing", "Music is written with notes on a staff."),
    ("A rumor is a wildfire.", "A rumor", "a wildfire",
     ["A rumor spreads quickly.", "A rumor is hot.", "A rumor is a piece of information.", "A rumor dies out quickly."],
     "How does a rumor travel?", "something that spreads quickly", "Rumors are often passed on by word of mouth."),
]

SPECIAL = [
    # (sentence, subject, object, source, stored paraphrases with scores, comprehensibility)
    ("Love is a flower.", "Love", "a flower", "nonliterary",
     [("Love is beautiful and grows.", 4), ("Love is fragile.", 3), ("Love is an emotion.", 2),
      ("Love is ugly and withers.", 1)], 6.1),
    ("Clouds are tossed pillows.", "Clouds", "tossed pillows", "nonliterary",
     [("Clouds are made of water vapor.", 2), ("Clouds are soft and fluffy.", 4), ("Clouds are hard.", 1),
      ("Clouds are scattered.", 3)], 5.8),
    ("Memories are the roots that clutch.", "Memories", "the roots that clutch", "literary",
     [("Memories are unsettling.", 1), ("Memories are long.", 3), ("Memories are stabilizing.", 4),
      ("Memories are thoughts about the past.", 2)], 5.4),
    ("Choppy waves are pale octopi.", "Choppy waves", "pale octopi", "literary",
     [("Choppy waves are found in the ocean.", 2), ("Choppy waves are still.", 1),
      ("Choppy waves are writhing and restless.", 4), ("Choppy waves are pale.", 3)], 5.1),
]

SUBJECTS = [
    ("My boss", "is the person I report to"), ("A city", "is a large settlement"),
    ("The economy", "is measured by output"), ("A marriage", "is a legal union"),
    ("My brother", "is older than me"), ("A promise", "is a statement about the future"),
    ("A mind", "is located in the head"), ("My car", "has four wheels"),
    ("A library", "lends books"), ("Childhood", "is the early part of life"),
    ("The internet", "connects computers"), ("A politician", "runs for office"),
    ("Old age", "comes after middle age"), ("A deadline", "is a date"),
    ("My apartment", "has two rooms"), ("A teacher", "works at a school"),
    ("The highway", "has several lanes"), ("A contract", "is signed by two parties"),
    ("My grandmother", "was born long ago"), ("A hospital", "treats patients"),
    ("A novel", "has chapters"), ("The office", "has many desks"),
    ("A conversation", "involves speaking"), ("My neighbor", "lives next door"),
]

OBJECTS = [
    ("a maze", "confusing", "full of walls", "straightforward"),
    ("a volcano", "explosive", "mountainous", "calm"),
    ("a sponge", "absorbent", "yellow", "repellent"),
    ("a furnace", "intensely hot", "made of iron", "cold"),
    ("a rock", "dependable", "grey", "unreliable"),
    ("a battlefield", "full of conflict", "muddy", "peaceful"),
    ("a snail", "slow", "slimy", "fast"),
    ("a fortress", "hard to enter", "made of stone", "open to everyone"),
    ("a rollercoaster", "full of ups and downs", "made of steel", "steady"),
    ("a puzzle", "hard to figure out", "made of pieces", "obvious"),
    ("a garden", "flourishing", "green", "barren"),
    ("a desert", "empty", "sandy", "lively"),
    ("a mirror", "reflective of others", "made of glass", "unrevealing"),
    ("a treasure", "precious", "buried", "worthless"),
    ("a storm", "turbulent", "wet", "serene"),
    ("a blanket", "comforting", "woven", "uncomfortable"),
    ("a circus", "chaotic", "colorful", "orderly"),
    ("a bridge", "connecting", "long", "dividing"),
    ("a cage", "restricting", "barred", "freeing"),
    ("a beehive", "busy", "sticky", "idle"),
    ("a candle", "short-lived", "waxy", "everlasting"),
    ("a sieve", "forgetful", "full of holes", "retentive"),
    ("a compass", "guiding", "round", "misleading"),
    ("an iceberg", "mostly hidden", "cold", "fully visible"),
    ("a feather", "light", "soft", "heavy"),
    ("a clock", "punctual", "round", "late"),
    ("a river", "always moving", "wet", "stagnant"),
    ("a jungle", "dangerous and competitive", "humid", "safe and cooperative"),
]

LIT_SUBJECTS = [
    ("The evening", "comes after the afternoon"), ("Her voice", "is produced by the throat"),
    ("The moon", "orbits the earth"), ("His heart", "pumps blood"),
    ("The sea", "covers most of the planet"), ("Sorrow", "is a feeling"),
    ("The night", "is the time without sun"), ("Hope", "is an expectation"),
    ("Fame", "comes from recognition"), ("The wind", "is moving air"),
    ("Silence", "is the absence of sound"), ("The past", "has already happened"),
]

LIT_OBJECTS = [
    ("a patient etherized upon a table", "motionless and numb", "sick", "restless and alert"),
    ("a broken bell", "harsh and discordant", "made of bronze", "harmonious"),
    ("a ghostly galleon", "drifting and eerie", "wooden", "anchored and familiar"),
    ("a thing with feathers", "light and uplifting", "winged", "heavy and crushing"),
    ("a rag-and-bone shop", "cluttered with leftovers", "dusty", "tidy and new"),
    ("a burning tiger", "fierce and bright", "striped", "meek and dim"),
    ("a dusty drawer", "full of forgotten things", "wooden", "freshly organized"),
    ("a frozen lake", "still and cold", "slippery", "warm and stirring"),
    ("a worn-out coat", "tired and frayed", "woolen", "fresh and whole"),
    ("a bee in a bottle", "trapped and frantic", "buzzing", "free and relaxed"),
]


def lower_first(s):
    return s[0].lower() + s[1:]


def copula(subject):
    return "are" if subject.endswith("s") and not subject.endswith("ss") else "is"


def paraphrases_for(subject, apt, less, fact, opposite):
    verb = copula(subject)
    return [
        (f"{subject} {verb} {apt}.", 4),
        (f"{subject} {verb} {less}.", 3),
        (f"{subject} {fact}.", 2),
        (f"{subject} {verb} {opposite}.", 1),
    ]


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "sample"
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)

    items = []  # dicts in file order
    norms = {}
    bank = []
    example_ids = []

    def add(sentence, subject, obj, source, paraphrases, comp, fam):
        item_id = f"m{len(items) + 1:03d}"
        items.append({
            "id": item_id, "sentence": sentence, "subject": subject, "object": obj, "source": source,
            "comprehensibility": None, "familiarity": None,
            "paraphrases": [{"text": t, "appropriateness": a} for t, a in paraphrases],
        })
        norms[item_id] = (comp, fam)
        return item_id

    def familiarity():
        return round(rng.uniform(1.5, 6.5), 2)

    for i, (sentence, subject, obj, ps, question, prop, fact) in enumerate(EXAMPLES):
        stored = list(zip(ps, [4, 3, 2, 1]))
        if i > 0:  # the bagpipe item keeps the published order
            rng.shuffle(stored)
        item_id = add(sentence, subject, obj, "nonliterary", stored, round(rng.uniform(5.5, 6.9), 2), familiarity())
        example_ids.append(item_id)
        best_pos = [a for _, a in stored].index(4)
        letter = "abcd"[best_pos]
        best = ps[0]
        saying = f"so the speaker is saying {letter}) {lower_first(best)}"
        subj_lc, obj_cap = lower_first(subject), obj[0].upper() + obj[1:]
        # Properties phrased as noun clauses ("something that ...") read after "is" as-is.
        bank.append({"item_id": item_id, "condition": "qud", "body":
                     f'The speaker is addressing the question "{question}"\n'
                     f"The speaker answers this question by comparing {subj_lc} to {obj}.\n"
                     f"{obj_cap} is {prop}, {saying}"})
        bank.append({"item_id": item_id, "condition": "similarity", "body":
                     f"{obj_cap} is {prop}.\n{subject} is also {prop}, {saying}"})
        bank.append({"item_id": item_id, "condition": "subject_object", "body":
                     f"The subject of the metaphor is {subj_lc}. The object of the metaphor is {obj}, {saying}"})
        bank.append({"item_id": item_id, "condition": "non_explanation", "body":
                     f"{fact} The answer is {letter}) {best}"})

    for sentence, subject, obj, source, stored, comp in SPECIAL:
        add(sentence, subject, obj, source, stored, comp, familiarity())

    def generate(subjects, objects, count, source, comp_values):
        pairs = [(s, o) for s in subjects for o in objects]
        rng.shuffle(pairs)
        ids = []
        for (subject, fact), (obj, apt, less, opposite) in pairs[:count]:
            sentence = f"{subject} {copula(subject)} {obj}."
            stored = paraphrases_for(subject, apt, less, fact, opposite)
            rng.shuffle(stored)
            ids.append(add(sentence, subject, obj, source, stored, comp_values.pop(), familiarity()))
        return ids

    n_nonlit = 240 - len(EXAMPLES) - 2
    nonlit_ids = generate(SUBJECTS, OBJECTS, n_nonlit, "nonliterary",
                          [round(rng.uniform(4.0, 6.9), 2) for _ in range(n_nonlit)])
    # 68 generated literary items: 43 comprehensible (>= 5) and 25 opaque.
    lit_comp = [round(rng.uniform(5.0, 6.5), 2) for _ in range(43)] + [round(rng.uniform(1.5, 4.9), 2) for _ in range(25)]
    rng.shuffle(lit_comp)
    generate(LIT_SUBJECTS, LIT_OBJECTS, 68, "literary", lit_comp)

    excluded = rng.sample(nonlit_ids, 5)
    reasons = ["dated", "derogatory", "dated", "dated", "derogatory"]

    with open(out / "corpus.jsonl", "w") as f:
        for item in items:
            f.write(json.dumps(item, ensure_ascii=False) + "\n")
    with open(out / "norms.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "comprehensibility", "familiarity"])
        for item_id, (comp, fam) in norms.items():
            w.writerow([item_id, f"{comp:.2f}", f"{fam:.2f}"])
    with open(out / "exclusions.tsv", "w") as f:
        f.write("# id<TAB>reason (editorial exclusions applied at load)\n")
        for item_id, reason in sorted(zip(excluded, reasons)):
            f.write(f"{item_id}\t{reason}\n")
    with open(out / "rationales.jsonl", "w") as f:
        for rec in bank:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")

    config = {
        "corpus": {"path": "corpus.jsonl", "format": "jsonl", "exclusions": "exclusions.tsv",
                   "norms": "norms.csv", "comprehensibility_threshold": 5, "filter_source": "literary"},
        "rationale_bank": "rationales.jsonl",
        "examples": example_ids,
        "split": {"sizes": [30, 100, 150], "evaluate": "test"},
        "letters": "shuffled",
        "conditions": ["options_only", "no_rationale", "non_explanation", "subject_object", "qud", "similarity"],
        "params": {"temperature": 0.2, "max_tokens": 256},
        "backends": [
            {"label": "mock-best", "kind": "mock", "policy": "always-best"},
            {"label": "mock-random", "kind": "mock", "policy": "uniform-random", "seed": 7},
        ],
        "parallelism": 4,
        "requests_per_second": 0,
        "retry": {"max_retries": 5, "base_delay_ms": 1000, "multiplier": 2, "max_delay_ms": 60000},
        "cache_dir": "cache",
        "output_dir": "out",
        "seeds": {"split": 1, "letters": 2, "example_order": 3, "bootstrap": 4, "chance": 5},
        "analysis": {"bootstrap_reps": 10000, "chance_reps": 10000, "level": 0.95, "gap_k": 30},
    }
    with open(out / "config.json", "w") as f:
        json.dump(config, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
