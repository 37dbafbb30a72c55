"""Generate the offline desk fixture shipped as ``faaf/data/wikievalfacts_desk.jsonl``.

The published dataset is not redistributed here.  This fixture has the same
shape as the published one: 50 QA pairs, 281 facts, and per-variant label totals
(ungrounded 86 True, poor 24 True).  Record ``sri-lanka-crisis`` uses the
question, answers and facts of the published worked example.  Every other
record is synthetic: fictional places with templated facts, and labels placed
by a seeded RNG.  Answer texts agree with their labels: a supported fact
appears verbatim in the answer, an unsupported one is either altered or left out.

    python scripts/build_desk_fixture.py  # rewrites the fixture in place
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from faaf.core import AnswerKind, QARecord, make_facts  # noqa: E402
from faaf.dataset import DatasetFile, save_dataset  # noqa: E402

SEED = 20240417
N_PAIRS = 50
N_FACTS = 281
UNGROUNDED_TRUE = 86
POOR_TRUE = 24
OUT = Path(__file__).resolve().parents[1] / "src" / "faaf" / "data" / "wikievalfacts_desk.jsonl"

SRI_LANKA = {
    "id": "sri-lanka-crisis",
    "question": "What factors contributed to the Sri Lankan economic crisis?",
    "ground_truth": (
        "The Sri Lankan economic crisis was caused by multiple compounding factors. These include tax cuts "
        "and money creation by the government, which led to budget deficits and a decline in government "
        "revenue. The government's decision to shift to organic or biological farming also played a role. "
        "Additionally, the crisis was exacerbated by the 2019 Sri Lanka Easter bombings and the impact of the "
        "COVID-19 pandemic. The country's high external debt, with a significant increase in foreign debt in "
        "recent years, also contributed to the crisis. The combination of these factors resulted in "
        "unprecedented levels of inflation, near-depletion of foreign exchange reserves, shortages of medical "
        "supplies, and an increase in prices of basic commodities."
    ),
    "ungrounded": (
        "There were several factors that contributed to the Sri Lankan economic crisis:\n"
        "1. High levels of government debt: Sri Lanka had accumulated a significant amount of government debt, "
        "both domestic and foreign. This debt burden became unsustainable, leading to a crisis in public finances.\n"
        "2. Fiscal mismanagement: The government had been running large budget deficits for several years, "
        "spending more than it was earning. This led to a widening fiscal deficit and increased borrowing to "
        "finance government expenditure.\n"
        "3. Political instability: Sri Lanka experienced political instability during this period, with frequent "
        "changes in government and policy uncertainty. This created an unfavourable business environment and "
        "deterred foreign investment.\n"
        "4. Declining exports: Sri Lanka's export sector, particularly garments and textiles, faced challenges due "
        "to global economic slowdowns and increased competition from other countries. This led to a decline in "
        "export earnings, which further strained the country's external finances.\n"
        "5. High inflation: Sri Lanka experienced high inflation during this period, which eroded the purchasing "
        "power of the population and increased the cost of living. This put additional pressure on the economy "
        "and contributed to the crisis.\n"
        "6. External shocks: Sri Lanka was also affected by external shocks, such as rising oil prices and global "
        "financial market volatility. These factors further exacerbated the economic challenges faced by the country.\n"
        "7. Structural issues: Sri Lanka had several structural issues that hindered its economic growth, such as "
        "a lack of diversification in the economy, inadequate infrastructure, and low productivity levels. These "
        "issues made it difficult for the country to sustain economic growth and overcome the crisis."
    ),
    "poor": (
        "There were several factors that contributed to the Sri Lankan economic crisis. Sri Lanka is known for "
        "its beautiful beaches and rich cultural heritage."
    ),
    "facts": [
        "Tax cuts and money creation by the government contributed to the Sri Lankan economic crisis.",
        "Budget deficits and a decline in government revenue were factors in the Sri Lankan economic crisis.",
        "The governments decision to shift to organic or biological farming played a role in the crisis.",
        "The 2019 Sri Lanka Easter bombings exacerbated the economic crisis.",
        "The impact of the COVID 19 pandemic contributed to the Sri Lankan economic crisis.",
        "High external debt, with a significant increase in foreign debt in recent years, also contributed to the crisis.",
    ],
}

SYLLABLES = ["var", "nol", "bre", "tas", "ke", "lom", "dri", "ska", "mer", "ov", "ath", "quen", "ri", "sol", "dun", "hal"]
REGIONS = ["northern lake", "eastern valley", "southern coast", "western plateau", "central plain", "upper river"]
PRODUCTS = ["blue glassware", "smoked cheese", "copper bells", "wool blankets", "river pearls", "cedar boats", "herbal tea"]
EVENTS = ["lantern festival", "rowing race", "harvest fair", "choir contest", "kite parade", "chess open"]
MONTHS = ["March", "April", "May", "June", "August", "September", "October"]
PEOPLE = ["Ilse Marren", "Tomas Quill", "Ada Renske", "Oren Vaile", "Mira Castell", "Jonas Pell", "Lida Orm"]
MATERIALS = ["grey granite", "red brick", "pale limestone", "timber and slate", "white marble"]


def place_name(rng: random.Random) -> str:
    return "".join(rng.sample(SYLLABLES, 2)).capitalize() + rng.choice(["holm", "by", "stead", "ford", "wick", "mere"])


def other(rng: random.Random, pool: list, value):
    return rng.choice([x for x in pool if x != value])


def synthetic_facts(rng: random.Random, name: str, n: int) -> tuple[list[str], list[str]]:
    """Return (facts, altered) where altered[i] contradicts facts[i]."""
    year = rng.randint(1650, 1890)
    region = rng.choice(REGIONS)
    product = rng.choice(PRODUCTS)
    pop = rng.randint(12, 95) * 1000
    event = rng.choice(EVENTS)
    month = rng.choice(MONTHS)
    person = rng.choice(PEOPLE)
    material = rng.choice(MATERIALS)
    bridges = rng.randint(2, 9)
    pairs = [
        (f"{name} was founded in {year}.", f"{name} was founded in {year + rng.randint(20, 90)}."),
        (f"{name} is located in the {region} region.", f"{name} is located in the {other(rng, REGIONS, region)} region."),
        (f"{name} is known for producing {product}.", f"{name} is known for producing {other(rng, PRODUCTS, product)}."),
        (
            f"The population of {name} reached {pop:,} residents in 2020.",
            f"The population of {name} reached {pop + rng.randint(3, 40) * 1000:,} residents in 2020.",
        ),
        (f"{name} holds an annual {event} every {month}.", f"{name} holds an annual {other(rng, EVENTS, event)} every {month}."),
        (f"The town hall of {name} was designed by {person}.", f"The town hall of {name} was designed by {other(rng, PEOPLE, person)}."),
        (f"The old quarter of {name} is built from {material}.", f"The old quarter of {name} is built from {other(rng, MATERIALS, material)}."),
        (f"{name} has {bridges} bridges across its river.", f"{name} has {bridges + rng.randint(1, 5)} bridges across its river."),
    ]
    chosen = rng.sample(pairs, n)
    return [f for f, _ in chosen], [a for _, a in chosen]


def build() -> DatasetFile:
    rng = random.Random(SEED)
    n_synth = N_PAIRS - 1
    remaining = N_FACTS - len(SRI_LANKA["facts"])
    sixes = remaining - 5 * n_synth
    sizes = [6] * sixes + [5] * (n_synth - sixes)
    rng.shuffle(sizes)

    names: list[str] = []
    while len(names) < n_synth:
        name = place_name(rng)
        if name not in names:
            names.append(name)
    drafts = [(name, *synthetic_facts(rng, name, n)) for name, n in zip(names, sizes)]

    cells = [(r, i) for r, (_, facts, _) in enumerate(drafts) for i in range(len(facts))]
    ungrounded_true = set(rng.sample(cells, UNGROUNDED_TRUE))
    poor_true = set(rng.sample(cells, POOR_TRUE))

    records = [
        QARecord(
            SRI_LANKA["id"],
            SRI_LANKA["question"],
            {k: SRI_LANKA[k.value] for k in AnswerKind},
            make_facts(SRI_LANKA["facts"]),
            {
                **{(AnswerKind.GROUND_TRUTH, i): True for i in range(6)},
                # The published example: neither answer clearly supports any fact.
                **{(AnswerKind.UNGROUNDED, i): False for i in range(6)},
                **{(AnswerKind.POOR, i): False for i in range(6)},
            },
        )
    ]
    for r, (name, facts, altered) in enumerate(drafts):
        ung_labels = [(r, i) in ungrounded_true for i in range(len(facts))]
        poor_labels = [(r, i) in poor_true for i in range(len(facts))]
        ungrounded = " ".join(
            [f"{name} is a small town that many travellers pass through."]
            + [facts[i] if ung_labels[i] else altered[i] for i in range(len(facts))]
        )
        poor = " ".join(
            [f"{name} is a town with a long history."] + [facts[i] for i in range(len(facts)) if poor_labels[i]]
        )
        labels = {}
        for i in range(len(facts)):
            labels[(AnswerKind.GROUND_TRUTH, i)] = True
            labels[(AnswerKind.UNGROUNDED, i)] = ung_labels[i]
            labels[(AnswerKind.POOR, i)] = poor_labels[i]
        records.append(
            QARecord(
                f"synthetic-{r + 1:02d}-{name.lower()}",
                f"What is known about the town of {name}?",
                {
                    AnswerKind.GROUND_TRUTH: " ".join(facts),
                    AnswerKind.UNGROUNDED: ungrounded,
                    AnswerKind.POOR: poor,
                },
                make_facts(facts),
                labels,
            )
        )
    return DatasetFile(
        tuple(records),
        source="wikievalfacts-desk-fixture",
        version="1",
        meta={
            "synthetic": True,
            "note": (
                "Offline stand-in with the published dataset's counts (50 pairs, 281 facts, "
                "ungrounded 86/281 and poor 24/281 True). Only record sri-lanka-crisis uses published "
                "text; its ungrounded/poor labels and all other records are synthetic."
            ),
            "generator": "scripts/build_desk_fixture.py",
            "seed": SEED,
        },
    )


if __name__ == "__main__":
    dataset = build()
    save_dataset(dataset, OUT)
    print(f"wrote {OUT} ({dataset.counts()})")
