#!/usr/bin/env python3
"""Build the shipped demo corpus: a dataset of synthetic model outputs over
six topics plus the matching offline fixture snapshot.

The generator is deterministic (fixed seed), uses the same split/parse code
as the pipeline, and writes:

    data/demo/dataset.json      models, topics, generations, relevance labels
    data/demo/fixtures/*.json   recorded service responses for every title
                                and topic the pipeline will query
"""

from __future__ import annotations

import json
import math
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from refscale.citations import normalize_title, parse_apa, split_reference_list
from refscale.openalex import request_fingerprint

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "data" / "demo"
SNAPSHOT_DATE = "2026-03-08T00:00:00Z"

TOPICS = [
    # (name, group, specificity, works_count)
    ("Climate change", "Environmental Science", 1, 1222665),
    ("Renewable energy", "Energy", 2, 501950),
    ("Democratic elections", "Political Science", 2, 48258),
    ("Malaria prevention", "Health", 3, 13463),
    ("Microfinance loan repayment", "Economics", 4, 1341),
    ("Biometric voter registration", "Political Science", 4, 171),
]

MODELS = [
    # (name, family, params_billions, recall skill)
    ("nano-1b", "Alpha", 1.0, 0.25),
    ("mid-8b", "Alpha", 8.0, 0.50),
    ("big-70b", "Beta", 70.0, 0.75),
    ("huge-405b", "Beta", 405.0, 0.92),
]

SURNAMES = [
    "Okafor", "Lindqvist", "Moreau", "Tanaka", "Diallo", "Petrov", "Alvarez",
    "Nakamura", "Osei", "Bergstrom", "Castillo", "Ferreira", "Haddad",
    "Ivanova", "Johansson", "Kimani", "Lombardi", "Mensah", "Novak", "Oduya",
]
GIVEN = ["A.", "B.", "C. D.", "E.", "F. G.", "H.", "J.", "K. L.", "M.", "N. O."]
VENUES = [
    "Journal of Applied Field Studies", "Global Policy Review",
    "Annals of Quantitative Research", "Development Studies Quarterly",
    "International Review of Public Systems", "Empirical Methods Letters",
]
TITLE_NOUNS = [
    "adoption", "dynamics", "outcomes", "pathways", "determinants",
    "interventions", "governance", "resilience", "monitoring", "equity",
]
TITLE_MODS = [
    "longitudinal", "community-level", "cross-national", "household",
    "regional", "multi-site", "policy-driven", "low-income", "comparative",
    "district-level",
]


def make_catalog(rng: random.Random) -> dict:
    """Eight citable works per topic with descending citation counts."""
    catalog = {}
    wid = 0
    for name, _, _, works in TOPICS:
        entries = []
        for rank in range(8):
            wid += 1
            n_authors = rng.randint(1, 3)
            authors = [
                f"{rng.choice(SURNAMES)}, {rng.choice(GIVEN)}"
                for _ in range(n_authors)
            ]
            title = (
                f"{rng.choice(TITLE_MODS).capitalize()} "
                f"{rng.choice(TITLE_NOUNS)} of {name.lower()}: "
                f"evidence from study {wid}"
            )
            year = rng.randint(1995, 2023)
            cited = int(round((works ** 0.35) * 40 / (rank + 1))) + rng.randint(0, 5)
            entries.append({
                "id": f"W{wid:07d}",
                "title": title,
                "authors": authors,
                "year": year,
                "venue": rng.choice(VENUES),
                "doi": f"https://doi.org/10.5555/demo.{wid}",
                "cited_by_count": cited,
            })
        catalog[name] = entries
    return catalog


def apa(work: dict, year=None, venue=None) -> str:
    authors = ", & ".join(work["authors"]) if len(work["authors"]) > 1 else work["authors"][0]
    return (f"{authors} ({year or work['year']}). {work['title']}. "
            f"{venue or work['venue']}. {work['doi']}")


def fabricated_citation(rng: random.Random, topic: str, salt: int) -> str:
    surname = rng.choice(SURNAMES)
    title = (
        f"{rng.choice(TITLE_MODS).capitalize()} {rng.choice(TITLE_NOUNS)} "
        f"and {rng.choice(TITLE_NOUNS)} in {topic.lower()} systems {salt}"
    )
    return (f"{surname}, {rng.choice(GIVEN)} ({rng.randint(1990, 2024)}). "
            f"{title}. {rng.choice(VENUES)}.")


def make_generation(rng: random.Random, model_skill: float, topic: str,
                    works_count: int, catalog: dict) -> str:
    # Recall gets harder as topic representation shrinks.
    model_skill = min(0.98, max(0.05,
        model_skill + 0.10 * (math.log10(works_count) - 4.0)))
    # Works are citation-ranked; weak models recall only the top of the
    # list, strong models reach further down the tail.
    works = list(catalog[topic])
    depth = max(1, int(round(model_skill * len(works))))
    pool = works[:depth]
    rng.shuffle(pool)
    lines = ["Here are the references:"]  # preamble the splitter must drop
    slots = []
    for i in range(10):
        roll = rng.random()
        if roll < model_skill and pool:
            slots.append(apa(pool.pop(0)))  # accurate recall
        elif roll < model_skill + 0.2 and pool:
            work = pool.pop(0)  # recalled but corrupted
            bad_year = work["year"] + rng.choice([-2, -1, 1, 2])
            citation = apa(work, year=bad_year)
            citation = citation.rsplit(" https://", 1)[0]  # drop identifier too
            slots.append(citation)
        else:
            slots.append(fabricated_citation(rng, topic, rng.randint(1, 40)))
    # A duplicate inside some cells exercises within-cell dedup.
    if rng.random() < 0.4 and len(slots) >= 2:
        slots[-1] = slots[0]
    lines += [f"{i + 1}. {s}" for i, s in enumerate(slots)]
    return "\n".join(lines)


def main() -> None:
    rng = random.Random(20260308)
    catalog = make_catalog(rng)
    by_norm_title = {
        normalize_title(w["title"]): w
        for entries in catalog.values() for w in entries
    }

    generations = []
    labels = []
    for mname, _, _, skill in MODELS:
        for tname, _, _, _ in TOPICS:
            if mname == "nano-1b" and tname == "Biometric voter registration":
                generations.append({"model": mname, "topic": tname,
                                    "raw_text": "", "refusal": True})
                continue
            works_count = next(w for n, _, _, w in TOPICS if n == tname)
            raw = make_generation(rng, skill, tname, works_count, catalog)
            generations.append({"model": mname, "topic": tname, "raw_text": raw})
            for idx, entry in enumerate(split_reference_list(raw)):
                roll = rng.random()
                label = "YES" if roll < 0.8 else ("PARTIAL" if roll < 0.95 else "NO")
                labels.append({"model": mname, "topic": tname,
                               "reference_index": idx, "label": label})

    dataset = {
        "models": [
            {"name": n, "family": f, "params": p, "architecture": "dense"}
            for n, f, p, _ in MODELS
        ],
        "topics": [
            {"name": n, "group": g, "specificity_level": lvl, "works_count": w}
            for n, g, lvl, w in TOPICS
        ],
        "generations": generations,
        "relevance_labels": labels,
    }
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "dataset.json").write_text(json.dumps(dataset, indent=1, sort_keys=True))

    # Fixture snapshot: one works_search entry per distinct claimed title,
    # one works_count entry per topic phrase.
    fixtures = OUT / "fixtures"
    fixtures.mkdir(exist_ok=True)
    for old in fixtures.glob("*.json"):
        old.unlink()

    def put(endpoint: str, params: dict, body) -> None:
        fp = request_fingerprint(endpoint, params)
        entry = {"fingerprint": fp,
                 "request": {"endpoint": endpoint, "params": params},
                 "body": body, "fetched_at": SNAPSHOT_DATE}
        (fixtures / f"{fp}.json").write_text(
            json.dumps(entry, sort_keys=True, indent=1))

    titles = set()
    for gen in generations:
        for entry in split_reference_list(gen.get("raw_text", "")):
            titles.add(parse_apa(entry).title)
    for title in sorted(titles):
        work = by_norm_title.get(normalize_title(title))
        results = [work] if work else []
        put("works_search", {"title": title}, {"results": results})
    for tname, _, _, works in TOPICS:
        put("works_count", {"search": tname, "quoted": True}, {"count": works})

    print(f"dataset: {len(generations)} generations, {len(labels)} labels")
    print(f"fixtures: {len(list(fixtures.glob('*.json')))} entries")


if __name__ == "__main__":
    main()
