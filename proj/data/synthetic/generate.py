#!/usr/bin/env python3
"""Writes the bundled synthetic corpus (records.csv) deterministically.

Six topics with disjoint vocabularies, prevalences drifting with the year,
five journals, a pool of corresponding authors and overdispersed citation
counts. Two rows are invalid on purpose (empty abstract, year out of range).
"""
import csv
import math
import random
import sys
from pathlib import Path

TOPICS = [
    "price fix market share demand elast consum welfar margin retail product brand "
    "wholesal suppli contract vertic rival entri exit capac inventori",
    "leniency programm amnesti whistleblow detect report confess prosecut sanction fine "
    "penalti deterr enforc agenc investig dawn raid evid court appeal",
    "auction bid procur tender rotat rig reserv winner bidder sealed "
    "contractor construct municip highway public school dairi milk road",
    "game repeat equilibrium strategi trigger punish deviat discount folk theorem "
    "monitor signal imperfect privat commun cheap talk renegoti belief incent",
    "merger acquisit concentr horizont remedi divestitur review premerg notif "
    "efficienc synergi simul coordin unilater effect target acquir antitrust screen",
    "experi laboratori subject treatment session particip chat messag instruct payoff "
    "framing reciproc trust behavior robust replic sampl design protocol",
]
START_INTERCEPT = [0.6, 0.2, 0.0, 0.4, -0.2, -0.6]
SLOPE = [-0.8, 0.9, 0.1, -0.3, 0.5, 0.9]
JOURNALS = [
    ("Econometrica", "Top5"),
    ("Economic Journal", "GI"),
    ("Journal of Industrial Economics", "IO"),
    ("Antitrust Law Journal", "AT"),
    ("Journal of Law and Economics", "Field"),
]
FILLER = ["the", "we", "this", "of", "and", "in", "that", "is"]
OPERATORS = ["cartel", "collusion", "bid rigging"]
YEARS = range(2000, 2022)
DOCS_PER_YEAR = 15
TOKENS = 40


def vocab(k):
    return TOPICS[k].split()


def dirichlet(rng, alpha):
    draws = [rng.gammavariate(a, 1.0) for a in alpha]
    s = sum(draws)
    return [d / s for d in draws]


def poisson(rng, lam):
    # Knuth for small means, normal approximation above.
    if lam > 30:
        return max(0, int(round(rng.gauss(lam, math.sqrt(lam)))))
    limit, k, p = math.exp(-lam), 0, 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def main(out):
    rng = random.Random(20211018)
    authors = [f"Author {chr(65 + i // 10)}{i % 10}" for i in range(60)]
    rows = []
    n = 0
    for year in YEARS:
        x = (year - 2010.5) / 10.0
        weights = [math.exp(a + b * x) for a, b in zip(START_INTERCEPT, SLOPE)]
        total = sum(weights)
        alpha = [3.0 * w / total for w in weights]
        for _ in range(DOCS_PER_YEAR):
            n += 1
            theta = dirichlet(rng, alpha)
            words = []
            for _ in range(TOKENS):
                k = rng.choices(range(len(TOPICS)), weights=theta)[0]
                words.append(rng.choice(vocab(k)))
                if rng.random() < 0.15:
                    words.append(rng.choice(FILLER))
            op = rng.choice(OPERATORS)
            words.insert(rng.randrange(len(words)), op)
            abstract = " ".join(words) + "."
            journal, jtype = JOURNALS[rng.randrange(len(JOURNALS))]
            age = 2021 - year + 1
            lam = age * math.exp(0.2 + 0.8 * theta[1] - 0.5 * theta[5]) * rng.gammavariate(2.0, 0.5)
            rows.append({
                "id": f"doc{n:04d}",
                "title": f"On {words[0]} and {op}",
                "abstract": abstract,
                "keywords": f"{op};{vocab(max(range(6), key=lambda k: theta[k]))[0]}",
                "year": year,
                "journal": journal,
                "journal_type": jtype,
                "citations": poisson(rng, lam),
                "open_access": 1 if rng.random() < 0.3 else 0,
                "corresponding_author": rng.choice(authors),
            })
    rows.append(dict(rows[0], id="doc9998", abstract="", year=2005))
    rows.append(dict(rows[1], id="doc9999", year=1998))
    with open(out, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).with_name("records.csv"))
