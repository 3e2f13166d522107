"""Regenerate the bundled fixture corpus under src/multicg/fixtures/.

Two industry groups share latent daily activity so the factor graphs and
the market truth both carry some group structure. Output is deterministic.
"""

import csv
import datetime as dt
import json
import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, os.pardir, "src", "multicg", "fixtures")

ENTITIES = [
    ("APC", "Anadarko Petroleum Corporation", "Independent Oil & Gas"),
    ("BHI", "Baker Hughes Incorporated", "Oil & Gas Equipment & Services"),
    ("HAL", "Halliburton Company", "Oil & Gas Equipment & Services"),
    ("SLB", "Schlumberger Limited", "Oil & Gas Equipment & Services"),
    ("HD", "Home Depot", "Home Improvement Stores"),
    ("LOW", "Lowe's", "Home Improvement Stores"),
]
GROUP = {"APC": 0, "BHI": 0, "HAL": 0, "SLB": 0, "HD": 1, "LOW": 1}
START = dt.date(2012, 10, 25)
DAYS = 40
PHRASES = ["looking strong today", "down on volume", "earnings call soon",
           "analyst upgrade", "what a move", "watching closely", "merger chatter"]


def corpus(rng):
    lines = []
    doc = 0
    group_level = rng.gamma(2.0, 1.0, size=(2, DAYS))
    symbols = [e[0] for e in ENTITIES]
    for d in range(DAYS):
        day = START + dt.timedelta(days=d)
        for sym in symbols:
            lam = 0.8 + 1.2 * group_level[GROUP[sym], d]
            for _ in range(rng.poisson(lam)):
                doc += 1
                peers = [s for s in symbols if GROUP[s] == GROUP[sym] and s != sym]
                tags = [sym]
                if rng.random() < 0.3:
                    tags.append(peers[rng.integers(len(peers))])
                text = " ".join(f"${t}" for t in tags) + " " + PHRASES[rng.integers(len(PHRASES))]
                retweeted = bool(rng.random() < 0.35)
                if retweeted:
                    text = "RT " + text
                ts = dt.datetime(day.year, day.month, day.day, int(rng.integers(24)),
                                 int(rng.integers(60)), int(rng.integers(60)))
                lines.append({"id": str(doc), "created_at": ts.isoformat() + "Z",
                              "text": text, "retweeted": retweeted})
    lines.append({"id": "x1", "created_at": START.isoformat() + "T12:00:00Z",
                  "text": "no cashtags here at all", "retweeted": False})
    return lines


def market(rng):
    days = []
    d = dt.date(2012, 9, 4)
    end = START + dt.timedelta(days=DAYS - 1)
    while d <= end:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    t = len(days)
    group_ret = rng.normal(0, 0.012, size=(2, t))
    group_vol = rng.normal(0, 0.25, size=(2, t))
    tables = {}
    for sym, _, _ in ENTITIES:
        g = GROUP[sym]
        rets = 0.7 * group_ret[g] + rng.normal(0, 0.01, t)
        close = 40.0 * np.exp(np.cumsum(rets))
        volume = np.exp(15 + group_vol[g] + rng.normal(0, 0.2, t))
        tables[sym] = [(day.isoformat(), f"{c:.4f}", f"{v:.0f}")
                       for day, c, v in zip(days, close, volume)]
    return tables


def main():
    rng = np.random.default_rng(20121025)
    os.makedirs(os.path.join(OUT, "market"), exist_ok=True)
    with open(os.path.join(OUT, "catalog.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["symbol", "name", "industry"])
        w.writerows(ENTITIES)
    lines = corpus(rng)
    with open(os.path.join(OUT, "corpus.jsonl"), "w", encoding="utf-8") as fh:
        for obj in lines:
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
        fh.write('{"id": "bad1", "created_at": "not-a-date", "text": "$HD", "retweeted": false}\n')
    for sym, rows in market(rng).items():
        with open(os.path.join(OUT, "market", f"{sym}.csv"), "w", newline="",
                  encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "close", "volume"])
            w.writerows(rows)
    print(f"{len(lines)} corpus lines written to {os.path.normpath(OUT)}")


if __name__ == "__main__":
    main()
