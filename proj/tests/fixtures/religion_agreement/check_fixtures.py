#!/usr/bin/env python3
# Copyright 2026 The fairprompt Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Checks the committed label files against the matrices they expand.

Recomputes agreement figures with a plain tally, independent of the C++
analysis code, and compares them with the values frozen in analysis_test.
"""

import csv
import pathlib
import sys

import make_fixtures

EXPECTED = {
    # (predictor, figure): percentage
    ("ours", "overall"): 75.00,
    ("ours", "Islam"): 95.00,
    ("vanilla", "overall"): 47.73,
    ("vanilla", "Islam"): 100.00,
    ("vanilla", "Neutral_miss"): 74.57,
}


def read(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["image_id", "attribute", "category"], path
    return {r[0]: r[2] for r in rows[1:]}


def main():
    here = pathlib.Path(__file__).resolve().parent
    gold = read(here / "gold.csv")
    failures = 0
    for name, matrix in (("ours", make_fixtures.OURS), ("vanilla", make_fixtures.VANILLA)):
        pred = read(here / ("pred_%s.csv" % name))
        assert pred.keys() == gold.keys()
        tally = {}
        for image_id, g in gold.items():
            tally[(g, pred[image_id])] = tally.get((g, pred[image_id]), 0) + 1
        for gi, g in enumerate(make_fixtures.CLASSES):
            for pi, p in enumerate(make_fixtures.CLASSES):
                if tally.get((g, p), 0) != matrix[gi][pi]:
                    print("cell mismatch", name, g, p)
                    failures += 1
        total = len(gold)
        hits = sum(1 for k, g in gold.items() if pred[k] == g)
        figures = {"overall": 100.0 * hits / total}
        for c in make_fixtures.CLASSES:
            row = [k for k, g in gold.items() if g == c]
            agree = 100.0 * sum(1 for k in row if pred[k] == c) / len(row)
            figures[c] = agree
            figures[c + "_miss"] = 100.0 - agree
        for (pred_name, fig), want in EXPECTED.items():
            if pred_name == name and abs(figures[fig] - want) > 0.005:
                print("figure mismatch", name, fig, figures[fig], want)
                failures += 1
        print(name, "overall %.2f" % figures["overall"])
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
