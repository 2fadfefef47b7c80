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
"""High-precision unbiased MMD^2 values (RBF and cubic kernels).

Inputs are generated from an integer formula that the C++ tests reproduce:
  point(i, salt)[d] = (((i * 7 + d * 3 + salt) % 11) - 5) / 5
Writes kernel_values.json, or with --check verifies an existing file.
"""

import argparse
import json
import sys

import mpmath

mpmath.mp.dps = 50

DIM = 4
CASES = [
    {"m": 6, "n": 5, "salt_x": 0, "salt_y": 4},
    {"m": 3, "n": 3, "salt_x": 1, "salt_y": 2},
    {"m": 8, "n": 8, "salt_x": 0, "salt_y": 0},
]


def point(i, salt):
    return [mpmath.mpf(((i * 7 + d * 3 + salt) % 11) - 5) / 5 for d in range(DIM)]


def sqdist(a, b):
    return sum((p - q) ** 2 for p, q in zip(a, b))


def median_distance(pts):
    d = sorted(mpmath.sqrt(sqdist(pts[i], pts[j]))
               for i in range(len(pts)) for j in range(i + 1, len(pts)))
    mid = len(d) // 2
    return d[mid] if len(d) % 2 else (d[mid - 1] + d[mid]) / 2


def mmd2(x, y, k):
    m, n = len(x), len(y)
    kxx = sum(k(x[i], x[j]) for i in range(m) for j in range(m) if i != j)
    kyy = sum(k(y[i], y[j]) for i in range(n) for j in range(n) if i != j)
    kxy = sum(k(a, b) for a in x for b in y)
    return kxx / (m * (m - 1)) + kyy / (n * (n - 1)) - 2 * kxy / (m * n)


def evaluate(case):
    x = [point(i, case["salt_x"]) for i in range(case["m"])]
    y = [point(i, case["salt_y"]) for i in range(case["n"])]
    bw = median_distance(x + y)
    rbf = lambda a, b: mpmath.exp(-sqdist(a, b) / (2 * bw * bw))
    cubic = lambda a, b: (sum(p * q for p, q in zip(a, b)) / DIM + 1) ** 3
    out = dict(case)
    out["bandwidth"] = mpmath.nstr(bw, 20)
    out["mmd2_rbf"] = mpmath.nstr(mmd2(x, y, rbf), 20)
    out["kid"] = mpmath.nstr(mmd2(x, y, cubic), 20)
    return out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--check", metavar="PATH")
    parser.add_argument("--write", metavar="PATH")
    args = parser.parse_args()
    fresh = {"dim": DIM, "cases": [evaluate(c) for c in CASES]}
    if args.check:
        with open(args.check) as f:
            stored = json.load(f)
        if stored != fresh:
            print("kernel oracle values differ from", args.check)
            return 1
        print("kernel oracle values match")
        return 0
    text = json.dumps(fresh, indent=2, sort_keys=True) + "\n"
    if args.write:
        with open(args.write, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
