"""Smoke test for the heartcbr_py extension.

Build and install first:  maturin develop -m crates/python/Cargo.toml
Then run:                 python crates/python/python/smoke_test.py
"""

import csv
import json
import math
import os
import tempfile

import heartcbr_py as hc

ROWS = [
    [52, 1, 0, 125, 212, 0, 1, 168, 0, 1.0, 2, 2, 3],
    [53, 1, 0, 140, 203, 1, 0, 155, 1, 3.1, 0, 0, 3],
    [70, 1, 0, 145, 174, 0, 1, 125, 1, 2.6, 0, 0, 3],
    [61, 1, 0, 148, 203, 0, 1, 161, 0, 0.0, 2, 1, 3],
    [62, 0, 0, 138, 294, 1, 1, 106, 0, 1.9, 1, 3, 2],
    [58, 0, 0, 100, 248, 0, 0, 122, 0, 1.0, 1, 0, 2],
    [58, 1, 0, 114, 318, 0, 2, 140, 0, 4.4, 0, 3, 1],
    [55, 1, 0, 160, 289, 0, 0, 145, 1, 0.8, 1, 1, 3],
    [46, 1, 0, 120, 249, 0, 0, 144, 0, 0.8, 2, 0, 3],
    [54, 1, 0, 122, 286, 0, 0, 116, 1, 3.2, 1, 2, 2],
]
TARGETS = [0, 0, 0, 0, 0, 1, 0, 0, 0, 0]


def check(cond, what):
    if not cond:
        raise AssertionError(what)
    print("ok  ", what)


def main():
    record = {name: str(v) for name, v in zip(hc.ATTRIBUTE_NAMES, ROWS[0])}
    case, warnings = hc.validate_case(record)
    check(case["age"] == 52 and case["oldpeak"] == 1.0 and warnings == [], "validate_case")
    record["ca"] = "4"
    _, warnings = hc.validate_case(record)
    check(len(warnings) == 1, "lenient ca=4 warns")
    try:
        hc.validate_case(record, strict=True)
        check(False, "strict ca=4 rejected")
    except ValueError:
        check(True, "strict ca=4 rejected")

    model = hc.CbrModel.from_rows(ROWS, TARGETS)
    check(len(model) == 10 and model.weights == [1.0] * 13, "from_rows")
    p = model.predict(ROWS[5])
    check(p["predicted_target"] == 1 and p["best_case_id"] == 5, "exact match prediction")
    check(p["best_global_similarity"] == 1.0, "exact match similarity 1.0")

    query = list(ROWS[2])
    query[4] = 600
    new_id = model.retain(query, 1)
    check(new_id == 10 and len(model) == 11, "retain grows case base")
    check(model.extrema[4] == (174.0, 600.0), "retain re-fits extrema")
    again = model.predict(query)
    check(again["predicted_target"] == 1 and again["best_global_similarity"] == 1.0,
          "re-query returns retained case")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "heart.csv")
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(list(hc.ATTRIBUTE_NAMES) + ["target"])
            for row, t in zip(ROWS, TARGETS):
                w.writerow(row + [t])
        m = hc.CbrModel.from_csv(path)
        check(len(m) == 6 and m.test_size == 4, "from_csv split 6/4")
        a = m.evaluate()
        b = m.evaluate()
        report = json.loads(a)
        check(a == b, "evaluate deterministic")
        check(len(report["records"]) == 4 and 0.0 <= report["merged_accuracy"] <= 1.0,
              "evaluate report shape")
        inc = json.loads(m.evaluate(incremental_retain=True))
        check(inc["incremental_retain"] is True and len(m) == 6, "incremental evaluate leaves model intact")

    check(hc.local_similarity(0.2, 0.7) == 0.5, "local_similarity")
    mins = [min(r[i] for r in ROWS) for i in range(13)]
    maxs = [max(r[i] for r in ROWS) for i in range(13)]
    check(hc.global_similarity(ROWS[1], ROWS[1], mins, maxs) == 1.0, "global self-similarity")
    s01 = hc.global_similarity(ROWS[0], ROWS[1], mins, maxs)
    s10 = hc.global_similarity(ROWS[1], ROWS[0], mins, maxs)
    check(s01 == s10 and 0.0 <= s01 <= 1.0, "global symmetry and bounds")

    check(hc.triangular_membership(5, 0, 5, 10) == 1.0, "triangular peak")
    check(hc.trapezoidal_membership(3, 0, 2, 4, 6) == 1.0, "trapezoid plateau")
    check(hc.sigmoid(0.0) == 0.5 and math.isclose(hc.sigmoid(2.0), 1 / (1 + math.exp(-2))), "sigmoid")

    m = hc.pearson(["x", "y", "c"], [[1, 2, 3, 4], [2, 4, 6, 8], [5, 5, 5, 5]])
    check(abs(m[0][1] - 1.0) < 1e-12 and m[2][0] is None and m[2][2] is None, "pearson")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
