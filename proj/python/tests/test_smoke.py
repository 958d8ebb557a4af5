# Copyright 2026 The recollab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import random

import pytest

import recollab as rc


def test_geometry():
    a = rc.BBox(0, 0, 2, 2)
    b = rc.BBox(1, 1, 3, 3)
    assert rc.iou(a, b) == pytest.approx(1 / 7)
    assert rc.iou(a, a) == 1.0
    with pytest.raises(ValueError):
        rc.BBox(2, 0, 1, 1)
    dets = [rc.Detection(rc.BBox(0, 0, 10, 10), 0.9),
            rc.Detection(rc.BBox(1, 1, 10, 10), 0.8),
            rc.Detection(rc.BBox(20, 20, 30, 30), 0.7)]
    assert rc.nms(dets, 0.5) == [0, 2]


def test_routing_and_focus():
    dets = [rc.Detection(rc.BBox(0, 0, 1, 1), s) for s in (0.2, 0.1)]
    assert rc.route(dets, "dog") == ("fast", 1)
    assert rc.route(dets[1:], "dog") == ("slow", 0)
    assert rc.build_focus_prompt("a dog", "dog").endswith(", please focus on the dog")
    query = "the bird to the left of the white cow"
    span = rc.find_target_span(query, "bird")
    assert span == (4, 8)
    props = [rc.Detection(rc.BBox(220, 90, 420, 300), 0.8, token_scores=[(4, 8, 0.2), (34, 37, 0.85)]),
             rc.Detection(rc.BBox(60, 40, 110, 90), 0.7, token_scores=[(4, 8, 0.9), (34, 37, 0.1)])]
    index, score, fallback = rc.target_focus_select(props, query, "bird")
    assert (index, score, fallback) == (1, 0.9, False)
    assert rc.heuristic_target(query) == "bird"


def test_generative_answers():
    box, malformed = rc.parse_box_answer("[[10, 20, 30, 40]]")
    assert box == rc.BBox(10, 20, 30, 40) and not malformed
    assert rc.parse_box_answer("no box here") == (None, False)
    assert rc.derive_confidence([0.5, 0.5, 0.5, 0.5]) == pytest.approx(0.5)


def test_choice_prompt_round_trip():
    dets = [rc.Detection(rc.BBox(i * 20, 0, i * 20 + 10, 10), 0.9 - i * 0.1) for i in range(7)]
    cands = rc.generate_candidates(dets)
    assert [label for label, _ in cands] == ["A", "B", "C", "D", "E"]
    cp = rc.build_choice_prompt("the cup", dets)
    assert cp.labels() == ["A", "B", "C", "D", "E", "F"]
    assert cp.none_label == "F"
    assert "F. None" in cp.text
    assert rc.parse_choice("The answer is (B).", cp) == "B"
    assert rc.parse_choice("F", cp) == "F"
    assert cp.box_for("B") == dets[1].box


def brute_auroc(pos, neg):
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def test_auroc_matches_pairwise():
    rng = random.Random(3)
    for _ in range(50):
        pos = [rng.randint(0, 10) / 10 for _ in range(rng.randint(1, 30))]
        neg = [rng.randint(0, 10) / 10 for _ in range(rng.randint(1, 30))]
        assert rc.auroc(pos, neg) == pytest.approx(brute_auroc(pos, neg), abs=1e-12)
    assert rc.auroc([], [0.1]) is None


def iou(a, b):
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def make_run(root, rng, positives=40):
    tasks, preds = [], []
    gt = [100.0, 100.0, 200.0, 200.0]
    for i in range(positives):
        pid = f"p{i}"
        tasks.append({"id": pid, "image": f"{pid}.jpg", "expression": "the red cup", "polarity": "positive",
                      "difficulty": f"L{1 + i % 3}", "gt_box": gt})
        nid = pid + "n"
        kind = "negative_expression" if i % 2 else "negative_image"
        edit = "replace" if i % 2 else "flip"
        tasks.append({"id": nid, "image": f"{nid}.jpg", "expression": "the blue cup", "polarity": kind,
                      "negative_kind": {"edit": edit, "facet": "attribute", "locus": "L1"},
                      "paired_positive": pid})
        for tid in (pid, nid):
            if rng.random() < 0.1:
                continue  # missing prediction
            dx = rng.choice([0.0, 10.0, 40.0, 90.0])
            box = [100.0 + dx, 100.0, 200.0 + dx, 200.0]
            conf = rng.randint(0, 8) / 8
            preds.append({"task_id": tid, "pathway": "fast", "box": box, "confidence": conf,
                          "ranked": [{"box": box, "confidence": conf}], "decision": None, "raw": "",
                          "error": None, "notes": [], "cost_units": 1.0})
    (root / "tasks.jsonl").write_text("".join(json.dumps(t) + "\n" for t in tasks))
    (root / "predictions.jsonl").write_text("".join(json.dumps(p) + "\n" for p in preds))
    return tasks, {p["task_id"]: p for p in preds}


def test_report_matches_independent_recomputation(tmp_path):
    tasks, preds = make_run(tmp_path, random.Random(9))
    report = rc.evaluate(tmp_path / "tasks.jsonl", tmp_path / "predictions.jsonl")
    cells = {(m["metric"], m["cell"]): m["value"] for m in report["metrics"] if m["k"] == 1}

    by_id = {t["id"]: t for t in tasks}
    pos = [t for t in tasks if t["polarity"] == "positive"]
    hits = sum(1 for t in pos if t["id"] in preds and iou(preds[t["id"]]["box"], t["gt_box"]) > 0.5)
    assert cells[("precision", "overall")]["hits"] == hits
    assert cells[("precision", "overall")]["total"] == len(pos)

    pairs = [(by_id[t["paired_positive"]], t) for t in tasks if t["polarity"] != "positive"]
    rhits = rtotal = 0
    for p, n in pairs:
        if p["id"] not in preds or n["id"] not in preds:
            continue
        rtotal += 1
        pp, nn = preds[p["id"]], preds[n["id"]]
        # Top pooled box; the positive wins ties.
        if pp["confidence"] >= nn["confidence"]:
            rhits += iou(pp["box"], p["gt_box"]) > 0.5
    assert cells[("recall", "overall")]["hits"] == rhits
    assert cells[("recall", "overall")]["total"] == rtotal

    score = lambda t: preds[t["id"]]["confidence"] if t["id"] in preds else 0.0
    want = brute_auroc([score(t) for t in pos], [score(n) for _, n in pairs])
    overall = next(a for a in report["auroc"] if a["cell"] == "overall")
    assert overall["value"] == pytest.approx(want, abs=1e-12)


def test_dataset_helpers(tmp_path):
    tasks, _ = make_run(tmp_path, random.Random(1), positives=5)
    loaded = rc.load_taskset(tmp_path / "tasks.jsonl")
    assert [t["id"] for t in loaded] == [t["id"] for t in tasks]
    stats = rc.validate_counts(tmp_path / "tasks.jsonl")
    assert (stats["positive"], stats["negative_expression"], stats["negative_image"]) == (5, 2, 3)
    assert rc.pair_negatives(tmp_path / "tasks.jsonl")[0] == ("p0", "p0n")
    (tmp_path / "bad.jsonl").write_text('{"id": "x"}\n')
    with pytest.raises(rc.DataError):
        rc.load_taskset(tmp_path / "bad.jsonl")


def test_cli_in_process(tmp_path):
    make_run(tmp_path, random.Random(2), positives=5)
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"output_dir": str(tmp_path / "out")}))
    assert rc.run_cli(["validate", "-c", str(config), "--test", str(tmp_path / "tasks.jsonl")]) == 0
    assert json.loads((tmp_path / "out" / "stats_test.json").read_text())["positive"] == 5
    assert rc.run_cli(["no-such-command"]) == 2
