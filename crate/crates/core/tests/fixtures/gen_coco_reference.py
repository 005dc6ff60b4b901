"""Regenerates coco_reference.json: random micro-datasets scored by pycocotools.

    python tests/fixtures/gen_coco_reference.py > tests/fixtures/coco_reference.json
"""

import contextlib
import io
import json
import random
import sys

from pycocotools.coco import COCO
from pycocotools.cocoeval import COCOeval

N_CASES = 50
STAT_NAMES = {
    "ap_all": 0, "ap50": 1, "ap75": 2, "ap_s": 3, "ap_m": 4, "ap_l": 5,
    "recall_all": 8, "recall_s": 9, "recall_m": 10, "recall_l": 11,
}


def rand_box(rng, size):
    w = rng.uniform(3.0, size * 0.8)
    h = rng.uniform(3.0, size * 0.8)
    x = rng.uniform(0.0, size - w)
    y = rng.uniform(0.0, size - h)
    return [x, y, w, h]


def jitter(rng, box, size, amount):
    x, y, w, h = box
    x = min(max(x + rng.uniform(-amount, amount) * w, 0.0), size - 1.0)
    y = min(max(y + rng.uniform(-amount, amount) * h, 0.0), size - 1.0)
    w = max(w * (1.0 + rng.uniform(-amount, amount)), 1.0)
    h = max(h * (1.0 + rng.uniform(-amount, amount)), 1.0)
    return [x, y, w, h]


def make_case(seed):
    rng = random.Random(seed)
    n_images = rng.randint(1, 5)
    n_classes = rng.randint(1, 3)
    size = 160.0
    coarse_scores = rng.random() < 0.3
    images, anns, dets = [], [], []
    for i in range(n_images):
        images.append({"id": i + 1, "file_name": f"{i + 1:04d}.jpg", "width": 160, "height": 160})
        for _ in range(rng.randint(0, 8)):
            box = rand_box(rng, size)
            cat = rng.randint(1, n_classes)
            anns.append({
                "id": len(anns) + 1, "image_id": i + 1, "category_id": cat,
                "bbox": box, "area": box[2] * box[3], "iscrowd": 0,
            })
            if rng.random() < 0.75:
                dets.append({"image_id": i + 1, "category_id": cat,
                             "bbox": jitter(rng, box, size, rng.choice([0.02, 0.1, 0.3])),
                             "score": rng.random()})
        for _ in range(rng.randint(0, 3)):
            dets.append({"image_id": i + 1, "category_id": rng.randint(1, n_classes),
                         "bbox": rand_box(rng, size), "score": rng.random()})
    if not dets:
        dets.append({"image_id": 1, "category_id": 1, "bbox": rand_box(rng, size), "score": 0.5})
    if coarse_scores:
        for d in dets:
            d["score"] = round(d["score"], 1)
    gt = {"images": images, "annotations": anns,
          "categories": [{"id": c, "name": f"class{c}"} for c in range(1, n_classes + 1)]}
    return gt, dets


def score(gt, dets):
    with contextlib.redirect_stdout(io.StringIO()):
        coco = COCO()
        coco.dataset = json.loads(json.dumps(gt))
        coco.createIndex()
        res = coco.loadRes(json.loads(json.dumps(dets)))
        ev = COCOeval(coco, res, "bbox")
        ev.evaluate()
        ev.accumulate()
        ev.summarize()
    return {k: (None if ev.stats[i] < 0 else float(ev.stats[i])) for k, i in STAT_NAMES.items()}


def main():
    cases = []
    for seed in range(N_CASES):
        gt, dets = make_case(seed)
        cases.append({"seed": seed, "gt": gt, "dets": dets, "stats": score(gt, dets)})
    json.dump(cases, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
