"""Regenerate synthetic_eval.jsonl: 4 models x 125 records over the five task types.

Usage: python3 data/make_synthetic_eval.py > data/synthetic_eval.jsonl
"""

import json
import random

rng = random.Random(42)

MODELS = {"alpha": 0.85, "beta": 0.7, "gamma": 0.55, "delta": 0.4}
LETTERS = "ABCD"
TISSUES = ["adipose", "stroma", "tumor epithelium", "lymphocytes"]
CLOSED = [
    ("Is there evidence of mitotic figures?", ["yes", "no"]),
    ("Which grade best describes this lesion?", ["low", "intermediate", "high", "cannot be determined"]),
    ("Is the margin involved?", ["yes", "no"]),
]
OPEN = [
    "the section shows sheets of atypical cells with prominent nucleoli",
    "there is dense fibrous stroma with scattered lymphocytes",
    "glandular structures are lined by columnar epithelium without atypia",
    "the tissue contains necrotic debris surrounded by viable tumor cells",
    "a mixed inflammatory infiltrate is present in the lamina propria",
]
SIZE = 32


def wrap(think, answer, skill):
    if rng.random() < 0.1 + 0.3 * (1 - skill):
        return answer
    return f"<think>{think}</think><answer>{answer}</answer>"


def rle(bits):
    runs, cur, n = [], False, 0
    for b in bits:
        if b == cur:
            n += 1
        else:
            runs.append(n)
            cur, n = b, 1
    runs.append(n)
    return runs


def fill(boxes):
    bits = [False] * (SIZE * SIZE)
    for x1, y1, x2, y2 in boxes:
        for r in range(y1, y2):
            for c in range(x1, x2):
                bits[r * SIZE + c] = True
    return bits


def jitter(box, amount):
    x1, y1, x2, y2 = (v + rng.randint(-amount, amount) for v in box)
    x1, y1 = max(0, x1), max(0, y1)
    x2, y2 = min(SIZE, max(x1 + 1, x2)), min(SIZE, max(y1 + 1, y2))
    return [x1, y1, x2, y2]


def rand_box():
    x, y = rng.randint(0, SIZE - 8), rng.randint(0, SIZE - 8)
    return [x, y, x + rng.randint(4, min(14, SIZE - x)), y + rng.randint(4, min(14, SIZE - y))]


def items():
    for i in range(30):
        k = rng.randint(2, 4)
        opts = ", ".join(f"({LETTERS[j]}) {TISSUES[j]}" for j in range(k))
        yield ("cls", f"cls-{i:03d}", f"Classify this pathological image. {opts}", {"label": LETTERS[rng.randrange(k)]}, k)
    for i in range(25):
        gts = [rand_box() for _ in range(rng.randint(1, 3))]
        yield ("det", f"det-{i:03d}", "Detect all nuclei in this image.", {"boxes": gts}, None)
    for i in range(20):
        gts = [rand_box() for _ in range(rng.randint(1, 2))]
        mask = {"size": [SIZE, SIZE], "rle": rle(fill(gts))}
        yield ("seg", f"seg-{i:03d}", "Segment the gland in this image.", {"mask": mask}, gts)
    for i in range(25):
        q, opts = CLOSED[i % len(CLOSED)]
        listed = " ".join(f"({LETTERS[j]}) {o}" for j, o in enumerate(opts))
        yield ("vqa_closed", f"vqc-{i:03d}", f"{q} {listed}", {"answer": LETTERS[rng.randrange(len(opts))]}, len(opts))
    for i in range(25):
        ref = OPEN[i % len(OPEN)]
        yield ("vqa_open", f"vqo-{i:03d}", "Describe the morphology in this image.", {"reference": ref}, None)


def respond(task, gt, extra, skill):
    if task in ("cls", "vqa_closed"):
        truth = gt["label"] if task == "cls" else gt["answer"]
        pick = truth if rng.random() < skill else LETTERS[rng.randrange(extra)]
        return wrap("comparing the options", f"({pick})", skill), None
    if task == "det":
        preds = [jitter(b, round(6 * (1 - skill))) for b in gt["boxes"] if rng.random() < 0.5 + skill / 2]
        if rng.random() > skill:
            preds.append(rand_box())
        return wrap("locating nuclei", json.dumps(preds), skill), None
    if task == "seg":
        preds = [jitter(b, round(5 * (1 - skill))) for b in extra]
        return wrap("outlining the gland", json.dumps(preds), skill), {"h": SIZE, "w": SIZE}
    words = gt["reference"].split()
    out = [w for w in words if rng.random() < 0.5 + skill / 2]
    if rng.random() > skill:
        out += ["possibly", "reactive"]
    return wrap("describing the field", " ".join(out), skill), None


corpus = list(items())
for model, skill in MODELS.items():
    for task, rid, prompt, gt, extra in corpus:
        response, image = respond(task, gt, extra, skill)
        rec = {"id": rid, "task": task, "model": model, "prompt": prompt, "response": response, "gt": gt}
        if image:
            rec["image"] = image
        print(json.dumps(rec, separators=(",", ":")))
