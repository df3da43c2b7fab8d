#!/usr/bin/env python3
"""Regenerates the bundled synthetic dataset under data/.

The corpus is built so that learning sentences repeat DWA titles verbatim,
which gives the deterministic test embedding provider a recoverable signal.
"""
import argparse
import csv
import json
import math
import random
from pathlib import Path

VERBS = ["Analyze", "Evaluate", "Design", "Develop", "Interpret",
         "Apply", "Calculate", "Prepare", "Communicate", "Research"]
OBJECTS = ["laboratory test data", "statistical models", "engineering drawings",
           "software systems", "economic trends"]

FIELDS = [
    ("Biology", "26.0101"),
    ("Chemistry", "40.0501"),
    ("Physics", "40.0801"),
    ("Computer Science", "11.0701"),
    ("Economics", "45.0601"),
    ("Psychology", "42.0101"),
    ("Mechanical Engineering", "14.1901"),
    ("English", "23.0101"),
]

INSTITUTIONS = [
    ("100654", "Alder State University", "Huntsville", "AL", "Public, 4-year or above"),
    ("110635", "Bayside University", "Berkeley", "CA", "Public, 4-year or above"),
    ("130794", "Cedar College", "New Haven", "CT", "Private not-for-profit, 4-year or above"),
    ("145637", "Dunmore University", "Champaign", "IL", "Public, 4-year or above"),
    ("166683", "Elmwood Institute of Technology", "Cambridge", "MA", "Private not-for-profit, 4-year or above"),
    ("199120", "Foxglove University", "Chapel Hill", "NC", "Public, 4-year or above"),
    ("228778", "Granite Community College", "Austin", "TX", "Public, 2-year"),
    ("236948", "Harbor University", "Seattle", "WA", "Public, 4-year or above"),
    (None, "Ironwood College", "Madison", "WI", "Private for-profit, 4-year or above"),
]

ABILITIES = [
    "Oral Comprehension", "Written Comprehension", "Oral Expression", "Written Expression",
    "Fluency of Ideas", "Originality", "Problem Sensitivity", "Deductive Reasoning",
    "Inductive Reasoning", "Information Ordering", "Category Flexibility", "Mathematical Reasoning",
    "Number Facility", "Memorization", "Speed of Closure", "Flexibility of Closure",
    "Perceptual Speed", "Spatial Orientation", "Visualization", "Selective Attention",
    "Time Sharing", "Arm-Hand Steadiness", "Manual Dexterity", "Finger Dexterity",
    "Control Precision", "Multilimb Coordination", "Response Orientation", "Rate Control",
    "Reaction Time", "Wrist-Finger Speed", "Speed of Limb Movement", "Static Strength",
    "Explosive Strength", "Dynamic Strength", "Trunk Strength", "Stamina",
    "Extent Flexibility", "Dynamic Flexibility", "Gross Body Coordination", "Gross Body Equilibrium",
    "Near Vision", "Far Vision", "Visual Color Discrimination", "Night Vision",
    "Peripheral Vision", "Depth Perception", "Glare Sensitivity", "Hearing Sensitivity",
    "Auditory Attention", "Sound Localization", "Speech Recognition", "Speech Clarity",
]

LOGISTICS = [
    "Office hours are held on Tuesday afternoons in the main building.",
    "Attendance is recorded at every meeting of the class.",
    "Late submissions lose ten percent per day.",
    "The required textbook is available at the campus bookstore.",
    "Grading is based on homework, quizzes and a final project.",
    "Please email the instructor at least two days before a due date.",
    "Plagiarism will be reported to the dean of students.",
]

FILLER = [
    "Welcome to the course.",
    "This semester will be a busy one.",
    "We meet twice a week.",
    "Bring a notebook to every session.",
]

LEARNING_PHRASES = [
    "analyze", "evaluate", "design", "develop", "interpret", "apply", "calculate", "prepare",
    "communicate", "research", "understand", "explain", "demonstrate", "identify", "describe",
    "compare", "create", "solve", "students will learn", "learning outcomes",
]

LOGISTICS_PHRASES = [
    "office hours", "attendance", "late submissions", "textbook", "grading", "email",
    "due date", "plagiarism", "bookstore", "exam schedule",
]

ABBREVIATIONS = ["e.g", "i.e", "dr", "prof", "vs", "etc", "fig", "no", "approx", "dept"]


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--seed", type=int, default=20240611)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    dwas = []
    for v_i, verb in enumerate(VERBS):
        for o_i, obj in enumerate(OBJECTS):
            dwa_id = f"4.A.{o_i + 1}.a.{v_i + 1}.I01.D{len(dwas) + 1:02d}"
            dwas.append((dwa_id, f"{verb} {obj}"))
    write_csv(out / "dwa_reference.csv", ["dwa_id", "dwa_title"], dwas)

    abilities = [(f"1.A.{i // 26 + 1}.{chr(ord('a') + (i % 26) // 4)}.{i % 4 + 1}", name)
                 for i, name in enumerate(ABILITIES)]
    write_csv(out / "abilities.csv", ["ability_id", "ability_name"], abilities)

    # each field prefers ten DWAs; neighbouring fields share some of them
    preferred = {}
    for f_i, (name, _) in enumerate(FIELDS):
        start = (f_i * 6) % len(dwas)
        preferred[name] = [dwas[(start + k) % len(dwas)][1] for k in range(10)]

    records = []

    def make_text(field):
        paras = [rng.choice(FILLER)]
        n_learning = rng.randint(4, 8)
        for _ in range(n_learning):
            pool = preferred[field] if rng.random() < 0.8 else [d[1] for d in dwas]
            paras.append(rng.choice(pool))
        for s in rng.sample(LOGISTICS, rng.randint(1, 3)):
            paras.insert(rng.randint(0, len(paras)), s)
        return "\n\n".join(paras)

    def add(inst, field, year, text=None):
        unit_id, inst_name, city, state, sector = inst
        fname, fcode = field
        rec = {
            "syllabus_id": f"syl-{len(records) + 1:04d}",
            "text": text if text is not None else make_text(fname),
            "year": year,
            "institution_name": inst_name,
            "unit_id": unit_id,
            "city": city,
            "state": state,
            "field_name": fname,
            "field_code": fcode,
            "sector": sector,
        }
        records.append(rec)
        return rec

    # three large groups for the sufficiency analysis
    for inst_i, field_i, year in [(1, 3, 2017), (3, 0, 2016), (5, 4, 2018)]:
        for _ in range(16):
            add(INSTITUTIONS[inst_i], FIELDS[field_i], year)
    # planted duplicates: 3 within the same year, 2 across years
    base = [r for r in records[:48:8]]
    for src in base[:3]:
        dup = add(next(i for i in INSTITUTIONS if i[1] == src["institution_name"]),
                  (src["field_name"], src["field_code"]), src["year"], src["text"])
    for src in base[3:5]:
        dup = add(next(i for i in INSTITUTIONS if i[1] == src["institution_name"]),
                  (src["field_name"], src["field_code"]), src["year"] - 1, src["text"])
    while len(records) < 200:
        add(rng.choice(INSTITUTIONS), rng.choice(FIELDS), rng.randint(2015, 2018))
    # a few records with missing metadata
    records[60]["state"] = None
    records[61]["year"] = None
    records[62]["field_code"] = None
    with open(out / "corpus.jsonl", "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps({k: v for k, v in r.items() if v is not None}, ensure_ascii=False) + "\n")

    # occupations: binary DWA profiles and ability importance driven by them
    majors = [11, 13, 15, 17, 19, 21, 23, 25, 27, 29, 41, 43, 47, 49, 51, 53]
    socs = []
    while len(socs) < 90:
        code = f"{rng.choice(majors)}-{rng.randint(1000, 9199):04d}.00"
        if code not in socs:
            socs.append(code)
    socs.sort()
    weights = [[rng.gauss(0, 1) if rng.random() < 0.2 else 0.0 for _ in dwas] for _ in abilities]
    occ_rows, ab_rows, emp_rows = [], [], []
    for soc in socs:
        chosen = sorted(rng.sample(range(len(dwas)), rng.randint(5, 12)))
        occ_rows += [(soc, dwas[d][0]) for d in chosen]
        x = [1.0 if d in chosen else 0.0 for d in range(len(dwas))]
        for a, (aid, _) in enumerate(abilities):
            z = sum(w * xi for w, xi in zip(weights[a], x))
            im = 1.0 + 4.0 / (1.0 + math.exp(-z)) + rng.gauss(0, 0.05)
            im = min(5.0, max(1.0, im))
            ab_rows.append((soc, aid, "IM", f"{im:.2f}"))
            ab_rows.append((soc, aid, "LV", f"{min(7.0, im * 1.3):.2f}"))
        base_emp = rng.randint(5, 400) * 1000
        for period, drift in (("2015", 1.0), ("2018", rng.uniform(0.8, 1.3))):
            emp_rows.append((soc, period, int(base_emp * drift)))
    write_csv(out / "occupation_dwa.csv", ["soc_code", "dwa_id"], occ_rows)
    write_csv(out / "ability_importance.csv", ["soc_code", "ability_id", "scale_id", "importance"], ab_rows)
    write_csv(out / "employment.csv", ["soc_code", "period", "employment"], emp_rows)

    salary = [(name, 42000 + 3000 * i + rng.randint(0, 9000)) for i, (name, _) in enumerate(FIELDS)]
    write_csv(out / "salary.csv", ["field_name", "median_annual_earnings_usd"], salary)

    header = "# Representative starter list; extend it for real corpora.\n"
    (out / "learning_phrases.txt").write_text(header + "\n".join(LEARNING_PHRASES) + "\n", encoding="utf-8")
    (out / "logistics_phrases.txt").write_text(header + "\n".join(LOGISTICS_PHRASES) + "\n", encoding="utf-8")
    (out / "abbreviations.txt").write_text("\n".join(ABBREVIATIONS) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
