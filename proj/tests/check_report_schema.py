# SPDX-License-Identifier: Apache-2.0
"""Runs the sarclab pipeline on the toy dataset and validates report.json files
against schema/report.schema.json."""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema


def sarclab(exe, *args):
    proc = subprocess.run([exe, *map(str, args)], capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"sarclab {' '.join(map(str, args))} exited {proc.returncode}:\n{proc.stderr}")
    return proc.stdout


def main():
    exe, schema_path, dataset, tmp = sys.argv[1:5]
    tmp = Path(tmp)
    shutil.rmtree(tmp, ignore_errors=True)
    schema = json.loads(Path(schema_path).read_text())
    validator = jsonschema.Draft202012Validator(schema)

    quick = ["--epochs", "3", "--hidden", "4", "--runs", "2", "--seed", "5"]
    sarclab(exe, "ablate", *quick, "--out", tmp / "ablate", dataset)
    sarclab(exe, "train", "--model", "gcn", "--edges", "bi", *quick, "--out", tmp / "train", dataset)
    sarclab(exe, "analyze", "--baseline", tmp / "ablate/rows/baseline.json", "--gcn",
            tmp / "ablate/rows/gcn-bi.json", "--polarity-subset", "--dataset", dataset, "--out", tmp / "analyze")
    sarclab(exe, "saliency", "--mode", "occlusion", "--model", tmp / "train/models/run0.ckpt", "--result",
            tmp / "train/result.json", "--out", tmp / "occlusion", dataset)
    sarclab(exe, "report", "--ablation", tmp / "ablate/ablation.json", "--analysis",
            tmp / "analyze/analysis.json", "--occlusion", tmp / "occlusion/occlusion.json", "--out", tmp / "full")
    sarclab(exe, "report", "--ablation", tmp / "ablate/ablation.json", "--out", tmp / "partial")
    sarclab(exe, "report", "--out", tmp / "empty")

    failed = False
    for name in ("full", "partial", "empty"):
        report = json.loads((tmp / name / "report.json").read_text())
        errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
        for e in errors:
            print(f"{name}: {'/'.join(map(str, e.path))}: {e.message}")
        failed = failed or bool(errors)
        print(f"{name}: {'ok' if not errors else 'INVALID'}")

    full = json.loads((tmp / "full" / "report.json").read_text())
    if len(full["accuracy_by_edge_config"]) != 4 or len(full["input_row_removal"]) != 3:
        print("full: wrong number of experiment rows")
        failed = True
    if full["occlusion"] is None or full["ns_coverage"] is None:
        print("full: missing sections")
        failed = True
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
