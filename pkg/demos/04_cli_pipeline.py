"""
End-to-end pipeline on a synthetic dataset
==========================================

The command-line entry point chains everything: build a KITTI-style
dataset on disk, run the noise oracle to produce per-branch depth
predictions, score them, probe the plane estimator, and sweep the flip
experiment, all from the same files a real detector would read and write.
"""

import json
import tempfile
from pathlib import Path

from compdepth import format_calib, format_labels, make_scene
from compdepth.cli import main

root = Path(tempfile.mkdtemp())
(root / "calib").mkdir()
(root / "label_2").mkdir()

# two frames of boxes standing on random gentle slopes
for frame, seed in (("000000", 1), ("000001", 2)):
    scene = make_scene(60, seed=seed)
    (root / "calib" / f"{frame}.txt").write_text(format_calib(scene.intrinsics))
    (root / "label_2" / f"{frame}.txt").write_text(format_labels(scene.objects))
print(f"dataset under {root}")

# the oracle replays geometry with controlled noise: +-10% box height
# error and +-0.5 px row jitter, the regime where branches disagree
preds = root / "predictions.jsonl"
main(["oracle", "--calib-dir", str(root / "calib"),
      "--label-dir", str(root / "label_2"),
      "--noise-h-rel", "0.10", "--noise-px", "0.5",
      "--seed", "3", "--out", str(preds)])
print(f"\noracle wrote {sum(1 for l in preds.open() if not l.startswith('#'))} "
      f"prediction records")

# score them against the labels they came from
report_path = root / "report.json"
main(["eval", "--calib-dir", str(root / "calib"),
      "--label-dir", str(root / "label_2"),
      "--predictions", str(preds), "--out", str(report_path)])
report = json.loads(report_path.read_text())
print(f"\nreference branch: {report['reference']}")
for row in report["branches"]:
    cs = "-" if row["cs"] is None else row["cs"]
    print(f"  {row['name']:>5}: mae {row['mae']}, cs {cs}")
for pair in report["esop"]:
    print(f"  sign opposition {pair['a']} vs {pair['b']}: {pair['value']}%")
print(f"fused MAE {report['fused']['mae']} over {report['n_objects']} objects")

# the plane subcommand fits a ground plane per frame and reports how well
# closed-form elevation explains the boxes
plane_report = root / "plane.json"
main(["plane", "--calib-dir", str(root / "calib"),
      "--label-dir", str(root / "label_2"), "--out", str(plane_report)])
summary = json.loads(plane_report.read_text())["summary"]
print(f"\nplane fit: elevation MAE {summary['y_mae']} m over "
      f"{summary['n_objects']} objects, "
      f"{summary['fallback_frames']} fallback frames")

# finally, the lab subcommand runs the flip sweep on those predictions
curves = root / "curves.csv"
main(["lab", "--mode", "flip", "--predictions", str(preds),
      "--seed", "4", "--out", str(curves)])
print("\nflip sweep curves:")
for line in curves.read_text().splitlines():
    if not line.startswith("#"):
        print(f"  {line}")
