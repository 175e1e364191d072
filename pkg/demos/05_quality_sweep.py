"""Mean PSNR over the desk corpus for Qf 80..100, as CSV and as a text table.

Run:  python3 demos/05_quality_sweep.py [output_dir]

Takes about half a minute.
"""
import sys
from pathlib import Path

from etcsns.corpus import corpus_paths
from etcsns.evaluation import ExperimentSpec, run_experiment

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)

spec = ExperimentSpec(images=tuple(corpus_paths()))
result = run_experiment(spec)
(out / "sweep.csv").write_text(result.to_csv())

cols = [(p, a, m) for p in ("facebook_hq", "twitter") for m in ("444", "420")
        for a in ("encrypted", "plain")]
print("qf  " + " ".join(f"{p[:2]}{m}{a[0]}".rjust(8) for p, a, m in cols))
for qf in spec.qfs:
    print(f"{qf:3d} " + " ".join(f"{result.row(p, a, m, qf).mean_psnr:8.2f}" for p, a, m in cols))

# ground truth = the JPEG the user would have uploaded without encryption
jspec = ExperimentSpec(images=spec.images, qfs=(80, 90, 100), ground_truth="jpeg")
jres = run_experiment(jspec)
print(jres.to_csv())
