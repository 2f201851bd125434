"""Compare frontend and alignment variants on the same synthetic corpora.

Variants: rectangular vs Hamming window, and unconstrained vs banded DTW.
Mean accuracies are averaged over several corpus seeds.
"""

import argparse

import numpy as np

from templar.dtw import DtwOptions, Normalize
from templar.evaluation import run_all_pairs, synthesize_corpus
from templar.mfcc import MfccConfig, Window

VARIANTS = {
    "rectangular": (MfccConfig(), DtwOptions()),
    "hamming": (MfccConfig(window=Window.HAMMING), DtwOptions()),
    "rectangular+band10": (MfccConfig(), DtwOptions(band_radius=10)),
    "rectangular+pathnorm": (MfccConfig(), DtwOptions(normalize=Normalize.PATH_LENGTH_AVERAGE)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    args = ap.parse_args()
    corpora = [synthesize_corpus(seed=s) for s in args.seeds]
    print(f"{'variant':<22} {'same %':>8} {'cross %':>8}")
    for name, (cfg, opts) in VARIANTS.items():
        reports = [run_all_pairs(c, cfg, opts) for c in corpora]
        same = np.mean([r.same_speaker_mean for r in reports])
        cross = np.mean([r.cross_speaker_mean for r in reports])
        print(f"{name:<22} {same:8.2f} {cross:8.2f}")


if __name__ == "__main__":
    main()
