#!/usr/bin/env python3
"""Full-scale training protocol: reference network, 10 runs of 15 epochs at
learning rate 5e-5 on a full APTOS-format training manifest.

This is NOT part of the test suite. It needs the full dataset on disk and
realistically a GPU-class machine; on success the training-set accuracy is
expected to land within a couple of points of 96.60%.

Usage:
    python scripts/full_protocol.py --manifest train.csv --image-dir images/ \
        --out-dir runs/full
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from drscreen.cli import run  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--image-dir", required=True)
    parser.add_argument("--out-dir", default="runs/full")
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = out_dir / "protocol-config.yaml"
    config.write_text(
        "model: {}\n"
        "train: {}\n"
        "augment: {}\n"
        "data:\n"
        f"  train_manifest: {args.manifest}\n"
        f"  image_dir: {args.image_dir}\n"
        "  holdout_fraction: 0.345\n"  # approximates the published 3,662/1,928 split
        f"out_dir: {out_dir}\n",
        encoding="utf-8",
    )
    return run(["train", "--config", str(config), "--out-dir", str(out_dir)])


if __name__ == "__main__":
    sys.exit(main())
