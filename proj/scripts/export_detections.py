#!/usr/bin/env python3
"""Export object detections for a frame-directory dataset as JSON lines.

Runs a COCO-pretrained torchvision FPN detector over every video directory of
a split and writes the detections file the vadctx pipeline consumes:

    {"video": str, "frame": int, "boxes": [[x1, y1, x2, y2, conf], ...]}

This is optional tooling for real datasets (the synthetic corpus ships its
own ground-truth detections). Requires: torch, torchvision, pillow.

Usage:
    python3 scripts/export_detections.py data/ucsd-ped2/train \
        --out data/ucsd-ped2/train_detections.jsonl [--min-score 0.05]

Keep --min-score low: the pipeline applies the real per-split threshold
itself (ingest.detection_threshold_train/test in the run config).
"""

import argparse
import json
import pathlib
import sys


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("split_dir", type=pathlib.Path,
                        help="split directory holding one subdirectory per video")
    parser.add_argument("--out", type=pathlib.Path, required=True)
    parser.add_argument("--min-score", type=float, default=0.05)
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args()

    import torch
    import torchvision
    from PIL import Image
    from torchvision.transforms.functional import to_tensor

    model = torchvision.models.detection.fasterrcnn_resnet50_fpn(weights="DEFAULT")
    model.eval().to(args.device)

    videos = sorted(p for p in args.split_dir.iterdir() if p.is_dir())
    if not videos:
        print(f"no video directories under {args.split_dir}", file=sys.stderr)
        return 1

    with args.out.open("w") as out:
        for video in videos:
            frames = sorted(video.glob("*.png")) + sorted(video.glob("*.pgm")) \
                + sorted(video.glob("*.jpg")) + sorted(video.glob("*.tif"))
            for index, frame_path in enumerate(frames):
                image = Image.open(frame_path).convert("RGB")
                with torch.no_grad():
                    pred = model([to_tensor(image).to(args.device)])[0]
                boxes = []
                for box, score in zip(pred["boxes"].cpu(), pred["scores"].cpu()):
                    if float(score) < args.min_score:
                        continue
                    x1, y1, x2, y2 = (float(v) for v in box)
                    boxes.append([x1, y1, x2, y2, float(score)])
                out.write(json.dumps({"video": video.name, "frame": index,
                                      "boxes": boxes}) + "\n")
            print(f"{video.name}: {len(frames)} frames")
    return 0


if __name__ == "__main__":
    sys.exit(main())
