#!/usr/bin/env python3
"""Reference adapter: wraps a promptable segmentation model as an NDJSON
backend for the `mpa` pipeline. Ships as documentation; the test suite talks
to stub backends instead, since model weights are large external assets.

Protocol (one JSON object per line on stdio):
  -> {"op":"hello"}
  <- {"op":"hello","kind":"segmenter"}
  -> {"op":"segment","id":"q1#0","image":"/path.png","points":[[x,y,label],...],
      "box":[x0,y0,x1,y1],"mask_logits":"/path.mpal" | null}
  <- {"op":"result","id":"q1#0","mask":"/path_pred.png","confidence":0.97}
  <- {"op":"error","id":"q1#0","message":"..."} on failure

Run:  mpa run --config cfg.json   with
      "segmentation_backend": "exec:python3 tools/sam_adapter.py --checkpoint sam_vit_b.pth"
"""

import argparse
import json
import struct
import sys


def read_logits(path):
    """MPAL sidecar: magic, u32 version, u32 h, u32 w, h*w float32 LE."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != b"MPAL":
            raise ValueError("bad logit grid magic")
        version, h, w = struct.unpack("<III", f.read(12))
        if version != 1:
            raise ValueError("unsupported logit grid version")
        data = struct.unpack("<%df" % (h * w), f.read(4 * h * w))
    return h, w, data


def load_model(checkpoint, model_type):
    # Requires the external `segment_anything` package and a checkpoint.
    from segment_anything import SamPredictor, sam_model_registry

    sam = sam_model_registry[model_type](checkpoint=checkpoint)
    return SamPredictor(sam)


def segment(predictor, msg):
    import numpy as np
    from PIL import Image

    image = np.array(Image.open(msg["image"]).convert("RGB"))
    predictor.set_image(image)
    points = np.array([[p[0], p[1]] for p in msg["points"]], dtype=np.float32)
    labels = np.array([p[2] for p in msg["points"]], dtype=np.int32)
    box = np.array(msg["box"], dtype=np.float32)

    mask_input = None
    if msg.get("mask_logits"):
        h, w, data = read_logits(msg["mask_logits"])
        grid = np.array(data, dtype=np.float32).reshape(h, w)
        # SAM wants a 256x256 low-res logit map.
        import cv2

        mask_input = cv2.resize(grid, (256, 256))[None, :, :]

    masks, scores, _ = predictor.predict(
        point_coords=points,
        point_labels=labels,
        box=box,
        mask_input=mask_input,
        multimask_output=True,
    )
    best = int(scores.argmax())
    out_path = msg["image"] + ".pred.png"
    Image.fromarray((masks[best] * 255).astype("uint8")).save(out_path)
    return {"op": "result", "id": msg["id"], "mask": out_path,
            "confidence": float(scores[best])}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--checkpoint", required=True)
    ap.add_argument("--model-type", default="vit_b")
    args = ap.parse_args()

    predictor = load_model(args.checkpoint, args.model_type)
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        msg = json.loads(line)
        if msg["op"] == "hello":
            reply = {"op": "hello", "kind": "segmenter"}
        elif msg["op"] == "segment":
            try:
                reply = segment(predictor, msg)
            except Exception as e:  # per-request failure, keep serving
                reply = {"op": "error", "id": msg.get("id", ""),
                         "message": str(e)}
        else:
            reply = {"op": "error", "id": msg.get("id", ""),
                     "message": "unsupported op %s" % msg["op"]}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
