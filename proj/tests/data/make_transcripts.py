# Copyright 2026 The genaug Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the golden protocol transcripts with an independent PNG encoder.

Each transcript line is {"dir": ">" | "<", "msg": {...}}; ">" lines are what
the client must send, "<" lines are the replies to play back.
"""

import base64
import io
import json
import pathlib

from PIL import Image


def pattern(side):
    img = Image.new("RGB", (side, side))
    for y in range(side):
        for x in range(side):
            img.putpixel((x, y), ((x * 29 + y * 7) % 256, (x * 3 + y * 31) % 256, (x * y * 5) % 256))
    return img


def b64png(img):
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def write(path, lines):
    with open(path, "w") as f:
        for direction, msg in lines:
            f.write(json.dumps({"dir": direction, "msg": msg}) + "\n")


def main():
    here = pathlib.Path(__file__).parent
    side, off, hole = 8, 2, 4

    masked = pattern(side)
    mask = Image.new("L", (side, side), 0)
    completed = pattern(side)
    for y in range(off, off + hole):
        for x in range(off, off + hole):
            masked.putpixel((x, y), (0, 0, 0))
            mask.putpixel((x, y), 255)
            completed.putpixel((x, y), (200, 100, 50))
    write(here / "generator_transcript.jsonl", [
        (">", {"op": "hello", "role": "generator", "version": 1, "patch_size": side}),
        ("<", {"op": "hello_ack", "role": "generator", "version": 1}),
        (">", {"op": "generate", "id": 1, "patch_png": b64png(masked), "mask_png": b64png(mask)}),
        ("<", {"op": "result", "id": 1, "patch_png": b64png(completed)}),
    ])

    image = pattern(16)
    write(here / "detector_transcript.jsonl", [
        (">", {"op": "hello", "role": "detector", "version": 1, "patch_size": side}),
        ("<", {"op": "hello_ack", "role": "detector", "version": 1}),
        (">", {"op": "detect", "id": 1, "image_png": b64png(image)}),
        ("<", {"op": "detections", "id": 1, "items": [
            {"x_min": 1.5, "y_min": 2, "x_max": 9, "y_max": 12.25, "confidence": 0.875, "label": "car"},
            {"x_min": 10, "y_min": 10, "x_max": 20, "y_max": 20, "confidence": 0.5, "label": "car"},
        ]}),
        (">", {"op": "detect", "id": 2, "image_png": b64png(image)}),
        ("<", {"op": "error", "id": 2, "message": "model failure"}),
    ])


if __name__ == "__main__":
    main()
