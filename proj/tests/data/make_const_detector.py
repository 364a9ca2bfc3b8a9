#!/usr/bin/env python3
# Copyright 2026 The notedetect Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes const_detector.onnx, a tiny model with the detector output contract.

Whatever the input, it returns two boxes: a 100 Rupees note at
(0.25, 0.25, 0.75, 0.75) with score 0.9, and a 20 Rupees note at
(0.1, 0.1, 0.2, 0.2) with score 0.3. Weights are near zero so the input only
has to flow through the graph.

Requires torch and onnx.
"""

import argparse

import torch


class ConstDetector(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.pool = torch.nn.AdaptiveAvgPool2d(1)
        self.boxes = torch.nn.Linear(3, 8)
        self.classes = torch.nn.Linear(3, 2)
        self.scores = torch.nn.Linear(3, 2)
        heads = (
            (self.boxes, [0.25, 0.25, 0.75, 0.75, 0.1, 0.1, 0.2, 0.2]),
            (self.classes, [2.0, 0.0]),
            (self.scores, [0.9, 0.3]),
        )
        # Distinct weights keep the exporter from folding the heads together.
        for i, (layer, bias) in enumerate(heads):
            layer.weight.data = torch.full_like(layer.weight, 1e-9 * (i + 1))
            layer.bias.data = torch.tensor(bias)

    def forward(self, x):
        f = torch.flatten(self.pool(x), 1)
        return self.boxes(f), self.classes(f), self.scores(f)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="const_detector.onnx")
    parser.add_argument("--input-size", type=int, default=64)
    args = parser.parse_args()
    dummy = torch.zeros(1, 3, args.input_size, args.input_size)
    torch.onnx.export(ConstDetector(), dummy, args.out, input_names=["image"],
                      output_names=["boxes", "classes", "scores"], opset_version=11,
                      dynamo=False, do_constant_folding=False)


if __name__ == "__main__":
    main()
