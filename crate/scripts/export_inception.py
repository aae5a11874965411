"""Exports torchvision's Inception-V3 as the 2048-d pool-feature ONNX graph
expected by `--extractor inception-onnx`.

    python scripts/export_inception.py inception_v3_pool.onnx

The classifier head is replaced with identity and `transform_input` is
disabled, so the graph takes 1x3x299x299 RGB input scaled to [-1, 1].
Downloads the ImageNet weights on first use.
"""

import sys

import torch
import torchvision


def main(out):
    net = torchvision.models.inception_v3(
        weights=torchvision.models.Inception_V3_Weights.IMAGENET1K_V1,
        aux_logits=True,
    )
    net.transform_input = False
    net.fc = torch.nn.Identity()
    net.eval()
    x = torch.zeros(1, 3, 299, 299)
    torch.onnx.export(
        net,
        x,
        out,
        input_names=["x"],
        output_names=["features"],
        opset_version=13,
        dynamo=False,
    )
    print(out)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "inception_v3_pool.onnx")
