"""Writes the small ONNX graph used by the `onnx` feature tests.

Input `x` is 1x3x299x299. A 1x1 convolution with fixed weights maps it to
4 channels, then a global average pool and flatten give a 1x4 output, so
out[k] = sum_c W[k, c] * mean(x[c]) + b[k].
"""

import sys

import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper

W = np.array(
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, -0.25, 2.0]],
    dtype=np.float32,
).reshape(4, 3, 1, 1)
B = np.array([0.0, 0.0, 0.0, 0.125], dtype=np.float32)


def build():
    x = helper.make_tensor_value_info("x", TensorProto.FLOAT, [1, 3, 299, 299])
    y = helper.make_tensor_value_info("features", TensorProto.FLOAT, [1, 4])
    nodes = [
        helper.make_node("Conv", ["x", "W", "B"], ["c"]),
        helper.make_node("GlobalAveragePool", ["c"], ["p"]),
        helper.make_node("Flatten", ["p"], ["features"], axis=1),
    ]
    graph = helper.make_graph(
        nodes,
        "pool_linear",
        [x],
        [y],
        initializer=[numpy_helper.from_array(W, "W"), numpy_helper.from_array(B, "B")],
    )
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 13)])
    model.ir_version = 8
    onnx.checker.check_model(model)
    return model


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures/pool_linear.onnx"
    onnx.save(build(), out)
    print(out)
