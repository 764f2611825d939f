"""Look at the per-scale interaction images an untrained GSimCNN compares.

Each image is the matrix of inner products between the node embeddings of two
graphs at one GCN depth, padded to a common size and resized to 10x10.
Run: python3 demos/03_interaction_images.py
"""
import numpy as np

from graphsim import Graph
from graphsim.model import GSimCNN, ModelConfig, cnn_trace, feature_width

ring = Graph.build("ring", ["C", "O", "O", "C", "C", "C"], [(i, (i + 1) % 6) for i in range(6)])
star = Graph.build("star", ["C", "O", "O", "O", "O"], [(0, i) for i in range(1, 5)])

config = ModelConfig(vocab=("C", "O"), seed=0)
model = GSimCNN(config)
print(f"CNN spatial trace from {config.resize_m}x{config.resize_m}: {cnn_trace(config)}")
print(f"concatenated feature width: {feature_width(config)}")

np.set_printoptions(precision=2, suppress=True, linewidth=120)
for left, right in [(ring, ring), (ring, star)]:
    images = model.images([(left, right)])
    print(f"\n{left.id} vs {right.id}: predicted similarity {model.score(left, right):.4f}")
    for scale, img in images.items():
        m = img.data[0]
        print(f"  scale {scale}: min {m.min():.2f} max {m.max():.2f} mean {m.mean():.2f}")
    print("  scale 1 image (top-left 6x6):")
    print(images[1].data[0][:6, :6])
