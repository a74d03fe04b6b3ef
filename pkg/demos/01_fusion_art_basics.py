"""A two-channel fusion field learning a few patterns.

Run: python demos/01_fusion_art_basics.py
"""
import numpy as np

from stemcovid.fusion_art import ChannelParams, FusionField, template_match

field = FusionField(dims=[3, 2], params=[ChannelParams(rho=1.0), ChannelParams(rho=1.0)])

patterns = [
    [np.array([1.0, 0.0, 0.5]), np.array([1.0, 0.0])],
    [np.array([1.0, 0.0, 0.5]), np.array([1.0, 0.0])],  # repeat: resonates with node 0
    [np.array([0.0, 1.0, 0.0]), np.array([0.0, 1.0])],
]
for x in patterns:
    j = field.learn(x)
    print(f"input {[v.tolist() for v in x]} -> node {j}")

print(f"\n{len(field.nodes)} committed nodes")
probe = [np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0])]
print("activations for a partial probe:", np.round(field.activations(probe), 4))

# a probe contained in node 0's template passes perfect vigilance
m, ok = template_match(probe[0], field.nodes[0].weights[0], rho=1.0)
print(f"match against node 0 channel 0: m={m:.2f} resonant={ok}")
