#!/usr/bin/env python3
"""Score all six optical models on the discriminability objective.

Runs the desk-scale f/22 configuration so the whole table takes seconds,
and prints correlation / concentration / combined loss per preset. Lower
correlation means more distinguishable depth bins.

Usage:
    python scripts/compare_presets.py [--bins 6] [--scene nyu]
"""

import argparse

import wavelens as wl
from wavelens.presets import make_fast_preset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--bins", type=int, default=6)
    parser.add_argument("--scene", default="nyu", choices=wl.SCENES)
    args = parser.parse_args()

    print(f"{'preset':<14} {'correlation':>12} {'concentration':>14} {'loss':>10}")
    print("-" * 54)
    for name in wl.PRESET_NAMES:
        cfg = make_fast_preset(name, scene=args.scene, bins=args.bins)
        stack = wl.psf_stack(cfg)
        ncc = wl.correlation_term(stack)
        moment = wl.concentration_term(stack)
        loss = wl.discriminability_loss(stack)
        print(f"{name:<14} {ncc:>12.5f} {moment:>14.5f} {loss:>10.5f}")


if __name__ == "__main__":
    main()
