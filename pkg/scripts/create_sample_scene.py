"""
Generate sample synthetic scenes for testing and demonstration.

This script renders the three preset scenes into data/:
- data/dyadic: fronto-parallel plane with warps that land on pixel centres
- data/street: road and facade, lateral motion
- data/moving-box: street scene with a car-like box driving across

Each directory holds PPM images, PGM label maps, F32 depth rasters,
intrinsics.txt, poses.txt and manifest.json.

Usage:
    python scripts/create_sample_scene.py [--frames N] [--seed S]
"""

import argparse
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.main import SCENE_PRESETS, main as semdepth_main


def main():
    """Render every preset scene."""
    parser = argparse.ArgumentParser(description="Render the sample synthetic scenes")
    parser.add_argument("--frames", type=int, default=3, help="Frames per scene")
    parser.add_argument("--seed", type=int, default=0, help="Texture seed")
    parser.add_argument("--output", default="data", help="Parent directory")
    args = parser.parse_args()

    print(">> Rendering sample scenes...\n")
    data_dir = Path(args.output)
    for preset in sorted(SCENE_PRESETS):
        target = data_dir / preset
        print(f"[{preset}] Rendering {args.frames} frames...")
        code = semdepth_main([
            "gen-scene", "--preset", preset, "--frames", str(args.frames),
            "--seed", str(args.seed), "--output", str(target),
        ])
        if code != 0:
            print(f"   [FAILED] exit code {code}")
            return code
        print(f"   [OK] Created {target / 'manifest.json'}")

    print("\n" + "=" * 60)
    print("[SUCCESS] Sample scenes rendered!")
    print("=" * 60)
    print("\nTry:")
    print(f"  python scripts/semdepth.py compute-loss --manifest {data_dir / 'street' / 'manifest.json'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
