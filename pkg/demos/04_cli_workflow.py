"""The command-line round trip: synth, track, eval, project, plot.

Everything is written to a temporary directory. Each step calls the same
entry point the ``rlmtrack`` console script uses.

Run: python3 demos/04_cli_workflow.py
"""

# %%
import tempfile
from pathlib import Path

from rlmtrack.cli import main

out = Path(tempfile.mkdtemp(prefix="rlmtrack-demo-"))
print("working in", out)


def run(*argv):
    print("\n$ rlmtrack", " ".join(map(str, argv)))
    code = main([str(a) for a in argv])
    assert code == 0, code


# %% Generate a scene, track it, score it.
run("synth", "--preset", "crossing", "--seed", 0, "--gt", out / "gt.txt", "--dets", out / "dets.txt",
    "--camera-out", out / "camera.txt")
run("track", out / "dets.txt", "--camera", out / "camera.txt", "--out", out / "results.txt")
run("eval", out / "gt.txt", out / "results.txt")

# %% Project a pixel to the map and back, then draw both planes.
run("project", "--camera", out / "camera.txt", 960, 200)
run("plot", out / "results.txt", "--camera", out / "camera.txt", "--svg", out / "tracks.svg", "--csv", out / "tracks.csv")
print("\nwrote", out / "tracks.svg")
