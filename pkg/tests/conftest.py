import os

import pytest
from hypothesis import HealthCheck, settings

from rlmtrack.geometry import CameraModel

settings.register_profile(
    "default",
    max_examples=int(os.environ.get("RLM_HYPOTHESIS_EXAMPLES", "100")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# Five cameras spanning wide/narrow views and shallow/steep tilts; two clip at the horizon.
CAMERAS = [
    CameraModel(beta_v=60.0, beta_h=90.0, gamma=15.0, cam_height=6.0, img_w=1920, img_h=1080),
    CameraModel(beta_v=100.0, beta_h=120.0, gamma=20.0, cam_height=3.0, img_w=1920, img_h=1080),
    CameraModel(beta_v=60.0, beta_h=80.0, gamma=45.0, cam_height=10.0, img_w=1280, img_h=720),
    CameraModel(beta_v=120.0, beta_h=140.0, gamma=20.0, cam_height=2.5, img_w=1920, img_h=1080),
    CameraModel(beta_v=40.0, beta_h=60.0, gamma=5.0, cam_height=12.0, img_w=640, img_h=480, fps=25.0),
]

# Lines reported by the acceptance suite, printed at the end of the run.
ACCEPTANCE_LINES = []


@pytest.fixture(params=range(len(CAMERAS)), ids=lambda i: f"cam{i}")
def cam(request):
    return CAMERAS[request.param]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
