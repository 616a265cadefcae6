"""Fixtures produce real CSVs through the toolkit's command line, which is
the only interface the plotter consumes."""

import shutil
import subprocess

import pytest

CONVERGENCE_HEADER = "method,N,R,estimate,stderr,evals,wall_seconds"


def run_toolkit(*args):
    exe = shutil.which("preintqmc")
    assert exe is not None, "preintqmc must be installed to generate fixture CSVs"
    subprocess.run([exe, *args], check=True, capture_output=True)


@pytest.fixture(scope="session")
def desk_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("csv") / "desk.csv"
    run_toolkit("converge", "--out", str(out), "--seed", "1")
    return out


@pytest.fixture(scope="session")
def profile_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("csv") / "profile.csv"
    run_toolkit(
        "example", "--example", "parabola", "--axis", "1", "--t", "0.25",
        "--coord-min", "-1", "--coord-max", "2", "--samples", "120",
        "--out", str(out),
    )
    return out


@pytest.fixture(scope="session")
def singularity_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("csv") / "sing.csv"
    run_toolkit("singularity", "--target", "parabola", "--axis", "1",
                "--t-list", "0.25", "--out", str(out))
    return out
