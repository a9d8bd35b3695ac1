import dataclasses

import numpy as np
import pytest

from fracsap.config import load_config, shipped
from fracsap.model import CoefficientSet, InitialSegment, ModelSpec, Preset, Profile
from fracsap.noise import LevySpec
from fracsap.solution_operator import SectorialSpec


@pytest.fixture(scope="session")
def sap():
    return load_config(shipped("sap"))


@pytest.fixture(scope="session")
def failing():
    return load_config(shipped("failing"))


@pytest.fixture(scope="session")
def deterministic():
    return load_config(shipped("deterministic"))


def scalar_model(a=-1.0, alpha=1.5, tau=1.0, omega=1.0, phi=1.0, noise=None, **coeffs):
    """Scalar model with the given presets (zero where omitted)."""
    spec = SectorialSpec.scalar(a, alpha, C=2.05)
    noise = noise or LevySpec(1, (0.0,), (0.0,))
    k0 = coeffs.pop("k0", 0.5)
    L = coeffs.pop("L", 1.0)
    co = CoefficientSet(**coeffs, k0=k0, L=L)
    return ModelSpec(spec, noise, tau, omega, InitialSegment("constant", (phi,)), co)


def zero_coefficients(model):
    return dataclasses.replace(model, coefficients=CoefficientSet(k0=0.5, L=1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


__all__ = ["scalar_model", "zero_coefficients", "Preset", "Profile"]


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid or rep.when != "call":
                continue
            num = int(nodeid.split("test_criterion_")[1][:2])
            detail = dict(rep.user_properties).get("criterion", "no summary recorded")
            lines.append((num, f"criterion {num:2d}: {'PASS' if rep.passed else 'FAIL'}  {detail}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
