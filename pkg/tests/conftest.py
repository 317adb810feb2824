import time
from collections import namedtuple

import numpy as np
import pytest

from hypercf import data, model
from helpers import SYNTH_TRAIN

# ---------------------------------------------------------------- fixtures

BridgeCase = namedtuple("BridgeCase", "bundle info h x labels splits params")
PlantedCase = namedtuple("PlantedCase", "bundle h x labels splits params")


@pytest.fixture(scope="session")
def bridge_case():
    bundle, info = data.synth_planted_bridge(seed=0)
    h, x, labels, splits = data.to_structures(bundle)
    params = model.train(h, x, labels, splits["train"], SYNTH_TRAIN)
    return BridgeCase(bundle, info, h, x, labels, splits, params)


@pytest.fixture(scope="session")
def planted_case():
    bundle = data.synth_planted(seed=0)
    h, x, labels, splits = data.to_structures(bundle)
    params = model.train(h, x, labels, splits["train"],
                         model.TrainConfig(seed=0))
    return PlantedCase(bundle, h, x, labels, splits, params)


# ------------------------------------------------- acceptance line report

_P_LABELS = {
    "test_p1_spectral_bound": ("P1", "spectral bound of the propagation operator"),
    "test_p2_identity_mask": ("P2", "identity mask matches the unmasked path bit for bit"),
    "test_p3_gradient_fd": ("P3", "cf_loss gradients vs finite differences, both variants"),
    "test_p4_locality": ("P4", "edits outside the 3-hop view leave target logits unchanged"),
    "test_p5_oracle_floor": ("P5", "explainer validity and oracle size floor"),
    "test_p6_metric_exactness": ("P6", "metrics match hand computation"),
    "test_p7_bernoulli_bound": ("P7", "Bernoulli bound and Monte-Carlo discovery rate"),
    "test_p8_end_to_end": ("P8", "end-to-end synthetic pipeline"),
}

_p_outcomes = {}
_extra_lines = []
_t_session = None


def report_line(text):
    """Tests may push extra lines into the terminal summary."""
    _extra_lines.append(text)


def pytest_sessionstart(session):
    global _t_session
    _t_session = time.time()


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1].split("[", 1)[0]
    if name not in _P_LABELS:
        return
    if report.failed:
        _p_outcomes[name] = "FAIL"
    elif report.when == "call" and report.passed:
        _p_outcomes.setdefault(name, "PASS")
    elif report.skipped:
        _p_outcomes.setdefault(name, "SKIP")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _p_outcomes and not _extra_lines:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, (tag, label) in _P_LABELS.items():
        if name in _p_outcomes:
            terminalreporter.write_line(f"{tag} {label}: {_p_outcomes[name]}")
    for line in _extra_lines:
        terminalreporter.write_line(line)
    if _t_session is not None:
        terminalreporter.write_line(
            f"suite wall time: {time.time() - _t_session:.1f}s")
