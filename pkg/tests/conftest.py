import numpy as np
import pytest
from hypothesis import settings

from wordrank.chain import ChainSpec, bundled_chain, random_chain

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def figs():
    names = ("fig1a", "fig1b", "fig1c", "fig1d", "fig1e", "fig1e_start1", "fig2")
    return {name: bundled_chain(name) for name in names}


def chain_from_seed(seed: int, **kwargs) -> ChainSpec:
    return random_chain(np.random.default_rng(seed), **kwargs)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" not in getattr(rep, "nodeid", "") or rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                rows.append((props["criterion"], outcome, props.get("measured", "")))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, outcome, measured in sorted(rows, key=lambda r: int(r[0].split()[0])):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {status} criterion {criterion} | {measured}")
