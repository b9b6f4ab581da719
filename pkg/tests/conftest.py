from __future__ import annotations

from fractions import Fraction

from hypothesis import settings, strategies as st

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=12)


def fr(x) -> Fraction:
    return Fraction(x)


ACCEPTANCE = {
    "test_c01_hopf_axioms": "1 Hopf axioms on forests <= 5 nodes",
    "test_c02_bphz_finiteness": "2 BPHZ finiteness for trees <= 4 nodes",
    "test_c03_convolution_identity": "3 R = C*F on forests <= 4 nodes",
    "test_c04_rota_baxter": "4 Rota-Baxter on 1000 random series",
    "test_c05_free_action": "5 position vs momentum free action",
    "test_c06_band_convolution": "6 sharp-band Gaussian convolution",
    "test_c07_wilson": "7 Wilson effective action reproduces Z",
    "test_c08_legendre": "8 Legendre transform and empirical rate",
    "test_c09_sequences": "9 interacting sequences",
    "test_c10_gauge": "10 gauge partition factorization",
    "test_c11_hierarchy": "11 state-space hierarchy",
    "test_c12_cli_determinism": "12 CLI determinism",
}
_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1].split("[")[0]
    if name not in ACCEPTANCE:
        return
    if report.when == "call" or report.failed or report.skipped:
        if report.failed:
            _outcomes[name] = "FAIL"
        elif report.skipped:
            _outcomes.setdefault(name, "SKIP")
        else:
            _outcomes.setdefault(name, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name, label in ACCEPTANCE.items():
        if name in _outcomes:
            terminalreporter.write_line(f"{_outcomes[name]}  {label}")
