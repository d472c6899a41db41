"""Acceptance criteria, one test (and one printed PASS/FAIL line) each.

Suites run once per thread count and are cached for the module; the
determinism criterion compares the cached single-thread bytes with a rerun
on eight threads.
"""

import time

import pytest

from adversim.suites import DEFAULT_SEED, run_suite

CRITERIA = {
    1: ("prop2", "distdep equals classical under an i.i.d. strategy"),
    2: ("prop3", "distdep at most the worst-case value for iid/deterministic/markov"),
    3: ("prop4", "pathwise structural identities"),
    4: ("prop5", "variance bound, ball and simplex"),
    5: ("prop6", "slow-change bound, ball and simplex"),
    6: ("prop7", "smoothed threshold bound, learnability and collisions"),
    7: ("halving", "noiseless halving forces regret >= 0.4 T"),
    8: ("lemma4", "Rademacher labels force regret >= classical complexity"),
    9: ("dudley", "Dudley bound dominates the distdep estimate"),
    10: ("cover", "exact covering numbers"),
}
TIME_LIMITS = {1: 60.0, 4: 120.0}

_cache: dict = {}


def _run(name, threads=1):
    key = (name, threads)
    if key not in _cache:
        t0 = time.perf_counter()
        res = run_suite(name, DEFAULT_SEED, threads)
        _cache[key] = (res, time.perf_counter() - t0)
    return _cache[key]


def _report(capsys, k, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'} | {detail}")


def _describe(res):
    parts = []
    for c in res.checks:
        parts.append(f"{c['check']}={c['verdict']}")
    return ", ".join(parts)


@pytest.mark.slow
@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, capsys):
    name, what = CRITERIA[k]
    res, secs = _run(name)
    ok = res.passed
    detail = f"{what} [{_describe(res)}] ({secs:.1f}s)"
    limit = TIME_LIMITS.get(k)
    if limit is not None:
        ok = ok and secs < limit
        detail += f" limit {limit:.0f}s"
    _report(capsys, k, ok, detail)
    failed = [c for c in res.checks if c["verdict"] != "pass"]
    assert not failed, failed
    assert limit is None or secs < limit, f"{name} took {secs:.1f}s"


@pytest.mark.slow
def test_criterion_11_determinism(capsys):
    mismatched = []
    for k in sorted(CRITERIA):
        name = CRITERIA[k][0]
        single, _ = _run(name, 1)
        multi, _ = _run(name, 8)
        assert single.files, name
        if single.files.keys() != multi.files.keys():
            mismatched.append(f"{name}: file set")
            continue
        for fname, data in single.files.items():
            if data != multi.files[fname]:
                mismatched.append(f"{name}/{fname}")
    n_files = sum(len(_run(CRITERIA[k][0], 1)[0].files) for k in CRITERIA)
    ok = not mismatched
    _report(capsys, 11, ok, f"{n_files} CSV/JSON files byte-identical at threads 1 and 8"
            if ok else f"differing: {', '.join(mismatched)}")
    assert ok, mismatched


@pytest.mark.slow
def test_hybrid_learnability_invariant(capsys):
    res, secs = _run("cor5")
    rates = next(c for c in res.checks if c["check"] == "regret_rate_decreasing")
    _report(capsys, "hybrid", res.passed, f"adversarial labels, iid x: regret/T {[round(r, 4) for r in rates['regret_per_round']]} "
            f"[{_describe(res)}] ({secs:.1f}s)")
    assert res.passed, res.checks

