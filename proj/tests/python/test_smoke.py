"""Smoke tests for the python bindings: the main operations are callable and
agree with the pinned C++ regression values."""

import math

import aoc


def approx(a, b, rel=1e-9):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def test_deterministic_bound():
    res = aoc.bound_deterministic(aoc.PeriodicSource(1.0, 2.0), 1.0, 0.0)
    assert res.feasible
    assert approx(res.delta_eps, 3.0)
    assert approx(res.v_eps, 1.0)


def test_markov_bound_regression():
    ch = aoc.markov_from_stats(0.9, 1.0, 8.0)
    assert approx(ch.p_on, 0.9) and approx(ch.beta, 8.0)
    res = aoc.bound_periodic(aoc.PeriodicSource(1.0, 2.0), ch, 1e-3)
    assert res.feasible
    assert abs(res.delta_eps - 14.071286) < 5e-3
    m0 = aoc.bound_priority(aoc.PeriodicSource(1.0, 2.0), ch, 0, 1e-3)
    assert m0.delta_eps == res.delta_eps


def test_poisson_bound():
    res = aoc.bound_poisson(aoc.PoissonSource(1.0, 2.0), 10.0 / 9.0, 0.9, 1e-3)
    assert res.feasible
    assert abs(res.delta_eps - 14.715622) < 5e-3
    assert approx(res.eps_over + res.eps_under, 1e-3)


def test_simulation_dominance():
    ch = aoc.markov_from_stats(0.9, 1.0, 8.0)
    src = aoc.PeriodicSource(1.0, 8.0)
    run = aoc.simulate_periodic_markov(src, ch, 20000, seed=7)
    assert run.informative == 20000
    again = aoc.simulate_periodic_markov(src, ch, 20000, seed=7)
    assert run.peaks == again.peaks

    bound = aoc.bound_periodic(src, ch, 1e-2)
    peak_q = aoc.empirical_quantile(run.peaks, 0.99)
    delay_q = aoc.empirical_quantile(run.delays, 0.99)
    assert bound.delta_eps >= peak_q
    assert bound.v_eps >= delay_q
    assert aoc.quantile_reliable(len(run.peaks), 0.99)


def test_quantile_and_errors():
    assert aoc.empirical_quantile([float(i) for i in range(1, 101)], 0.99) == 100.0
    try:
        aoc.empirical_quantile([], 0.5)
    except Exception:
        pass
    else:
        raise AssertionError("expected a raise on empty input")


def test_preset_files():
    files = aoc.preset_files("fig5")
    names = set(files)
    assert "fig5.json" in names and "fig5_delta.csv" in names
    body = files["fig5_delta.csv"].decode()
    assert body.splitlines()[-1].split(",")[0] != ""
    try:
        aoc.preset_files("fig9")
    except aoc.ScenarioError:
        pass
    else:
        raise AssertionError("expected ScenarioError")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"{name}: ok")
    print("python smoke: all passed")
