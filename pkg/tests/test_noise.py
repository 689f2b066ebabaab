import io
import math

import numpy as np
import pytest

from polpom.ensembles import antitetrad, antitrine, tetrad, trine
from polpom.infotheory import mutual_information
from polpom.noise import (
    MeasuredDistribution,
    NoiseModel,
    estimate_gamma,
    gamma_sweep,
    mi_antistates,
    mi_states,
    monte_carlo_mi,
    noisy_pom,
    read_measured_csv,
)
from polpom.pom import min_error_pom

ANTITRINE_IDEAL = np.array([[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])


def test_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(1.2, 3)
    with pytest.raises(ValueError):
        NoiseModel(0.5, 0)
    assert NoiseModel(0.952, 3).forbidden_rate == pytest.approx(0.016)


def test_noisy_pom_is_valid_and_flat_at_zero():
    pom = noisy_pom(min_error_pom(trine()), NoiseModel(0.0, 3))
    for e in pom.elements:
        assert np.allclose(e.matrix, np.eye(2) / 3)
    with pytest.raises(ValueError, match="outcomes"):
        noisy_pom(min_error_pom(trine()), NoiseModel(0.5, 4))


@pytest.mark.parametrize("n", [3, 4])
def test_closed_form_endpoints(n):
    assert mi_states(NoiseModel(0.0, n)) == pytest.approx(0, abs=1e-15)
    assert mi_antistates(NoiseModel(0.0, n)) == pytest.approx(0, abs=1e-15)
    assert mi_antistates(NoiseModel(1.0, n)) == pytest.approx(math.log2(n / (n - 1)), abs=1e-12)


def test_ideal_values():
    assert mi_states(NoiseModel(1.0, 3)) == pytest.approx(1 / 3, abs=1e-12)
    assert mi_states(NoiseModel(1.0, 4)) == pytest.approx(1 - 0.5 * math.log2(3), abs=1e-12)


def test_sign_symmetry():
    for g in np.linspace(0, 1, 11):
        for n in (3, 4, 7):
            m = NoiseModel(float(g), n)
            # the antistate form is the state form with gamma -> -gamma
            a = (1 - g) / n
            direct = (a * math.log2(1 - g) if g < 1 else 0.0) + (1 - a) * math.log2(1 + g / (n - 1))
            assert mi_antistates(m) == pytest.approx(direct, abs=1e-12)


@pytest.mark.parametrize("states,anti", [(trine, antitrine), (tetrad, antitetrad)])
def test_closed_forms_match_pipeline(states, anti, rng):
    pom = min_error_pom(states())
    for g in rng.uniform(0, 1, 50):
        model = NoiseModel(float(g), len(pom))
        noisy = noisy_pom(pom, model)
        assert mutual_information(states(), noisy).mutual_info_bits == pytest.approx(mi_states(model), abs=1e-10)
        assert mutual_information(anti(), noisy).mutual_info_bits == pytest.approx(mi_antistates(model), abs=1e-10)


def test_estimate_gamma():
    assert estimate_gamma(0.016, 3).gamma == pytest.approx(0.952, abs=1e-12)
    assert estimate_gamma(0.0, 4).gamma == 1.0
    assert estimate_gamma(0.25, 4).gamma == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError, match="exceeds"):
        estimate_gamma(0.4, 3)
    with pytest.raises(ValueError, match="nonnegative"):
        estimate_gamma(-0.1, 3)


def test_gamma_recovered_from_simulated_forbidden_rate(rng):
    pom = min_error_pom(trine())
    for g in rng.uniform(0, 1, 20):
        noisy = noisy_pom(pom, NoiseModel(float(g), 3))
        v = antitrine().states[1].vector
        rate = float(np.real(np.vdot(v, noisy[1].matrix @ v)))
        assert estimate_gamma(rate, 3).gamma == pytest.approx(g, abs=1e-12)


@pytest.mark.parametrize("n", [3, 4])
def test_sweep_monotone(n):
    curve = np.array(gamma_sweep(n, 1000))
    assert curve.shape == (1000, 3)
    assert np.all(np.diff(curve[:, 1]) >= -1e-15)
    assert np.all(np.diff(curve[:, 2]) >= -1e-15)
    assert curve[-1, 2] > curve[-1, 1]


def test_sweep_two_samples_are_endpoints():
    curve = gamma_sweep(3, 2)
    assert [c[0] for c in curve] == [0.0, 1.0]
    with pytest.raises(ValueError):
        gamma_sweep(3, 1)


def test_measured_distribution_validation():
    with pytest.raises(ValueError, match="row 2"):
        MeasuredDistribution(np.array([[0.5, 0.5], [0.2, 0.2]]))
    with pytest.raises(ValueError):
        MeasuredDistribution(np.array([0.5, 0.5]))
    d = MeasuredDistribution.normalized([[2, 2], [1, 3]])
    assert np.allclose(d.probs, [[0.5, 0.5], [0.25, 0.75]])
    with pytest.raises(ValueError, match="no positive"):
        MeasuredDistribution.normalized([[0, 0], [1, 1]])


def test_read_csv_with_header_and_raw_counts():
    d = read_measured_csv(io.StringIO("PD1,PD2,PD3\n0,50,50\n\n5,0,5\n1,1,0\n"))
    assert np.allclose(d.probs, ANTITRINE_IDEAL)


@pytest.mark.parametrize(
    "text,match",
    [
        ("1,2\n3,x\n", "row 2, column 2"),
        ("a,b\n1,2\n3\n", "row 3"),
        ("1,-1\n", "negative"),
        ("", "empty"),
        ("a,b\n", "no data"),
    ],
)
def test_read_csv_errors(text, match):
    with pytest.raises(ValueError, match=match):
        read_measured_csv(io.StringIO(text))


def test_read_csv_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_measured_csv(tmp_path / "none.csv")


def test_monte_carlo_deterministic_and_chunk_independent():
    d = MeasuredDistribution(ANTITRINE_IDEAL)
    a = monte_carlo_mi(d, trials=20000, seed=7)
    b = monte_carlo_mi(d, trials=20000, seed=7)
    c = monte_carlo_mi(d, trials=20000, seed=8)
    assert a == b
    assert a != c
    assert a.point == pytest.approx(math.log2(3 / 2), abs=1e-12)
    assert a.lower < a.upper < a.point


def test_monte_carlo_prefix_stable():
    # the first chunk of a longer run is the same stream as a one-chunk run
    from polpom.noise import MC_CHUNK

    d = MeasuredDistribution(ANTITRINE_IDEAL)
    short = monte_carlo_mi(d, trials=MC_CHUNK, seed=3, percentiles=(0, 100))
    long = monte_carlo_mi(d, trials=3 * MC_CHUNK, seed=3, percentiles=(0, 100))
    assert long.lower <= short.lower and long.upper >= short.upper


def test_monte_carlo_zero_width():
    d = MeasuredDistribution(ANTITRINE_IDEAL)
    r = monte_carlo_mi(d, half_width=0.0, trials=1, seed=0)
    assert r.point == pytest.approx(r.lower) == pytest.approx(r.upper)
    assert r.to_json() == {"point": r.point, "lower": r.lower, "upper": r.upper, "trials": 1, "seed": 0}


def test_monte_carlo_argument_checks():
    d = MeasuredDistribution(ANTITRINE_IDEAL)
    with pytest.raises(ValueError):
        monte_carlo_mi(d, half_width=-1)
    with pytest.raises(ValueError):
        monte_carlo_mi(d, trials=0)
    with pytest.raises(ValueError, match="priors"):
        monte_carlo_mi(d, priors=[0.5, 0.5], trials=1)
