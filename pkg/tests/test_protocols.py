import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zenospin import protocols
from zenospin.oracle import ensemble_evolve, mixed_sequence
from zenospin.protocols import (
    Protocol,
    ProtocolKind,
    asymptotics,
    crossing_scan,
    default_moments,
    expectation,
    find_crossings,
    fit_rate,
    per_spin_transition,
    small_tau_ratios,
    transition_probability,
    two_pulse_meas,
    two_pulse_mod,
)
from zenospin.quadrature import QuadratureError
from zenospin.spectral import EnsembleSpec, moments, normalize, quantile_sample

G = 1e-3


def gaussian_p0_weak(g, t):
    # weak-coupling limit: 2 g^2 int_0^t (t - s) exp(-s^2/2) ds
    return 2 * g * g * (t * math.sqrt(math.pi / 2) * math.erf(t / math.sqrt(2)) + math.expm1(-t * t / 2))


class TestProtocol:
    def test_kind_from_string(self):
        p = Protocol("meas", 0.1, 20)
        assert p.kind is ProtocolKind.MEAS and p.t == pytest.approx(2.0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Protocol("mod", -0.1, 2)
        with pytest.raises(ValueError):
            Protocol("mod", 0.1, -2)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            Protocol("echo", 0.1, 2)

    def test_odd_mixed_count_uses_explicit_sequence(self):
        w = np.array([0.7, -0.2])
        p = per_spin_transition(Protocol("mix", 1.3, 7), w, 0.3)
        assert p[0] == pytest.approx(0.3667983882955021105, abs=1e-14)


@pytest.mark.parametrize("t", [0.5, 2.0, 10.0])
def test_free_gaussian_closed_form(gaussian, t):
    val, route = expectation(Protocol("free", t / 100, 100), gaussian, G)
    assert route == "quadrature"
    assert val == pytest.approx(gaussian_p0_weak(G, t), rel=1e-4)


def test_free_ratio_is_one(gaussian):
    res = transition_probability(Protocol("free", 0.2, 10), gaussian, G)
    assert res.ratio == 1.0 and res.method == "quadrature"


def test_rejects_nonpositive_coupling(gaussian):
    with pytest.raises(ValueError):
        transition_probability(Protocol("mod", 0.2, 10), gaussian, 0.0)


def test_modulation_freezes_at_long_times(gaussian):
    tau = 0.01
    vals = [expectation(Protocol("mod", tau, n), gaussian, G)[0] for n in (1000, 4000, 10_000)]
    for v in vals:
        assert v == pytest.approx(0.5 * G * G * tau * tau, rel=1e-4)


@pytest.mark.parametrize("n", [10, 100])
def test_modulation_short_time_build_up(gaussian, n):
    # before freezing: (g^2 tau^2 / 2) (1 - exp(-t^2 / 2)) for the unit Gaussian
    tau = 0.01
    val = expectation(Protocol("mod", tau, n), gaussian, G)[0]
    assert val == pytest.approx(0.5 * G * G * tau * tau * -math.expm1(-((n * tau) ** 2) / 2), rel=2e-4)


def test_two_pulse_helpers_match_protocols(densities):
    for d in densities.values():
        for tau in (0.1, 1.0, 2.7):
            assert two_pulse_mod(d, G, tau) == pytest.approx(expectation(Protocol("mod", tau, 2), d, G)[0], rel=1e-7)
            assert two_pulse_meas(d, G, tau) == pytest.approx(expectation(Protocol("meas", tau, 2), d, G)[0], rel=1e-7)


def test_two_pulse_on_ensemble(gaussian):
    ens = quantile_sample(gaussian, 4000)
    assert two_pulse_mod(ens, G, 0.5) == pytest.approx(expectation(Protocol("mix", 0.5, 2), ens, G)[0], rel=1e-14)
    assert two_pulse_mod(ens, G, 0.0) == 0.0


def test_ensemble_route_matches_oracle_for_odd_mixed(gaussian):
    ens = quantile_sample(gaussian, 500)
    _, trans = ensemble_evolve(mixed_sequence(0.3, 9), ens.omegas, G)
    assert expectation(Protocol("mix", 0.3, 9), ens, G)[0] == pytest.approx(trans, abs=1e-15)


def test_quadrature_failure_falls_back(monkeypatch, gaussian):
    def fail(*args, **kwargs):
        raise QuadratureError("forced", 0.0, 1.0, 0)

    monkeypatch.setattr(protocols, "integrate_expectation", fail)
    val, route = expectation(Protocol("mod", 0.2, 10), gaussian, G, fallback_k=1000)
    assert route == "ensemble(1000)"
    assert val == pytest.approx(expectation(Protocol("mod", 0.2, 10), quantile_sample(gaussian, 1000), G)[0])


def test_ratio_never_mixes_routes(monkeypatch, gaussian):
    real = protocols.integrate_expectation
    calls = []

    def fail_controlled(d, f, **kw):
        # the controlled value is integrated first, the free reference second
        calls.append(1)
        if len(calls) == 1:
            raise QuadratureError("forced", 0.0, 1.0, 0)
        return real(d, f, **kw)

    monkeypatch.setattr(protocols, "integrate_expectation", fail_controlled)
    res = transition_probability(Protocol("meas", 0.2, 10), gaussian, G, fallback_k=2000)
    ens = quantile_sample(gaussian, 2000)
    assert res.method == "ensemble(2000)"
    assert res.p_free == expectation(Protocol("free", 0.2, 10), ens, G)[0]


class TestAsymptotics:
    def test_reference_values(self, gaussian):
        r = asymptotics(G, 0.2, 10.0, moments(gaussian))
        assert r.t_c == pytest.approx(5.0, rel=1e-12)
        assert r.tau_c == pytest.approx(0.1, rel=1e-12)
        assert r.n_c == pytest.approx(100.0, rel=1e-12)
        assert r.p_mod_frozen == pytest.approx(2e-8)
        assert r.gamma_meas == pytest.approx(2e-7)
        assert r.gamma_mix == pytest.approx(0.5 * 1e-6 * 0.008)
        assert r.gamma0 == pytest.approx(2 * math.pi * 1e-6 / math.sqrt(2 * math.pi), rel=1e-12)

    def test_crossover_time_at_quoted_delay(self, gaussian):
        assert asymptotics(G, 0.05, 1.0, moments(gaussian)).t_c == pytest.approx(20.0, rel=1e-12)

    def test_rejects_nonpositive(self, gaussian):
        with pytest.raises(ValueError):
            asymptotics(G, 0.0, 10.0, moments(gaussian))

    def test_small_tau_ratios(self, gaussian):
        meas, mix = small_tau_ratios(0.01, moments(gaussian))
        assert meas == pytest.approx(3.98942e-3, rel=1e-5)
        assert mix == pytest.approx(0.5 * 1e-4 * meas, rel=1e-12)
        with pytest.raises(ValueError):
            small_tau_ratios(0.0, moments(gaussian))

    def test_mixed_rate_prefactor_is_half(self, gaussian):
        tau = 0.01
        counts = [250, 500, 1000]
        ps = [expectation(Protocol("mix", tau, n), gaussian, G)[0] for n in counts]
        rate = fit_rate([n * tau for n in counts], ps)
        assert rate / (G * G * tau**3) == pytest.approx(0.5, rel=1e-3)

    def test_mixed_prefactor_from_explicit_sequences(self, gaussian):
        # no closed form involved: explicit products at tau = 1e-3
        ens = quantile_sample(gaussian, 2000)
        tau = 1e-3
        counts = [500, 1000, 2000]
        ps = [ensemble_evolve(mixed_sequence(tau, n), ens.omegas, G)[1] for n in counts]
        rate = fit_rate([n * tau for n in counts], ps)
        assert rate / (ens.b_sq() * G * G * tau**3) == pytest.approx(0.5, rel=1e-4)

    def test_default_moments_of_ensembles(self, gaussian):
        m = default_moments(quantile_sample(gaussian, 10_000))
        assert m.rho0 == moments(gaussian).rho0
        assert m.b_sq == pytest.approx(1.0, rel=1e-3)
        with pytest.raises(ValueError):
            default_moments(EnsembleSpec.explicit([0.1]))


class TestCrossings:
    def test_linear(self):
        assert find_crossings(lambda x: x - 0.3, [0.0, 1.0], xtol=1e-12) == [pytest.approx(0.3, abs=1e-12)]

    def test_several_roots(self):
        roots = find_crossings(math.sin, np.linspace(0.5, 7.0, 14), xtol=1e-10)
        assert roots == [pytest.approx(math.pi, abs=1e-10), pytest.approx(2 * math.pi, abs=1e-10)]

    def test_no_root(self):
        assert find_crossings(lambda x: 1.0 + x * x, [-1.0, 0.0, 1.0]) == []

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            find_crossings(math.sin, [1.0])
        with pytest.raises(ValueError):
            find_crossings(math.sin, [1.0, 0.5])

    @pytest.mark.parametrize("kind,where", [("gaussian", 0.8998), ("lorentzian", 0.9390), ("exponential", 0.9175)])
    def test_two_pulse_offset_crossing(self, kind, where):
        d = normalize(kind, 2.0)
        found = crossing_scan(("mod", "meas"), d, G, np.linspace(0.05, 3, 60), axis="tau", n_pulses=2)
        assert len(found) == 1
        assert found[0].location == pytest.approx(where, abs=2e-4)

    def test_time_axis_crossover(self, gaussian):
        found = crossing_scan(("mix", "mod"), gaussian, G, np.geomspace(5, 80, 9), axis="t", tau=0.05, xtol=1e-3)
        assert len(found) == 1
        assert found[0].location == pytest.approx(20.03, abs=0.01)
        assert found[0].nearest_even_n == 400

    def test_axis_arguments_required(self, gaussian):
        with pytest.raises(ValueError):
            crossing_scan(("mod", "meas"), gaussian, G, [0.1, 1.0], axis="tau")
        with pytest.raises(ValueError):
            crossing_scan(("mod", "meas"), gaussian, G, [2.0, 4.0], axis="n")
        with pytest.raises(ValueError):
            crossing_scan(("mod", "meas"), gaussian, G, [2.0, 4.0], axis="t")
        with pytest.raises(ValueError):
            crossing_scan(("mod", "meas"), gaussian, G, [2.0, 4.0], axis="omega")


def test_fit_rate_exact_line():
    assert fit_rate([1.0, 2.0, 4.0], [3.0, 6.0, 12.0]) == pytest.approx(3.0)


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(["mod", "meas", "mix"]),
    tau=st.floats(0.01, 3.0),
    half=st.integers(1, 30),
)
def test_ensemble_values_are_probabilities(kind, tau, half):
    ens = quantile_sample(normalize("exponential", 2.0), 256)
    val = expectation(Protocol(kind, tau, 2 * half), ens, 0.05)[0]
    assert 0.0 <= val <= 1.0


@settings(max_examples=40, deadline=None)
@given(tau=st.floats(0.01, 2.0), n=st.integers(1, 40))
def test_measurement_never_beats_the_hard_bound(tau, n):
    # each projection removes at most the single-delay flip
    ens = quantile_sample(normalize("gaussian", 1.0), 256)
    meas = expectation(Protocol("meas", tau, n), ens, 0.01)[0]
    one = expectation(Protocol("meas", tau, 1), ens, 0.01)[0]
    assert meas <= n * one + 1e-15
