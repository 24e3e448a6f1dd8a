"""Sweep engine: exponent fits, verdict rules, the three experiments."""

import math

import numpy as np
import pytest

from gradedheat.config import (
    SweepConfig,
    config_hash,
    parse_sweep_config,
    with_threads,
)
from gradedheat.errors import ConfigError
from gradedheat.harness import (
    FitResult,
    SweepRecord,
    SweepReport,
    Verdict,
    check_moderate,
    check_negligible,
    consistency_experiment,
    existence_experiment,
    fit_exponent,
    persist_report,
    run_experiment,
    uniqueness_experiment,
)
from gradedheat.mollify import EpsilonNet, OmegaSchedule, PotentialSpec, bump_field, omega
from gradedheat.groups import euclidean, heisenberg1, make_grid

POLY = OmegaSchedule.polynomial()


def planted_pairs(slope, count=6, scale=3.0):
    omegas = [0.5 * 2.0**-k for k in range(count)]
    return [(w, scale * w**-slope) for w in omegas]


class TestFitExponent:
    @pytest.mark.parametrize("slope", [0.0, 1.0, 2.0, 3.5, 6.0, -2.0])
    def test_recovers_planted_slope(self, slope):
        fit = fit_exponent(planted_pairs(slope))
        assert fit.exponent == pytest.approx(slope, abs=1e-9)
        assert fit.stderr < 1e-9

    def test_noise_tolerance(self):
        # 1 percent multiplicative noise moves the slope well under 5 percent
        rng = np.random.default_rng(7)
        for _ in range(20):
            pairs = [(w, v * (1.0 + 0.01 * rng.standard_normal()))
                     for w, v in planted_pairs(4.0, count=8)]
            fit = fit_exponent(pairs)
            assert abs(fit.exponent - 4.0) < 0.2
            assert fit.stderr < 0.2

    def test_exponential_decay_reads_very_negative(self):
        # e^{-1/eps} along a dyadic net is steeper than any polynomial order
        eps = [2.0**-k for k in range(2, 8)]
        pairs = [(e, math.exp(-1.0 / e)) for e in eps]
        fit = fit_exponent(pairs)
        assert fit.exponent < -20.0

    def test_needs_four_points(self):
        with pytest.raises(ValueError, match="4 points"):
            fit_exponent(planted_pairs(1.0, count=3))

    def test_rejects_nonpositive_values(self):
        pairs = planted_pairs(1.0)
        pairs[2] = (pairs[2][0], 0.0)
        with pytest.raises(ValueError, match="positive"):
            fit_exponent(pairs)

    def test_rejects_increasing_omega(self):
        pairs = list(reversed(planted_pairs(1.0)))
        with pytest.raises(ValueError, match="decreasing"):
            fit_exponent(pairs)


class TestVerdicts:
    def test_moderate_within_bound(self):
        v = check_moderate(FitResult(2.3, 0.01), n_max=3)
        assert v.kind == "Moderate" and v.passed
        assert str(v) == "Moderate(N=2.3)"

    def test_moderate_uses_stderr_slack(self):
        assert check_moderate(FitResult(3.2, 0.1), n_max=3).kind == "Moderate"
        assert check_moderate(FitResult(3.5, 0.1), n_max=3).kind == "Fail"

    def test_fail_reason_mentions_bound(self):
        v = check_moderate(FitResult(8.0, 0.0), n_max=2)
        assert not v.passed
        assert "N_max = 2" in str(v)

    def test_negligible_all_zero(self):
        pairs = [(0.5 * 2.0**-k, 0.0) for k in range(5)]
        assert check_negligible(pairs, k_max=10).kind == "Negligible"

    def test_negligible_scattered_zeros(self):
        # under 4 positive points the zero rows carry the verdict
        pairs = [(0.5, 1e-3), (0.25, 0.0), (0.125, 1e-9), (0.0625, 0.0), (0.03125, 0.0)]
        assert check_negligible(pairs, k_max=10).kind == "Negligible"

    def test_negligible_exponential(self):
        eps = [2.0**-k for k in range(2, 8)]
        pairs = [(e, math.exp(-1.0 / e)) for e in eps]
        v = check_negligible(pairs, k_max=10)
        assert v.kind == "Negligible"
        assert v.exponent < -20.0

    def test_slow_decay_fails(self):
        pairs = planted_pairs(-1.0)  # value ~ omega^1
        v = check_negligible(pairs, k_max=10)
        assert v.kind == "Fail"
        assert "k_max" in str(v)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="verdict kind"):
            Verdict("Maybe")

    def test_negative_values_rejected(self):
        pairs = planted_pairs(1.0)
        pairs[1] = (pairs[1][0], -1.0)
        with pytest.raises(ValueError, match="negative"):
            check_negligible(pairs, k_max=10)


def make_config(**overrides):
    base = dict(
        group=euclidean(1),
        half_width=1.0,
        points=(128,),
        potential=PotentialSpec.dirac_delta(),
        potential_token="delta",
        schedule=POLY,
        epsilons=EpsilonNet.dyadic(0.5, 5),
        T=0.5,
        dt=1.0 / 64,
        experiment="existence",
        norm="hnu2",
        mollifier_radius=1.5,
    )
    base.update(overrides)
    return SweepConfig(**base)


class TestExistence:
    def test_zero_potential_is_flat(self):
        cfg = make_config(potential=PotentialSpec.constant(0.0),
                          potential_token="constant:0")
        rep = existence_experiment(cfg)
        assert rep.verdict.kind == "Moderate"
        # only the datum is mollified; the solution net barely moves
        assert abs(rep.fit.exponent) < 0.25

    def test_delta_potential_moderate(self):
        rep = existence_experiment(make_config())
        assert rep.verdict.kind == "Moderate"
        assert rep.fit.exponent <= rep.config.n_max
        # the measured growth never exceeds what the a-priori bracket allows
        majorant = rep.extra_fit("majorant")
        assert rep.fit.exponent <= 1.1 * majorant.exponent + 0.05
        # ||V_eps||_inf grows like omega^{-Q} with Q = 1 here
        v_fit = rep.extra_fit("v_linf")
        assert v_fit.exponent == pytest.approx(1.0, abs=0.05)

    # log omega shrinks slowly: start the net below 1/8 so rho * omega(eps)
    # stays inside the unit box
    LOG_NET = EpsilonNet((0.125, 0.0625, 0.03125, 0.015625, 0.0078125))

    def test_schedule_split_records_both_exponents(self):
        # negative delta well measured under log omega, fitted under poly:
        # the potential net is log-moderate while the solution stays bounded
        cfg = make_config(potential=PotentialSpec.dirac_delta(multiplier=-1.0),
                          potential_token="delta:-1",
                          schedule_v=OmegaSchedule.logarithmic(1),
                          norm="l2", epsilons=self.LOG_NET)
        rep = existence_experiment(cfg)
        assert rep.verdict.kind == "Moderate"
        against_fit = rep.extra_fit("v_linf")
        against_v = rep.extra_fit("v_linf_vs_v_schedule")
        # same values, different abscissa: Q against its own schedule,
        # log-flat against the polynomial one
        assert against_v.exponent == pytest.approx(1.0, abs=0.05)
        assert against_fit.exponent < 0.5

    def test_real_potential_h_norm_still_moderate(self):
        cfg = make_config(potential=PotentialSpec.dirac_delta(multiplier=-1.0),
                          potential_token="delta:-1",
                          schedule_v=OmegaSchedule.logarithmic(1),
                          norm="l2", epsilons=self.LOG_NET)
        rep = existence_experiment(cfg)
        h_fit = rep.extra_fit("sup_hnu2")
        assert check_moderate(h_fit, rep.config.n_max).kind == "Moderate"

    def test_wrong_experiment_rejected(self):
        cfg = make_config(experiment="uniqueness")
        with pytest.raises(ValueError, match="existence"):
            existence_experiment(cfg)

    def test_worker_failure_becomes_fail_verdict(self):
        # net reaches eps the 128-point grid cannot resolve
        cfg = make_config(epsilons=EpsilonNet.dyadic(0.5, 7))
        rep = existence_experiment(cfg)
        assert rep.verdict.kind == "Fail"
        assert "ResolutionError" in rep.verdict.reason
        assert 0 < len(rep.records) < 7
        assert not any(r.fitted_flag for r in rep.records)


class TestUniqueness:
    def test_no_perturbation_is_negligible(self):
        cfg = make_config(experiment="uniqueness", perturbation="none", norm="l2",
                          potential=PotentialSpec.dirac_delta_squared(),
                          potential_token="delta2")
        rep = uniqueness_experiment(cfg)
        assert rep.verdict.kind == "Negligible"
        assert all(r.norm_sup_t == 0.0 for r in rep.records)

    def test_exponential_perturbation_negligible(self):
        cfg = make_config(experiment="uniqueness", norm="l2",
                          potential=PotentialSpec.dirac_delta_squared(),
                          potential_token="delta2")
        rep = uniqueness_experiment(cfg)
        assert rep.verdict.kind == "Negligible"
        # differences track the perturbation size order of magnitude
        sizes = [dict(r.extras)["perturbation_size"] for r in rep.records]
        for r, s in zip(rep.records, sizes):
            if r.norm_sup_t > 0:
                assert r.norm_sup_t < 10.0 * s

    def test_exponential_perturbation_heisenberg(self):
        cfg = make_config(group=heisenberg1(), half_width=1.5, points=(8, 8, 8),
                          potential=PotentialSpec.constant(1.0),
                          potential_token="constant:1",
                          experiment="uniqueness", norm="l2", dt=1.0 / 32)
        rep = uniqueness_experiment(cfg)
        assert rep.verdict.kind == "Negligible"

    def test_omega_perturbation_is_not_negligible(self):
        # the negative control: an omega(eps)-sized perturbation only decays
        # at first order, far from the k_max = 10 requirement
        cfg = make_config(experiment="uniqueness", perturbation="omega1", norm="l2",
                          potential=PotentialSpec.dirac_delta_squared(),
                          potential_token="delta2")
        rep = uniqueness_experiment(cfg)
        assert rep.verdict.kind == "Fail"
        assert rep.fit.exponent == pytest.approx(-1.0, abs=0.3)


def bump_potential_config(**overrides):
    grid = make_grid(euclidean(1), 1.0, 128)
    v = bump_field(grid, 0.6, 0.8)
    base = dict(
        group=euclidean(1),
        half_width=1.0,
        points=(128,),
        potential=PotentialSpec.sampled(v),
        potential_token="sampled:test-bump",
        schedule=POLY,
        epsilons=EpsilonNet((1.0, 0.5, 0.25, 0.125, 0.0625)),
        T=0.5,
        dt=1.0 / 64,
        experiment="consistency",
        norm="l2",
    )
    base.update(overrides)
    return SweepConfig(**base)


class TestConsistency:
    def test_mollified_solutions_converge(self):
        rep = consistency_experiment(bump_potential_config())
        assert rep.verdict.kind == "Moderate"
        errors = [r.norm_sup_t for r in rep.records]
        assert all(b < a for a, b in zip(errors, errors[1:]))
        assert errors[-1] < 0.1 * errors[0]
        # a passing run reports the fitted slope of the error net (negative)
        assert rep.verdict.exponent < 0
        assert rep.fit.exponent == rep.verdict.exponent

    def test_potential_error_decays_at_least_first_order(self):
        rep = consistency_experiment(bump_potential_config())
        v_fit = rep.extra_fit("v_error_linf")
        assert v_fit.exponent <= -1.0

    def test_delta_potential_rejected(self):
        cfg = make_config(experiment="consistency")
        with pytest.raises(ValueError, match="classical"):
            consistency_experiment(cfg)

    def test_constant_potential_converges_via_datum(self):
        cfg = bump_potential_config(potential=PotentialSpec.constant(1.0),
                                    potential_token="constant:1")
        rep = consistency_experiment(cfg)
        assert rep.verdict.kind == "Moderate"


class TestRunParallelDeterminism:
    def test_thread_count_does_not_change_report(self, tmp_path):
        cfg = make_config()
        rep1 = run_experiment(with_threads(cfg, 1))
        rep4 = run_experiment(with_threads(cfg, 4))
        d1 = tmp_path / "t1"
        d4 = tmp_path / "t4"
        csv1, _ = persist_report(rep1, d1)
        csv4, _ = persist_report(rep4, d4)
        assert csv1.read_bytes() == csv4.read_bytes()
        assert config_hash(rep1.config) == config_hash(rep4.config)

    def test_dispatch_table(self):
        cfg = make_config()
        rep = run_experiment(cfg)
        assert rep.config.experiment == "existence"
        assert rep.verdict.kind == "Moderate"


class TestPersistReport:
    def test_empty_report_refuses_to_write(self, tmp_path):
        cfg = make_config()
        report = SweepReport(config=cfg, records=(), fit=None,
                             verdict=Verdict("Fail", reason="nothing ran"))
        with pytest.raises(ValueError, match="no epsilon records"):
            persist_report(report, tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_csv_and_manifest_shape(self, tmp_path):
        cfg = make_config()
        report = SweepReport(
            config=cfg,
            records=(SweepRecord(0.5, 0.5, 1.25, True),),
            fit=FitResult(0.3, 0.01),
            verdict=Verdict("Moderate", exponent=0.3),
        )
        csv_path, manifest_path = persist_report(report, tmp_path)
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "epsilon,omega,norm_sup_t,fitted_flag"
        assert lines[1] == "0.5,0.5,1.25,1"
        assert len(lines) == 2
        manifest = manifest_path.read_text()
        assert f"config_hash: {config_hash(cfg)}" in manifest
        assert "VERDICT: Moderate(N=0.3)" in manifest
        assert "scope_note" in manifest

    def test_manifest_carries_extra_fits(self, tmp_path):
        rep = consistency_experiment(bump_potential_config())
        _, manifest_path = persist_report(rep, tmp_path)
        assert "extra_fit_v_error_linf" in manifest_path.read_text()


CONFIG_TEXT = """
# sweep over a point-mass potential
group = euclidean1
half_width = 1.0
points = 128
potential = delta
mollifier_radius = 1.5
schedule = poly
epsilons = 0.5,0.25,0.125,0.0625,0.03125
T = 0.5
dt = 0.015625
experiment = existence
"""


class TestConfigRoundTrip:
    def test_parse_and_run(self):
        cfg = parse_sweep_config(CONFIG_TEXT)
        assert cfg.experiment == "existence"
        assert cfg.norm == "hnu2"  # nonneg potential defaults to the H norm
        rep = run_experiment(cfg)
        assert rep.verdict.kind == "Moderate"

    def test_hash_ignores_formatting(self):
        reordered = "\n".join(reversed(CONFIG_TEXT.strip().splitlines()))
        spaced = CONFIG_TEXT.replace(" = ", "   =  ")
        h0 = config_hash(parse_sweep_config(CONFIG_TEXT))
        assert config_hash(parse_sweep_config(reordered)) == h0
        assert config_hash(parse_sweep_config(spaced)) == h0

    def test_hash_ignores_threads(self):
        cfg = parse_sweep_config(CONFIG_TEXT)
        assert config_hash(with_threads(cfg, 8)) == config_hash(cfg)

    def test_hash_changes_with_potential(self):
        other = CONFIG_TEXT.replace("potential = delta", "potential = delta2")
        assert config_hash(parse_sweep_config(other)) != config_hash(
            parse_sweep_config(CONFIG_TEXT))

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_sweep_config(CONFIG_TEXT + "\nwibble = 3\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_sweep_config(CONFIG_TEXT + "\nT = 0.25\n")

    def test_experiment_conflict_rejected(self):
        with pytest.raises(ConfigError, match="experiment"):
            parse_sweep_config(CONFIG_TEXT, experiment="uniqueness")

    def test_experiment_flag_supplies_missing_key(self):
        text = CONFIG_TEXT.replace("experiment = existence\n", "")
        cfg = parse_sweep_config(text, experiment="uniqueness")
        assert cfg.experiment == "uniqueness"

    def test_sampled_potential_from_file(self, tmp_path):
        grid = make_grid(euclidean(1), 1.0, 128)
        np.save(tmp_path / "v.npy", bump_field(grid, 0.6).values)
        text = CONFIG_TEXT.replace("potential = delta",
                                   "potential = sampled:v.npy")
        text = text.replace("experiment = existence", "experiment = consistency")
        cfg = parse_sweep_config(text, base_dir=tmp_path)
        assert cfg.potential.kind == "sampled"
        assert cfg.norm == "hnu2"

    def test_sampled_potential_shape_must_match(self, tmp_path):
        np.save(tmp_path / "bad.npy", np.zeros(64))
        text = CONFIG_TEXT.replace("potential = delta", "potential = sampled:bad.npy")
        with pytest.raises(ConfigError, match="shape"):
            parse_sweep_config(text, base_dir=tmp_path)

    def test_negative_delta_multiplier_is_real(self):
        text = CONFIG_TEXT.replace("potential = delta", "potential = delta:-1")
        cfg = parse_sweep_config(text)
        assert cfg.potential.sign_class == "real"
        assert cfg.norm == "l2"
