"""Unit tests for the Monte-Carlo harness, densities and result files."""
import math
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import ConfigError, DegenerateSampleError, InputError
from app.estimators.service import solve_ols, solve_ro
from app.experiments.models import ExperimentConfig, ExperimentMethod
from app.experiments.repository import ExperimentRepository, load_experiment_config
from app.experiments.service import ExperimentRunner, density_curves, kde, run_experiment, run_trial
from app.problems.models import FixedPoint, ProblemInstance, QuantizationSpec
from app.robust.service import eval_f_fixed
from app.simulate.service import quantize

M = ExperimentMethod

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


class TestExperimentConfig:
    """Test cases for configuration validation."""

    def test_comma_separated_lists(self, make_config):
        """Test list values may be given as strings"""
        cfg = make_config(round_digits="1, 3", methods="ols,ro")
        assert cfg.round_digits == [1, 3]
        assert cfg.methods == [M.OLS, M.RO]

    def test_density_digit_default(self, make_config):
        """Test digit 2 is preferred for densities, else the first digit"""
        assert make_config(round_digits=[1, 2, 3]).density_digit == 2
        assert make_config(round_digits=[4, 1]).density_digit == 4
        assert make_config(round_digits=[1, 2], kde_digit=1).density_digit == 1

    def test_unknown_key(self, make_config):
        """Test unknown keys are rejected"""
        with pytest.raises(ValidationError):
            make_config(colour="blue")

    def test_n_not_below_m(self, make_config):
        """Test experiments need an overdetermined shape"""
        with pytest.raises(ValidationError):
            make_config(m=4, n=4)

    def test_kde_digit_must_be_swept(self, make_config):
        """Test the density digit must be one of the rounding digits"""
        with pytest.raises(ValidationError):
            make_config(round_digits=[1, 2], kde_digit=3)

    def test_duplicate_methods(self, make_config):
        """Test each method may be listed once"""
        with pytest.raises(ValidationError):
            make_config(methods=["RO", "ro"])

    def test_distribution(self, make_config):
        """Test the flat parameters build the solution distribution"""
        cfg = make_config(distribution="spike", spike_magnitude=50.0)
        assert cfg.dist.kind == "spike"
        assert cfg.dist.magnitude == 50.0


class TestLoadConfig:
    """Test cases for reading key=value files."""

    def test_bundled_smoke_config(self):
        """Test the bundled smoke configuration validates"""
        cfg = load_experiment_config(CONFIGS / "cauchy_smoke.env")
        assert cfg.trials == 50
        assert cfg.distribution == "cauchy"

    def test_missing_key(self, tmp_path):
        """Test a missing key is named in the error"""
        path = tmp_path / "bad.env"
        path.write_text("m=30\nn=15\ncond=100\ntrials=5\nround_digits=1\ndistribution=cauchy\nmethods=OLS\nbase_seed=1\n")
        with pytest.raises(ConfigError) as exc_info:
            load_experiment_config(path)
        assert exc_info.value.keys == ["snr"]
        assert "snr" in str(exc_info.value)

    def test_overrides(self):
        """Test command-line overrides replace file values"""
        cfg = load_experiment_config(CONFIGS / "cauchy_smoke.env", {"trials": 1, "base_seed": 7})
        assert (cfg.trials, cfg.base_seed) == (1, 7)

    def test_empty_value(self, tmp_path):
        """Test a key without a value is reported"""
        path = tmp_path / "empty.env"
        path.write_text("m=\n")
        with pytest.raises(ConfigError) as exc_info:
            load_experiment_config(path)
        assert exc_info.value.keys == ["m"]

    def test_missing_file(self, tmp_path):
        """Test a missing file is an input error"""
        with pytest.raises(InputError):
            load_experiment_config(tmp_path / "absent.env")


class TestRunTrial:
    """Test cases for single trials."""

    def test_deterministic(self, make_config):
        """Test the same (seed, trial) gives the same record"""
        cfg = make_config()
        first = run_trial(cfg, 1, 2)
        second = run_trial(cfg, 1, 2)
        for method in cfg.methods:
            a, b = first.outcomes[method], second.outcomes[method]
            assert a.relative_error == b.relative_error
            assert a.failure == b.failure

    def test_records_every_method(self, make_config):
        """Test each configured method has an outcome, in config order"""
        cfg = make_config()
        record = run_trial(cfg, 0, 1)
        assert list(record.outcomes) == cfg.methods
        for outcome in record.outcomes.values():
            if outcome.ok:
                assert outcome.relative_error >= 0
                assert outcome.component_errors.shape == (cfg.n,)

    def test_lambda_shared_by_rr_and_rro(self, make_config):
        """Test RRO reuses the lambda selected for ridge on the same trial"""
        cfg = make_config(methods=["RR_GCV", "RRO_GCV", "RR_MDP", "RRO_MDP"])
        record = run_trial(cfg, 2, 2)
        for rr, rro in ((M.RR_GCV, M.RRO_GCV), (M.RR_MDP, M.RRO_MDP)):
            if record.outcomes[rr].ok:
                assert record.outcomes[rro].lam == record.outcomes[rr].lam

    def test_negligible_quantization(self, make_config):
        """Test RO and OLS agree when rounding is at the twelfth digit"""
        cfg = make_config(methods=["OLS", "RO"], round_digits=[12])
        for trial in range(3):
            record = run_trial(cfg, trial, 12)
            ols = record.outcomes[M.OLS].relative_error
            ro = record.outcomes[M.RO].relative_error
            assert ro == pytest.approx(ols, rel=1e-5)

    def test_robust_solve_minimizes(self, make_config):
        """Test the robust objective reached is no worse than at the OLS solution"""
        cfg = make_config(methods=["RO"], round_digits=[1])
        runner = ExperimentRunner(cfg)
        for trial in range(3):
            data = runner.trial_data(trial)
            spec = QuantizationSpec(round_digit=1)
            p = ProblemInstance(A=quantize(data.A_bar, spec), b=data.observation.b)
            record = runner.run_trial(trial, 1)
            at_ols = eval_f_fixed(p, spec.delta, solve_ols(p).x_hat)
            assert record.outcomes[M.RO].objective_value <= at_ols * (1 + 1e-6)

    def test_spike_sign_adjustment(self, make_config):
        """Test the first component error is multiplied by the spike's sign"""
        cfg = make_config(distribution="spike", methods=["OLS"], round_digits=[2])
        runner = ExperimentRunner(cfg)
        for trial in range(4):
            data = runner.trial_data(trial)
            record = runner.run_trial(trial, 2)
            p = ProblemInstance(A=quantize(data.A_bar, QuantizationSpec(round_digit=2)), b=data.observation.b)
            raw = solve_ols(p).x_hat[0] - data.x_bar[0]
            adjusted = record.outcomes[M.OLS].component_errors[0]
            assert adjusted == pytest.approx(math.copysign(1.0, data.x_bar[0]) * raw)

    def test_failures_are_recorded(self, make_config):
        """Test a method failure is tagged rather than raised"""
        # rounding to tens zeroes every entry of A_bar, whose norm is 1
        cfg = make_config(methods=["TLS", "OLS"], round_digits=[-1])
        record = run_trial(cfg, 0, -1)
        assert record.outcomes[M.TLS].failure == "RankDeficientError"
        assert record.outcomes[M.OLS].failure == "RankDeficientError"
        assert record.outcomes[M.OLS].relative_error is None


class TestRunExperiment:
    """Test cases for full experiment runs."""

    def test_single_trial_summary(self, make_config):
        """Test one trial reduces to its own errors with undefined SEM"""
        cfg = make_config(trials=1, round_digits=[2], methods=["OLS", "RO"])
        result = run_experiment(cfg)
        record = run_trial(cfg, 0, 2)
        for method in cfg.methods:
            row = result.row(2, method)
            assert row.mean_rel_error == record.outcomes[method].relative_error
            assert math.isnan(row.sem)
            assert (row.failures, row.trials) == (0, 1)

    def test_summary_order(self, make_config):
        """Test rows follow the configured digit and method order"""
        cfg = make_config(trials=2, round_digits=[3, 1], methods=["RO", "OLS"])
        result = run_experiment(cfg)
        assert [(r.round_digit, r.method) for r in result.summary] == [
            (3, M.RO), (3, M.OLS), (1, M.RO), (1, M.OLS)
        ]

    def test_sem(self, make_config):
        """Test the SEM uses the sample standard deviation"""
        cfg = make_config(trials=4, round_digits=[2], methods=["OLS"])
        result = run_experiment(cfg)
        errors = [r.outcomes[M.OLS].relative_error for r in result.records]
        row = result.row(2, M.OLS)
        assert row.mean_rel_error == pytest.approx(np.mean(errors))
        assert row.sem == pytest.approx(np.std(errors, ddof=1) / 2.0)

    def test_thread_count_invariance(self, make_config):
        """Test results do not depend on the worker pool size"""
        cfg = make_config(trials=4, methods=["OLS", "RO", "RR_GCV"])
        serial = run_experiment(cfg, threads=1)
        parallel = run_experiment(cfg, threads=3)
        assert serial.summary == parallel.summary
        assert [(r.trial_index, r.round_digit) for r in serial.records] == [
            (r.trial_index, r.round_digit) for r in parallel.records
        ]

    def test_invalid_threads(self, make_config):
        """Test zero threads is rejected"""
        with pytest.raises(InputError):
            run_experiment(make_config(trials=1), threads=0)

    def test_scale_invariance(self, make_planted):
        """Test scaling b and x_bar by 10 leaves OLS and RO relative errors unchanged"""
        base, x_bar = make_planted(m=20, n=5, seed=11)
        errors = []
        for scale in (1.0, 10.0):
            p = ProblemInstance(A=base.A, b=scale * base.b)
            x_ols = solve_ols(p).x_hat
            x_ro = solve_ro(p, FixedPoint(delta=0.01), tol=1e-12).x_hat
            target = scale * x_bar
            errors.append((
                np.linalg.norm(x_ols - target) / np.linalg.norm(target),
                np.linalg.norm(x_ro - target) / np.linalg.norm(target),
            ))
        np.testing.assert_allclose(errors[0], errors[1], rtol=1e-6)

    def test_heavy_quantization_favours_robust(self, make_config):
        """Test RO beats OLS on average when rounding to one decimal place"""
        cfg = make_config(m=30, n=15, cond=100.0, trials=40, round_digits=[1], methods=["OLS", "RO"], base_seed=3)
        result = run_experiment(cfg)
        assert result.row(1, M.RO).mean_rel_error < result.row(1, M.OLS).mean_rel_error


class TestKde:
    """Test cases for the kernel density estimate."""

    def test_standard_normal(self, rng):
        """Test the density at zero and the total mass"""
        curve = kde(rng.standard_normal(10000), 512)
        at_zero = float(np.interp(0.0, curve.grid, curve.density))
        assert at_zero == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=0.1)
        assert curve.integral() == pytest.approx(1.0, abs=0.03)

    def test_mode_location(self, rng):
        """Test a tight cluster has its mode at the cluster"""
        curve = kde(1e-6 * rng.standard_normal(200), 256)
        assert abs(curve.mode) <= 5e-6

    def test_bandwidth_rule(self, rng):
        """Test the default bandwidth is the normal-reference rule"""
        samples = rng.standard_normal(500)
        curve = kde(samples, 64)
        assert curve.bandwidth == pytest.approx(1.06 * np.std(samples, ddof=1) * 500 ** -0.2)
        assert curve.grid[0] == pytest.approx(samples.min() - 4 * curve.bandwidth)

    def test_unit_mass_with_wide_padding(self, rng):
        """Test the trapezoid mass is within 3% of one on a grid padded by six bandwidths"""
        sample_sets = [
            rng.standard_normal(300),
            np.concatenate([rng.standard_normal(200) - 5.0, rng.standard_normal(200) + 5.0]),
            rng.exponential(size=300),
        ]
        for samples in sample_sets:
            curve = kde(samples, 2048, padding=6.0)
            assert curve.grid[-1] == pytest.approx(samples.max() + 6.0 * curve.bandwidth)
            assert 0.97 <= curve.integral() <= 1.03
        with pytest.raises(InputError):
            kde(sample_sets[0], 32, padding=0.0)

    def test_degenerate(self):
        """Test constant or single samples are rejected"""
        with pytest.raises(DegenerateSampleError):
            kde([1.0, 1.0, 1.0])
        with pytest.raises(DegenerateSampleError):
            kde([1.0])

    def test_explicit_bandwidth(self, rng):
        """Test an explicit bandwidth is used as given"""
        assert kde(rng.standard_normal(50), 32, bandwidth=0.3).bandwidth == 0.3
        with pytest.raises(InputError):
            kde(rng.standard_normal(50), 32, bandwidth=0.0)


class TestDensityCurves:
    """Test cases for per-method density curves."""

    def test_spike_classes(self, make_config):
        """Test spike experiments split large and rest components"""
        cfg = make_config(distribution="spike", trials=5, round_digits=[2], methods=["OLS", "RO"], kde_grid_points=32)
        curves = density_curves(run_experiment(cfg), cfg)
        assert [(c.method, c.component_class) for c in curves] == [
            (M.OLS, "large"), (M.OLS, "rest"), (M.RO, "large"), (M.RO, "rest")
        ]
        assert all(c.curve.grid.size == 32 for c in curves)

    def test_cauchy_pools_components(self, make_config):
        """Test Cauchy experiments produce one pooled curve per method"""
        cfg = make_config(trials=3, round_digits=[2], methods=["OLS"], kde_grid_points=16)
        curves = density_curves(run_experiment(cfg), cfg)
        assert [(c.method, c.component_class) for c in curves] == [(M.OLS, "all")]

    def test_single_trial_spike_is_skipped(self, make_config):
        """Test one sample cannot give a large-component density"""
        cfg = make_config(distribution="spike", trials=1, round_digits=[2], methods=["OLS"], kde_grid_points=16)
        curves = density_curves(run_experiment(cfg), cfg)
        assert [c.component_class for c in curves] == ["rest"]


class TestRepository:
    """Test cases for CSV outputs."""

    def test_files_and_headers(self, make_config, tmp_path):
        """Test the three files and their headers"""
        cfg = make_config(trials=2, round_digits=[2], methods=["OLS", "RO"], kde_grid_points=8)
        result = run_experiment(cfg)
        repository = ExperimentRepository(tmp_path / "out")
        results = repository.save_summary(result.summary)
        density = repository.save_densities(density_curves(result, cfg))
        trials = repository.save_trials(result.records)

        assert results.read_text().splitlines()[0] == "round_digit,method,mean_rel_error,sem,failures,trials"
        assert density.read_text().splitlines()[0] == "method,component_class,grid,density"
        assert trials.read_text().splitlines()[0] == (
            "trial_index,round_digit,method,relative_error,lambda,objective_value,iterations,failure,component_errors"
        )
        assert len(results.read_text().splitlines()) == 3
        assert len(density.read_text().splitlines()) == 1 + 2 * 8
        assert len(trials.read_text().splitlines()) == 1 + 2 * 2
        assert b"\r\n" not in results.read_bytes()

    def test_full_precision(self, make_config, tmp_path):
        """Test mean errors are written with 17 significant digits"""
        cfg = make_config(trials=2, round_digits=[2], methods=["OLS"])
        result = run_experiment(cfg)
        path = ExperimentRepository(tmp_path).save_summary(result.summary)
        written = float(path.read_text().splitlines()[1].split(",")[2])
        assert written == result.summary[0].mean_rel_error

    def test_byte_identical_reruns(self, make_config, tmp_path):
        """Test two runs of one configuration write identical bytes"""
        cfg = make_config(trials=2, round_digits=[1, 2], methods=["OLS", "RR_MDP", "RO"], kde_grid_points=16)
        outputs = []
        for name, threads in (("a", 1), ("b", 2)):
            result = run_experiment(cfg, threads=threads)
            repository = ExperimentRepository(tmp_path / name)
            outputs.append((
                repository.save_summary(result.summary).read_bytes(),
                repository.save_densities(density_curves(result, cfg)).read_bytes(),
                repository.save_trials(result.records).read_bytes(),
            ))
        assert outputs[0] == outputs[1]


def test_config_factory_is_valid(make_config):
    """Test the shared test configuration validates"""
    assert isinstance(make_config(), ExperimentConfig)


@pytest.mark.slow
class TestDeskStudies:
    """Test cases for the bundled desk-sized studies."""

    @pytest.mark.parametrize("base_seed", [20240101, 20240102, 20240103])
    def test_cauchy_ordering(self, base_seed):
        """Test RO beats OLS and TLS at digits 1 and 2 and matches OLS at digit 6"""
        cfg = load_experiment_config(
            CONFIGS / "cauchy_desk.env", {"base_seed": base_seed, "methods": "OLS,TLS,RO"}
        )
        result = run_experiment(cfg, threads=4)
        for digit in (1, 2):
            ro = result.row(digit, M.RO).mean_rel_error
            assert ro < result.row(digit, M.OLS).mean_rel_error
            assert ro < result.row(digit, M.TLS).mean_rel_error
        ro, ols = result.row(6, M.RO).mean_rel_error, result.row(6, M.OLS).mean_rel_error
        assert abs(ro - ols) < 0.05 * ols

    def test_spike_bias(self):
        """Test ridge with MDP shrinks the spike while RO stays unbiased and no noisier than OLS"""
        cfg = load_experiment_config(CONFIGS / "spike_desk.env")
        result = run_experiment(cfg, threads=4)

        def errors(method: ExperimentMethod) -> np.ndarray:
            rows = [r.outcomes[method].component_errors for r in result.records if r.outcomes[method].ok]
            return np.array(rows)

        assert float(np.mean(errors(M.RR_MDP)[:, 0])) < -5.0
        assert -5.0 < float(np.mean(errors(M.RO)[:, 0])) < 5.0
        assert np.std(errors(M.RO)[:, 1:]) <= np.std(errors(M.OLS)[:, 1:])
