"""Config loading, result serialization, runners, and the CLI.

The component-Gram fast path used by the sweep runners is checked
against direct per-SNR covariance estimation on independently
synthesized streams; file outputs are checked for byte-level
reproducibility.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from mpb_lab import cli
from mpb_lab.core import covariances_from_arrays, make_basis, project_stream
from mpb_lab.harness import (
    ConfigError,
    ExperimentResult,
    ExperimentSpec,
    component_grams,
    default_spec,
    load_config,
    run_convergence,
    run_eigencurve,
    run_identical_delay,
    run_pattern,
    run_preset,
    run_threshold_sweep,
    run_tracking,
    scenario_hash,
    write_result,
)
from mpb_lab.presets import five_tones_scenario
from mpb_lab.scenario import generate_gold_codes, synthesize


def write_config(tmp_path, text, name="experiment.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestDefaultSpec:
    def test_known_presets_resolve(self):
        spec = default_spec("threshold_sweep")
        assert spec.preset == "threshold_sweep"
        assert spec.symbols == 20000
        assert spec.trials == 4
        assert spec.snr_grid_db[0] == -20.0
        assert spec.snr_grid_db[-1] == 48.0
        assert spec.schemes == ["MIC", "Maximin", "PAPC"]

    def test_unknown_preset_rejected(self):
        with pytest.raises(ConfigError, match="preset"):
            default_spec("warp_drive")

    def test_spec_validation_catches_bad_fields(self):
        spec = default_spec("threshold_sweep")
        spec.trials = 0
        with pytest.raises(ConfigError, match="trials"):
            spec.validate()
        spec = default_spec("threshold_sweep")
        spec.schemes = ["MIC", "FFT"]
        with pytest.raises(ConfigError, match="scheme"):
            spec.validate()
        spec = default_spec("threshold_sweep")
        spec.snr_grid_db = [10.0, 0.0]
        with pytest.raises(ConfigError, match="ascending"):
            spec.validate()


class TestLoadConfig:
    def test_minimal_file_gets_preset_defaults(self, tmp_path):
        spec = load_config(write_config(tmp_path, "preset: eigencurve\n"))
        assert spec.preset == "eigencurve"
        assert spec.schemes == ["MIC"]
        assert spec.trials == 2
        assert spec.inr_list_db == [10.0]

    def test_overrides_win_over_defaults(self, tmp_path):
        text = (
            "preset: threshold_sweep\n"
            "seed: 99\n"
            "symbols: 500\n"
            "trials: 2\n"
            "schemes: [MIC]\n"
            "scenarios: [five_tones]\n"
            "inr_list_db: [10]\n"
            "snr_grid_db: [-10, 0, 10]\n"
            "output_dir: out\n"
        )
        spec = load_config(write_config(tmp_path, text))
        assert spec.seed == 99
        assert spec.symbols == 500
        assert spec.trials == 2
        assert spec.schemes == ["MIC"]
        assert spec.scenario_names == ["five_tones"]
        assert spec.snr_grid_db == [-10.0, 0.0, 10.0]
        assert spec.output_dir == "out"

    def test_grid_range_form(self, tmp_path):
        text = (
            "preset: threshold_sweep\n"
            "snr_grid_db: {start: -4, stop: 4, step: 2}\n"
        )
        spec = load_config(write_config(tmp_path, text))
        assert spec.snr_grid_db == [-4.0, -2.0, 0.0, 2.0, 4.0]

    def test_grid_range_must_ascend(self, tmp_path):
        text = (
            "preset: threshold_sweep\n"
            "snr_grid_db: {start: 4, stop: -4, step: 2}\n"
        )
        with pytest.raises(ConfigError, match="ascend"):
            load_config(write_config(tmp_path, text))

    def test_unknown_top_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(
                write_config(tmp_path, "preset: pattern\nwarp: 9\n")
            )

    def test_missing_preset_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="preset"):
            load_config(write_config(tmp_path, "seed: 5\n"))

    def test_duplicate_key_reports_line(self, tmp_path):
        text = "preset: pattern\nseed: 1\nseed: 2\n"
        with pytest.raises(ConfigError, match="line 3"):
            load_config(write_config(tmp_path, text))

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.yaml")

    def test_custom_scenario_section(self, tmp_path):
        text = (
            "preset: threshold_sweep\n"
            "symbols: 400\n"
            "scenario:\n"
            "  num_elements: 6\n"
            "  snr_db: 3\n"
            "  desired:\n"
            "    - {doa_deg: 5, delay_chips: 2}\n"
            "  mais:\n"
            "    - {user_index: 2, doa_deg: -20, inr_db: 10}\n"
            "  jammers:\n"
            "    - {kind: tone, doa_deg: 40, inr_db: 20, tone_offset_hz: 1e5}\n"
        )
        spec = load_config(write_config(tmp_path, text))
        scenario = spec.scenario
        assert scenario is not None
        assert scenario.geometry.num_elements == 6
        assert scenario.num_symbols == 400
        assert scenario.desired[0].delay_chips == 2
        assert scenario.mais[0].power == pytest.approx(10.0)
        assert scenario.jammers[0].tone_offset_hz == pytest.approx(1e5)

    def test_interferer_power_and_inr_exclusive(self, tmp_path):
        text = (
            "preset: threshold_sweep\n"
            "scenario:\n"
            "  mais:\n"
            "    - {user_index: 2, doa_deg: -20, inr_db: 10, power: 3}\n"
        )
        with pytest.raises(ConfigError, match="exactly one"):
            load_config(write_config(tmp_path, text))

    def test_scenario_validation_failures_surface(self, tmp_path):
        text = (
            "preset: threshold_sweep\n"
            "scenario:\n"
            "  num_elements: 1\n"
        )
        with pytest.raises(ConfigError, match="scenario"):
            load_config(write_config(tmp_path, text))


class TestScenarioHash:
    def test_stable_across_calls(self):
        config = five_tones_scenario(10.0, snr_db=0.0, num_symbols=100, seed=1)
        assert scenario_hash(config) == scenario_hash(config)
        assert len(scenario_hash(config)) == 12

    def test_sensitive_to_any_field(self):
        base = five_tones_scenario(10.0, snr_db=0.0, num_symbols=100, seed=1)
        assert scenario_hash(base) != scenario_hash(replace(base, snr_db=1.0))
        assert scenario_hash(base) != scenario_hash(replace(base, seed=2))
        assert scenario_hash(base) != scenario_hash(
            replace(base, num_symbols=101)
        )


class TestGramFastPath:
    @pytest.mark.parametrize("scheme", ["MIC", "Maximin", "PAPC"])
    def test_matches_direct_estimation_across_snr(self, scheme):
        # the sweep runners assemble per-SNR covariances algebraically
        # from component Grams; this must equal estimating from a stream
        # synthesized at that SNR with the same seed
        code = generate_gold_codes(1)[0]
        basis = make_basis(scheme, code, monitor_freq=0.5, chip_index=0)
        reference = five_tones_scenario(10.0, snr_db=0.0, num_symbols=400,
                                        seed=(77, 0, 0))
        grams = component_grams(synthesize(reference), basis, 0)
        for snr_db in (-10.0, 0.0, 12.0):
            alpha = 10.0 ** (snr_db / 20.0)
            fast = grams.covariance_pair(alpha)
            direct_stream = synthesize(replace(reference, snr_db=snr_db))
            x_s, x_i = project_stream(direct_stream.samples, basis, 0)
            direct = covariances_from_arrays(x_s, x_i)
            np.testing.assert_allclose(fast.r_s, direct.r_s, rtol=1e-10,
                                       atol=1e-12)
            np.testing.assert_allclose(fast.r_i, direct.r_i, rtol=1e-10,
                                       atol=1e-12)

    def test_sinr_covariances_match_component_streams(self):
        code = generate_gold_codes(1)[0]
        basis = make_basis("MIC", code)
        reference = five_tones_scenario(10.0, snr_db=0.0, num_symbols=300,
                                        seed=(78, 0, 0))
        grams = component_grams(synthesize(reference), basis, 0)
        snr_db = 6.0
        alpha = 10.0 ** (snr_db / 20.0)
        soi_cov, int_cov, noise_cov = grams.sinr_covariances(alpha)
        stream = synthesize(replace(reference, snr_db=snr_db))
        for cov, component in ((soi_cov, stream.soi),
                               (int_cov, stream.interference),
                               (noise_cov, stream.noise)):
            x_s, _ = project_stream(component, basis, 0)
            direct = (x_s @ x_s.conj().T) / x_s.shape[1]
            np.testing.assert_allclose(cov, direct, rtol=1e-10, atol=1e-12)


def tiny_sweep_spec(**overrides):
    spec = default_spec("threshold_sweep")
    spec.symbols = 400
    spec.trials = 2
    spec.schemes = ["MIC"]
    spec.scenario_names = ["five_tones"]
    spec.inr_list_db = [10.0]
    spec.snr_grid_db = [-10.0, 0.0, 10.0]
    for key, value in overrides.items():
        setattr(spec, key, value)
    return spec


class TestRunners:
    def test_threshold_sweep_rows_and_traceability(self):
        spec = tiny_sweep_spec()
        result = run_threshold_sweep(spec)
        assert len(result.rows) == 3  # one row per grid point
        row = result.rows[0]
        expected_hash = scenario_hash(
            five_tones_scenario(10.0, snr_db=0.0, num_symbols=spec.symbols,
                                seed=spec.seed)
        )
        assert row["scenario_hash"] == expected_hash
        assert row["scenario"] == "five_tones"
        assert row["scheme"] == "MIC"
        assert row["beta"] <= 1e-12
        assert len(result.thresholds) == 1

    def test_preset_mismatch_rejected(self):
        spec = tiny_sweep_spec()
        with pytest.raises(ConfigError, match="preset"):
            run_eigencurve(spec)
        with pytest.raises(ConfigError, match="preset"):
            run_pattern(spec)

    def test_run_preset_dispatch(self):
        result = run_preset(tiny_sweep_spec())
        assert result.preset == "threshold_sweep"

    def test_deterministic_rows(self):
        first = run_threshold_sweep(tiny_sweep_spec())
        second = run_threshold_sweep(tiny_sweep_spec())
        assert first.rows == second.rows

    def test_eigencurve_smoke(self):
        spec = default_spec("eigencurve")
        spec.symbols = 400
        spec.trials = 1
        spec.snr_grid_db = [-10.0, 0.0, 10.0]
        result = run_eigencurve(spec)
        assert len(result.rows) == 3
        for row in result.rows:
            assert row["lambda1"] >= row["lambda2"]
            assert row["lambda_max_predicted"] > 0.0
        assert "crossover_db" in result.metadata

    def test_pattern_smoke(self):
        spec = default_spec("pattern")
        spec.symbols = 400
        result = run_pattern(spec)
        expected = {
            f"{scheme}_snr{snr:g}dB"
            for scheme in spec.schemes
            for snr in spec.pattern_snrs_db
        }
        assert set(result.patterns) == expected
        for samples in result.patterns.values():
            gains = [s.gain_db for s in samples]
            assert max(gains) == pytest.approx(0.0, abs=1e-9)
        for row in result.rows:
            assert row["gain_at_0deg_db"] <= 1e-9

    def test_convergence_smoke(self):
        spec = default_spec("convergence")
        spec.symbols = 40
        spec.trials = 2
        spec.convergence_snrs_db = [20.0]
        result = run_convergence(spec)
        for scheme in spec.schemes:
            key = f"convergence_symbols_{scheme}_snr20"
            assert key in result.metadata
        assert len(result.rows) == 2 * spec.symbols  # per scheme, per symbol

    def test_tracking_smoke(self):
        spec = default_spec("tracking")
        spec.symbols = 120
        spec.trials = 2
        spec.entry_interval = 40
        result = run_tracking(spec)
        entry_keys = [k for k in result.metadata if k.endswith("_symbol")]
        assert entry_keys
        recovery_keys = [
            k for k in result.metadata if k.endswith("_recovery_symbols")
        ]
        assert recovery_keys
        runs = {row["run"] for row in result.rows}
        assert runs == {"staggered", "control"}

    def test_identical_delay_smoke(self):
        spec = default_spec("identical_delay")
        spec.symbols = 400
        result = run_identical_delay(spec)
        assert set(result.patterns) == {
            "distinct_path1", "distinct_path2", "identical"
        }
        assert len(result.rows) == 3


class TestWriteResult:
    def test_round_trip_files(self, tmp_path):
        result = ExperimentResult(
            preset="threshold_sweep",
            rows=[
                {"scenario": "five_tones", "snr_db": 1.0,
                 "g_linear": 0.123456789012345, "measured_threshold_db":
                 math.inf},
                {"scenario": "five_tones", "snr_db": 2.0,
                 "g_linear": 1.0, "measured_threshold_db": -math.inf},
            ],
            patterns={"MIC_snr10dB": []},
            metadata={"seed": 1, "timestamp": "now"},
        )
        path = write_result(result, tmp_path / "out")
        text = path.read_text()
        lines = text.splitlines()
        assert lines[0] == "# schema=mpb-lab/1"
        assert lines[1] == "# preset=threshold_sweep"
        assert "# seed=1" in lines
        # timestamps stay out of results.csv so reruns are byte-identical
        assert not any("timestamp" in line for line in lines)
        assert "inf" in text and "-inf" in text
        assert (tmp_path / "out" / "patterns_MIC_snr10dB.csv").exists()
        meta = (tmp_path / "out" / "meta.txt").read_text()
        assert "preset: threshold_sweep" in meta
        assert "timestamp: now" in meta

    def test_float_formatting_round_trips(self, tmp_path):
        value = 0.123456789012345
        result = ExperimentResult(
            preset="pattern", rows=[{"x": value}], patterns={}, metadata={},
        )
        path = write_result(result, tmp_path / "out")
        data = path.read_text().splitlines()[-1]
        assert float(data) == pytest.approx(value, rel=1e-9)

    def test_rerun_is_byte_identical(self, tmp_path):
        spec = tiny_sweep_spec()
        first = write_result(run_threshold_sweep(spec), tmp_path / "a")
        second = write_result(run_threshold_sweep(spec), tmp_path / "b")
        assert first.read_bytes() == second.read_bytes()


class TestCli:
    def test_oracle_command(self, capsys):
        assert cli.main(["oracle"]) == 0
        out = capsys.readouterr().out
        assert "gold" in out

    def test_validate_ok(self, tmp_path, capsys):
        path = write_config(tmp_path, "preset: eigencurve\nseed: 3\n")
        assert cli.main(["validate", "--config", str(path)]) == 0
        assert "OK: preset=eigencurve" in capsys.readouterr().out

    def test_validate_bad_config(self, tmp_path, capsys):
        path = write_config(tmp_path, "preset: eigencurve\nwarp: 1\n")
        assert cli.main(["validate", "--config", str(path)]) == 1
        assert "INVALID" in capsys.readouterr().err

    def test_preset_mismatch_is_an_error(self, tmp_path, capsys):
        path = write_config(tmp_path, "preset: eigencurve\n")
        rc = cli.main(["pattern", "--config", str(path)])
        assert rc == 1
        assert "declares preset" in capsys.readouterr().err

    def test_tiny_sweep_run_writes_outputs(self, tmp_path, capsys):
        text = (
            "preset: threshold_sweep\n"
            "symbols: 400\n"
            "trials: 1\n"
            "schemes: [MIC]\n"
            "scenarios: [five_tones]\n"
            "inr_list_db: [10]\n"
            "snr_grid_db: [-10, 0, 10]\n"
        )
        config = write_config(tmp_path, text)
        out_dir = tmp_path / "run"
        rc = cli.main(
            ["threshold_sweep", "--config", str(config), "--out", str(out_dir)]
        )
        assert rc == 0
        captured = capsys.readouterr().out
        assert "running threshold_sweep" in captured
        assert "wrote" in captured
        assert (out_dir / "results.csv").exists()
        assert (out_dir / "meta.txt").exists()

    def test_cli_overrides_win(self, tmp_path, capsys):
        config = write_config(
            tmp_path,
            "preset: identical_delay\nsymbols: 400\nseed: 1\n",
        )
        out_dir = tmp_path / "run"
        rc = cli.main(
            [
                "identical_delay", "--config", str(config),
                "--seed", "2", "--symbols", "300", "--out", str(out_dir),
            ]
        )
        assert rc == 0
        meta = (out_dir / "meta.txt").read_text()
        assert "seed: 2" in meta
        assert "symbols: 300" in meta
