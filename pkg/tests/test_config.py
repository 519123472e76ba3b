"""Config parsing and the default walk measure."""

import math

import numpy as np
import pytest

from hypwalk.config import (
    LLTSettings,
    OperatorSettings,
    default_measure,
    element_from_word,
    load_config,
    measure_from_table,
    parse_config,
)
from hypwalk.errors import ConfigError
from hypwalk.group import GroupElement


class TestDefaultMeasure:
    def test_four_atoms_uniform(self):
        mu = default_measure()
        assert len(mu) == 4
        np.testing.assert_allclose(mu.weights, 0.25)

    def test_atoms_are_rotations_and_dilations(self):
        mu = default_measure(0.3)
        expected = [
            GroupElement.rotation(0.3),
            GroupElement.rotation(-0.3),
            GroupElement.dilation(0.6),
            GroupElement.dilation(-0.6),
        ]
        for got, want in zip(mu.elements, expected):
            np.testing.assert_allclose(got.mat, want.mat, atol=1e-15)

    def test_scale_validated(self):
        with pytest.raises(ConfigError):
            default_measure(0.0)
        with pytest.raises(ConfigError):
            default_measure(3.0)


class TestWords:
    def test_single_tokens(self):
        np.testing.assert_allclose(
            element_from_word("R", 0.4).mat, GroupElement.rotation(0.4).mat
        )
        np.testing.assert_allclose(
            element_from_word("D", 0.4).mat, GroupElement.dilation(0.4).mat
        )
        np.testing.assert_allclose(
            element_from_word("U", 0.4).mat, GroupElement.shear(0.4).mat
        )

    def test_prime_inverts(self):
        g = element_from_word("R R'", 0.4)
        np.testing.assert_allclose(g.mat, np.eye(2), atol=1e-15)

    def test_left_to_right(self):
        g = element_from_word("R D", 0.5)
        want = GroupElement.rotation(0.5) @ GroupElement.dilation(0.5)
        np.testing.assert_allclose(g.mat, want.mat, atol=1e-15)

    def test_unknown_token(self):
        with pytest.raises(ConfigError):
            element_from_word("R X", 0.3)


class TestMeasureTable:
    def test_empty_table_gives_default(self):
        mu = measure_from_table({})
        np.testing.assert_allclose(mu.mats, default_measure().mats)

    def test_scale_only(self):
        mu = measure_from_table({"scale": 0.5})
        np.testing.assert_allclose(mu.mats, default_measure(0.5).mats)

    def test_words_with_weights_normalized(self):
        table = {
            "atoms": [
                {"word": "R", "weight": 3.0},
                {"word": "D", "weight": 1.0},
            ],
            "scale": 0.2,
        }
        mu = measure_from_table(table)
        np.testing.assert_allclose(mu.weights, [0.75, 0.25])
        np.testing.assert_allclose(mu.mats[1], GroupElement.dilation(0.2).mat)

    def test_explicit_matrix(self):
        table = {"atoms": [{"matrix": [[2.0, 0.0], [0.0, 0.5]]}]}
        mu = measure_from_table(table)
        np.testing.assert_allclose(mu.mats[0], [[2.0, 0.0], [0.0, 0.5]])

    def test_symmetrized_flag(self):
        table = {"atoms": [{"word": "U"}], "symmetrized": True, "scale": 0.7}
        mu = measure_from_table(table)
        assert len(mu) == 2
        np.testing.assert_allclose(mu.weights, 0.5)

    def test_word_and_matrix_exclusive(self):
        with pytest.raises(ConfigError):
            measure_from_table(
                {"atoms": [{"word": "R", "matrix": [[1.0, 0.0], [0.0, 1.0]]}]}
            )

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            measure_from_table({"atoms": [{"word": "R", "wieght": 2.0}]})


class TestSettings:
    def test_operator_quadrature_floor(self):
        with pytest.raises(ConfigError):
            OperatorSettings(truncation=64, quadrature=100)

    def test_llt_validation(self):
        with pytest.raises(ConfigError):
            LLTSettings(mc_samples=100)
        with pytest.raises(ConfigError):
            LLTSettings(steps=(0, 4))

    def test_parse_rejects_unknown_section(self):
        with pytest.raises(ConfigError):
            parse_config({"measures": {}})

    def test_parse_defaults(self):
        cfg = parse_config({})
        assert cfg.operator.truncation == 64
        assert cfg.llt.mc_samples == 100_000
        assert len(cfg.measure) == 4


class TestLoadConfig:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(
            "\n".join(
                [
                    "[measure]",
                    "scale = 0.4",
                    "[operator]",
                    "truncation = 16",
                    "quadrature = 256",
                    "[llt]",
                    "steps = [2, 4]",
                    "[output]",
                    'formats = ["json"]',
                ]
            )
        )
        cfg = load_config(path)
        assert cfg.operator.truncation == 16
        assert cfg.llt.steps == (2, 4)
        assert cfg.output.formats == ("json",)
        np.testing.assert_allclose(cfg.measure.mats, default_measure(0.4).mats)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.toml")

    def test_bad_toml(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("[measure\nscale = ")
        with pytest.raises(ConfigError):
            load_config(path)
