"""
TOML run configuration parsing and validation.
"""

import textwrap

import pytest

from src.core.errors import ConfigError
from src.nlhom.config import SECTION_KEYS, load_config, parse_config


def _doc(text: str) -> str:
    return textwrap.dedent(text).lstrip()


class TestDefaults:

    def test_minimal_document(self):
        config = parse_config('[run]\ncommand = "verify-kernel"\n')
        assert config.command == "verify-kernel"
        assert (config.d, config.m, config.p) == (3, 1, 2.0)
        assert config.threads == "auto"
        assert config.box() == ([-1.0] * 3, [1.0] * 3)
        assert config.solver.tol == 1e-6
        assert config.dump_fields

    def test_echo_covers_every_section(self):
        echo = parse_config('[run]\ncommand = "regime-sweep"\n').echo()
        assert set(echo) == set(SECTION_KEYS)

    def test_full_phi_document(self):
        config = parse_config(_doc("""
            [run]
            command = "phi"
            threads = 2
            deterministic = true

            [kernel]
            family = "indicator-ball"
            d = 3
            p = 2.0
            rho = 1.5

            [geometry]
            h = 0.125

            [schedules]
            epsilon = [0.5, 0.25]
            R = [3.0]
            z = [1.0, 2.0]

            [solver]
            tol = 1e-8
        """))
        assert config.threads == 2 and config.deterministic
        assert config.kernel_parameters == {"rho": 1.5}
        assert config.z == [[1.0], [2.0]]
        assert config.solver.tol == 1e-8


class TestErrors:

    def test_unknown_key_names_its_line(self):
        text = _doc("""
            [run]
            command = "regime-sweep"
            colour = "red"
        """)
        with pytest.raises(ConfigError, match="unknown key") as info:
            parse_config(text)
        assert info.value.line == 3
        assert str(info.value).startswith("line 3:")

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match=r"unknown section \[extra\]") as info:
            parse_config('[run]\ncommand = "fhom"\n[extra]\nx = 1\n')
        assert info.value.line == 3

    def test_missing_command(self):
        with pytest.raises(ConfigError, match="command is required"):
            parse_config("[run]\nseed = 1\n")

    def test_unknown_command(self):
        with pytest.raises(ConfigError, match="unknown command 'solve'"):
            parse_config('[run]\ncommand = "solve"\n')

    def test_exponent_outside_range(self):
        text = _doc("""
            [run]
            command = "verify-kernel"
            [kernel]
            d = 2
            p = 2.0
        """)
        with pytest.raises(ConfigError, match=r"\(1, d\) = \(1, 2\)") as info:
            parse_config(text)
        assert info.value.line == 5

    def test_parameter_of_another_family(self):
        text = _doc("""
            [run]
            command = "verify-kernel"
            [kernel]
            family = "smooth-decay"
            rho = 2.0
        """)
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(text)

    def test_malformed_schedule(self):
        text = _doc("""
            [run]
            command = "gns-suite"
            [schedules]
            epsilon = [0.5, "small"]
        """)
        with pytest.raises(ConfigError, match="malformed schedule entry") as info:
            parse_config(text)
        assert info.value.line == 4

    def test_missing_schedule_for_command(self):
        with pytest.raises(ConfigError, match="epsilon must be a nonempty list for 'phi'"):
            parse_config('[run]\ncommand = "phi"\n[schedules]\nR = [3.0]\nz = [1.0]\n')

    def test_syntax_error_line(self):
        with pytest.raises(ConfigError, match="malformed document") as info:
            parse_config('[run]\ncommand = "fhom"\nseed = \n')
        assert info.value.line == 3

    def test_vector_targets_need_m_components(self):
        text = _doc("""
            [run]
            command = "recovery"
            [kernel]
            m = 2
            [schedules]
            epsilon = [0.25]
            z = [[1.0, 0.0], [1.0]]
        """)
        with pytest.raises(ConfigError, match="expected 2 numbers"):
            parse_config(text)

    def test_hole_geometry(self):
        with pytest.raises(ConfigError, match="together"):
            parse_config('[run]\ncommand = "recovery"\n[geometry]\ndelta = 1.0\n'
                         '[schedules]\nepsilon = [0.25]\nz = [1.0]\n')
        with pytest.raises(ConfigError, match="below delta/2"):
            parse_config('[run]\ncommand = "recovery"\n[geometry]\ndelta = 1.0\nr = 0.5\n'
                         '[schedules]\nepsilon = [0.25]\nz = [1.0]\n')

    def test_box_corners(self):
        with pytest.raises(ConfigError, match="lower < upper"):
            parse_config('[run]\ncommand = "fhom"\n[kernel]\nd = 3\n[geometry]\n'
                         'lower = [0.0, 0.0, 1.0]\nupper = [1.0, 1.0, 1.0]\n'
                         '[schedules]\nR = [4.0]\n')

    @pytest.mark.parametrize("threads", ["0", "-2", '"many"', "true"])
    def test_threads(self, threads):
        with pytest.raises(ConfigError, match="threads"):
            parse_config(f'[run]\ncommand = "fhom"\nthreads = {threads}\n[schedules]\nR = [4.0]\n')

    def test_solver_ranges(self):
        with pytest.raises(ConfigError, match=r"\[solver\]"):
            parse_config('[run]\ncommand = "fhom"\n[schedules]\nR = [4.0]\n[solver]\ntol = 2.0\n')


class TestLoadConfig:

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.toml")

    def test_reads_file(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text('[run]\ncommand = "regime-sweep"\nseed = 7\n', encoding="utf-8")
        assert load_config(path).seed == 7
