# -*- coding: utf-8 -*-
""" Test the dtc_floquet command line
"""
import io
import json
from contextlib import redirect_stdout
from pathlib import Path
from tempfile import TemporaryDirectory
import unittest

from dtc_floquet.cli_dtc import apply_overrides, main, parse_args
from dtc_floquet.experiment import preset, preset_names


class Test_cli_dtc(unittest.TestCase):
    def _exit_code(self, argv):
        with self.assertRaises(SystemExit) as context:
            main(argv)
        return context.exception.code

    def test_list_presets(self):
        buffer = io.StringIO()
        with redirect_stdout(buffer):
            main(["preset", "--list"])
        self.assertListEqual(buffer.getvalue().split(), preset_names())

    def test_unknown_preset(self):
        self.assertEqual(self._exit_code(["preset", "fig9"]), 2)

    def test_unreadable_spec(self):
        with TemporaryDirectory() as tmp_dir:
            self.assertEqual(self._exit_code(["run", str(Path(tmp_dir) / "missing.json")]), 2)

    def test_invalid_spec(self):
        with TemporaryDirectory() as tmp_dir:
            filepath = Path(tmp_dir) / "spec.json"
            filepath.write_text(json.dumps({"model": {"n_qubits": 4}, "steps": -3}))
            self.assertEqual(self._exit_code(["run", str(filepath)]), 2)

    def test_capability_violation(self):
        with TemporaryDirectory() as tmp_dir:
            filepath = Path(tmp_dir) / "spec.json"
            filepath.write_text(
                json.dumps({"engine": "fermion", "model": {"n_qubits": 4}, "noise": {"shots": 100}})
            )
            self.assertEqual(self._exit_code(["run", str(filepath), "-o", tmp_dir]), 3)

    def test_sweep_verb_needs_grid(self):
        with TemporaryDirectory() as tmp_dir:
            self.assertEqual(self._exit_code(["sweep", "--preset", "echo", "-o", tmp_dir]), 2)

    def test_preset_run(self):
        with TemporaryDirectory() as tmp_dir:
            main(["preset", "echo", "-o", tmp_dir, "--steps", "20", "--seed", "2"])
            manifest = json.loads((Path(tmp_dir) / "manifest.json").read_text())
            self.assertTrue((Path(tmp_dir) / "autocorrelator.csv").exists())
        self.assertEqual(manifest["root_seed"], 2)
        self.assertEqual(manifest["spec"]["steps"], 20)

    def test_parse_sweep_grid(self):
        args = parse_args(["sweep", "--epsilons", "0.02,0.04", "--realizations", "2"])
        self.assertListEqual(args.epsilons, [0.02, 0.04])
        self.assertEqual(args.preset, "fig3-sweep")

    def test_overrides(self):
        args = parse_args(["tomo", "--exact", "--epsilon", "0.1", "-o", "out"])
        spec = apply_overrides(preset("s4-tomography"), args)
        self.assertIsNone(spec.tomography["shots_per_setting"])
        self.assertEqual(spec.model["epsilon"], 0.1)
        self.assertEqual(spec.output_dir, Path("out"))

        args = parse_args(["sweep", "--epsilons", "0.1,0.2", "--realizations", "3"])
        spec = apply_overrides(preset("fig2-dtc"), args)
        self.assertEqual(spec.analyses, ["sweep"])
        self.assertEqual(spec.sweep, {"epsilons": [0.1, 0.2], "n_realizations": 3})


if __name__ == "__main__":
    unittest.main()
