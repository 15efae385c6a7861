import sys
sys.path.append("..") # Adds the module to path

import json
import tempfile
import unittest

from pathlib import Path

import numpy as np
import pandas as pd

from ultradecoherence import export
from ultradecoherence.jumps import ClickEvent, Trajectory



class TestExport(unittest.TestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name)


    def tearDown(self):
        self.directory.cleanup()


    def test_write_table(self):
        frame = pd.DataFrame({"t": [0.0, 0.5], "p": [1.0, 1 / 3]})
        path = export.write_table(frame, self.path / "nested" / "table.csv", {"converged": True, "error": 0.1})

        lines = path.read_text().splitlines()
        self.assertEqual(lines[0], "t,p")
        self.assertEqual(lines[-2:], ["# converged = true", "# error = 0.10000000000000001"])

        table = pd.read_csv(path, comment="#")
        self.assertEqual(table["p"][1], 1 / 3)


    def test_write_plot_data(self):
        frame = pd.DataFrame({"t": [0.0, 1.0], "p": [1.0, 0.5], "label": ["a", "b"]})
        path = export.write_plot_data(frame, self.path / "table.dat")
        lines = path.read_text().splitlines()
        self.assertEqual(lines[0], "# t p")
        np.testing.assert_array_equal(np.loadtxt(path), [[0.0, 1.0], [1.0, 0.5]])


    def test_write_json(self):
        path = export.write_json({"rate": np.float64(0.25), "flag": np.bool_(True)}, self.path / "data.json")
        self.assertEqual(json.loads(path.read_text()), {"rate": 0.25, "flag": "true"})
        self.assertEqual([entry.name for entry in self.path.iterdir()], ["data.json"])


    def test_trajectories_to_frame(self):
        trajectories = [Trajectory(1, 0, (ClickEvent(2.5, 0, 2, np.eye(2)),), False), Trajectory(1, 1)]
        frame = export.trajectories_to_frame(trajectories)
        self.assertEqual(list(frame.columns), ["seed_index", "censored", "t_click", "to_level"])
        self.assertEqual(list(frame["censored"]), [0, 1])
        self.assertEqual(frame["t_click"][0], 2.5)
        self.assertTrue(np.isnan(frame["t_click"][1]))
        self.assertEqual(list(frame["to_level"]), [2, -1])



if __name__ == '__main__':
    unittest.main()
