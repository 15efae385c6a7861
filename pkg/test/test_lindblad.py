import sys
sys.path.append("..") # Adds the module to path

import unittest

import numpy as np

from ultradecoherence.core import (BlockDensityMatrix, ConfigurationError, CouplingSpec, DeviceSpec, InvariantViolation,
                                   ModelSpec, SystemSpec, check_state)
from ultradecoherence.integrators import IntegratorConfig
from ultradecoherence.lindblad import Timeline, coherence_norms, device_populations, evolve_full
from ultradecoherence.models import (RandomModel, VonNeumannParams, analytic_survival_von_neumann, build_von_neumann,
                                     pure_state, von_neumann_populations)


RK45 = IntegratorConfig()
EXPM = IntegratorConfig(method="expm")



class TestDevicePopulations(unittest.TestCase):

    def test_populations(self):
        rho = BlockDensityMatrix.from_diagonal({0: np.diag([0.2, 0.1]), 1: np.diag([0.3, 0.4])}, 2)
        np.testing.assert_allclose(device_populations(rho), [0.3, 0.7])


    def test_imaginary_residue(self):
        blocks = np.zeros((2, 2, 1, 1), dtype=complex)
        blocks[0, 0] = 1 + 1e-6j
        with self.assertRaises(InvariantViolation):
            device_populations(BlockDensityMatrix(blocks))


    def test_coherence_norms(self):
        blocks = np.zeros((2, 2, 2, 2), dtype=complex)
        blocks[0, 0] = np.eye(2) / 2
        blocks[0, 1] = [[0.3, 0], [0, 0.4]]
        blocks[1, 0] = blocks[0, 1].conj().T
        norms = coherence_norms(BlockDensityMatrix(blocks))
        np.testing.assert_allclose(norms, [[0, 0.5], [0.5, 0]])



class TestEvolveFull(unittest.TestCase):

    def test_uncoupled(self):
        # V = 0: diagonal blocks constant, coherences decay at gamma_{mu nu}
        spec = ModelSpec(DeviceSpec([0.0, 2.0], [4.0, 6.0]), SystemSpec(np.diag([0.0, 1.0])), CouplingSpec())
        blocks = np.zeros((2, 2, 2, 2), dtype=complex)
        blocks[0, 0] = np.diag([0.3, 0.2])
        blocks[1, 1] = np.diag([0.25, 0.25])
        blocks[0, 1] = np.diag([0.1, 0.1])
        blocks[1, 0] = blocks[0, 1]
        t_grid = np.linspace(0, 1, 11)

        for config in (RK45, EXPM):
            timeline = evolve_full(spec, BlockDensityMatrix(blocks), t_grid, config)
            self.assertEqual(len(timeline), 11)
            for t, state in zip(t_grid, timeline.states):
                np.testing.assert_allclose(state.block(0, 0), blocks[0, 0], atol=1e-9)
                np.testing.assert_allclose(state.block(1, 1), blocks[1, 1], atol=1e-9)
                np.testing.assert_allclose(state.block(0, 1), blocks[0, 1] * np.exp(-5.0 * t), atol=1e-9)


    def test_rabi(self):
        # gamma = 0: the ready and pointer levels exchange population as cos^2(g t)
        spec = build_von_neumann(VonNeumannParams(num_outcomes=1, coupling=1.0, dephasing_rate=0.0))
        rho0 = BlockDensityMatrix.product(np.eye(1), 2)
        t_grid = np.linspace(0, 3, 31)

        for config in (RK45, EXPM):
            populations = evolve_full(spec, rho0, t_grid, config).populations()
            np.testing.assert_allclose(populations[:, 0], np.cos(t_grid) ** 2, atol=1e-7)
            np.testing.assert_allclose(populations[:, 1], np.sin(t_grid) ** 2, atol=1e-7)


    def test_von_neumann_decay(self):
        params = VonNeumannParams(num_outcomes=2, coupling=1.0, dephasing_rate=200.0)
        spec = build_von_neumann(params)
        rho0 = BlockDensityMatrix.product(pure_state([1, 1]), 3)
        t_grid = np.linspace(0, 100, 201)

        populations = evolve_full(spec, rho0, t_grid, EXPM).populations()

        # Pointer levels decay back to the ready level, so the full ready
        # population follows (1 + exp(-4 chi t)) / 2 and agrees with the
        # first-click survival only at early times.
        expected = von_neumann_populations(params.chi, [0.5, 0.5], t_grid)
        np.testing.assert_allclose(populations, expected, rtol=0.02, atol=1e-3)
        early = t_grid <= 2
        np.testing.assert_allclose(populations[early, 0], analytic_survival_von_neumann(params.chi, t_grid[early]),
                                   rtol=0.02)
        np.testing.assert_allclose(populations.sum(axis=1), 1, atol=1e-9)


    def test_methods_agree(self):
        device = RandomModel(seed=7, num_outcomes=2, dim=2)
        spec = device.resolve()
        rho0 = BlockDensityMatrix.product(device.resolve_state(), spec.num_levels)
        t_grid = np.linspace(0, 2, 21)

        exact = evolve_full(spec, rho0, t_grid, EXPM)
        adaptive = evolve_full(spec, rho0, t_grid, RK45)
        for left, right in zip(exact.states, adaptive.states):
            np.testing.assert_allclose(left.blocks, right.blocks, atol=1e-6)


    def test_shape_mismatch(self):
        spec = build_von_neumann(VonNeumannParams(num_outcomes=2))
        with self.assertRaises(ConfigurationError):
            evolve_full(spec, BlockDensityMatrix.product(np.eye(3) / 3, 3), [0, 1])


    def test_random_invariants(self):
        t_grid = np.linspace(0, 1, 6)
        for seed in range(100):
            device = RandomModel(seed=seed, num_outcomes=1 + seed % 3, dim=1 + seed % 2)
            spec = device.resolve()
            rho0 = BlockDensityMatrix.product(device.resolve_state(), spec.num_levels)
            timeline = evolve_full(spec, rho0, t_grid, EXPM)
            for state in timeline.states:
                self.assertEqual(check_state(state), [], "seed {0}".format(seed))


    def test_step_halving(self):
        # gamma * 0.1 > max_step, so max_step is the binding step bound
        spec = build_von_neumann(VonNeumannParams(num_outcomes=2, coupling=0.5, dephasing_rate=1.0))
        rho0 = BlockDensityMatrix.product(pure_state([1, 1]), 3)
        t_grid = np.linspace(0, 5, 26)

        coarse = evolve_full(spec, rho0, t_grid, RK45).populations()
        fine = evolve_full(spec, rho0, t_grid, RK45.replace(max_step=RK45.max_step / 2)).populations()
        self.assertLess(np.max(np.abs(coarse - fine)), 10 * RK45.rel_tol)


    def test_coherence_bound(self):
        t_grid = np.linspace(0, 2, 41)
        for gamma in (10.0, 50.0, 200.0):
            params = VonNeumannParams(num_outcomes=2, coupling=1.0, dephasing_rate=gamma)
            rho0 = BlockDensityMatrix.product(pure_state([1, 1]), 3)
            timeline = evolve_full(build_von_neumann(params), rho0, t_grid, EXPM)
            for state in timeline.states:
                self.assertTrue(np.all(coherence_norms(state) <= 2 * params.coupling / gamma),
                                "gamma {0}".format(gamma))


    def test_coherence_shrinks_with_gamma(self):
        rho0 = BlockDensityMatrix.product(pure_state([1, 1]), 3)
        coherences = []
        for gamma in (10.0, 30.0, 100.0, 300.0, 1000.0):
            spec = build_von_neumann(VonNeumannParams(num_outcomes=2, coupling=1.0, dephasing_rate=gamma))
            coherences.append(evolve_full(spec, rho0, [0.0, 1.0], EXPM).max_coherence()[-1])

        self.assertTrue(np.all(np.diff(coherences) < 0), coherences)
        self.assertLess(coherences[-1], 1e-3)



class TestTimeline(unittest.TestCase):

    def test_to_frame(self):
        spec = build_von_neumann(VonNeumannParams(num_outcomes=2, coupling=1.0, dephasing_rate=50.0))
        rho0 = BlockDensityMatrix.product(np.eye(2) / 2, 3)
        timeline = evolve_full(spec, rho0, np.linspace(0, 1, 5), EXPM)
        frame = timeline.to_frame()
        self.assertEqual(list(frame.columns), ["t", "p_0", "p_1", "p_2", "maxcoh"])
        self.assertEqual(len(frame), 5)
        self.assertEqual(frame["maxcoh"][0], 0.0)


    def test_length_mismatch(self):
        with self.assertRaises(ConfigurationError):
            Timeline(np.array([0.0, 1.0]), [])


    def test_plot(self):
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        spec = build_von_neumann(VonNeumannParams(num_outcomes=2, coupling=1.0, dephasing_rate=50.0))
        timeline = evolve_full(spec, BlockDensityMatrix.product(np.eye(2) / 2, 3), np.linspace(0, 1, 5), EXPM)
        figure, ax = plt.subplots()
        try:
            self.assertIs(timeline.plot(ax=ax), ax)
            self.assertEqual(len(ax.get_lines()), 3)
            self.assertEqual(ax.get_xlabel(), "t")
        finally:
            plt.close(figure)



if __name__ == '__main__':
    unittest.main()
