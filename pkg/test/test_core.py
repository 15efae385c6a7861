import sys
sys.path.append("..") # Adds the module to path

import unittest

import numpy as np

from ultradecoherence import core
from ultradecoherence.models import (VonNeumannParams, build_von_neumann, PhotonDetectorParams,
                                     build_photon_detector, TwoSiteParams, build_two_site)



def _two_level_spec(coupling=None, hamiltonian=None):
    device = core.DeviceSpec([0.0, 0.0], [10.0, 10.0])
    system = core.SystemSpec(np.zeros((2, 2)) if hamiltonian is None else hamiltonian)
    blocks = {(1, 0): np.eye(2)} if coupling is None else coupling
    return core.ModelSpec(device, system, core.CouplingSpec(blocks))



class TestOperators(unittest.TestCase):

    def test_as_operator_pairs(self):
        operator = core.as_operator([[[1, 0], [0, 2]], [[0, -2], [3, 0]]])
        np.testing.assert_array_equal(operator, [[1, 2j], [-2j, 3]])


    def test_as_operator_shape(self):
        with self.assertRaises(core.ConfigurationError):
            core.as_operator(np.zeros((2, 3)))
        with self.assertRaises(core.ConfigurationError):
            core.as_operator(np.eye(2), dim=3)


    def test_hermitian_and_psd(self):
        self.assertTrue(core.is_hermitian(np.array([[1, 1j], [-1j, 1]])))
        self.assertFalse(core.is_hermitian(np.array([[0, 1], [0, 0]])))
        self.assertTrue(core.is_psd(np.array([[1, 1j], [-1j, 1]])))
        self.assertFalse(core.is_psd(np.diag([1.0, -1e-3])))
        self.assertAlmostEqual(core.min_eigenvalue(np.diag([2.0, -0.5])), -0.5)


    def test_dagger(self):
        operator = np.array([[1, 2j], [3, 4]])
        np.testing.assert_array_equal(core.dagger(operator), [[1, 3], [-2j, 4]])



class TestTolerances(unittest.TestCase):

    def test_defaults(self):
        tolerances = core.Tolerances()
        self.assertEqual(tolerances.trace, 1e-9)
        self.assertEqual(tolerances.hermitian, 1e-10)
        self.assertEqual(tolerances.psd, 1e-8)
        self.assertEqual(tolerances.degenerate, 1e-12)


    def test_positive(self):
        with self.assertRaises(core.ConfigurationError):
            core.Tolerances(trace=0)
        with self.assertRaises(core.ConfigurationError):
            core.Tolerances(psd=-1e-8)



class TestModelSpec(unittest.TestCase):

    def test_pair_rates(self):
        device = core.DeviceSpec([0.0, 1.0, 3.0], [10.0, 20.0, 40.0])
        self.assertEqual(device.num_outcomes, 2)
        self.assertEqual(device.gamma(0, 1), 15.0)
        self.assertEqual(device.gamma(1, 1), 0.0)
        self.assertEqual(device.omega(2, 1), 2.0)
        np.testing.assert_array_equal(device.gamma_matrix(), [[0, 15, 25], [15, 0, 30], [25, 30, 0]])
        np.testing.assert_array_equal(device.omega_matrix(), -device.omega_matrix().T)


    def test_adjoint_blocks(self):
        block = np.array([[0, 1j], [2, 0]])
        spec = _two_level_spec({(1, 0): block})
        np.testing.assert_array_equal(spec.coupling_block(0, 1), core.dagger(block))
        np.testing.assert_array_equal(spec.coupling_block(1, 1), np.zeros((2, 2)))
        self.assertEqual(spec.coupling.pairs(), [(0, 1), (1, 0)])


    def test_coupling_grid(self):
        spec = build_von_neumann(VonNeumannParams(num_outcomes=2, coupling=2.0))
        grid = spec.coupling_grid()
        self.assertEqual(grid.shape, (3, 3, 2, 2))
        np.testing.assert_array_equal(grid[1, 0], np.diag([2, 0]))
        np.testing.assert_array_equal(grid[0, 2], np.diag([0, 2]))
        np.testing.assert_array_equal(grid[1, 2], np.zeros((2, 2)))


    def test_immutable(self):
        spec = build_von_neumann(VonNeumannParams())
        with self.assertRaises(ValueError):
            spec.device.energies[0] = 1.0


    def test_dict_roundtrip(self):
        spec = build_two_site(TwoSiteParams(hopping=0.5, coupling=3.0, dephasing_rate=30.0))
        restored = core.ModelSpec.from_dict(spec.to_dict())
        self.assertEqual(restored.name, "two-site")
        np.testing.assert_array_equal(restored.system.hamiltonian, spec.system.hamiltonian)
        np.testing.assert_array_equal(restored.coupling_block(0, 1), spec.coupling_block(0, 1))
        np.testing.assert_array_equal(restored.device.dephasing_rates, spec.device.dephasing_rates)
        self.assertEqual(restored.metadata["hopping"], 0.5)


    def test_from_dict_malformed(self):
        with self.assertRaises(core.ConfigurationError):
            core.ModelSpec.from_dict({"device": {}})



class TestValidate(unittest.TestCase):

    def test_builders_are_valid(self):
        for spec in (build_von_neumann(VonNeumannParams(num_outcomes=3)),
                     build_photon_detector(PhotonDetectorParams(n_max=5)),
                     build_two_site(TwoSiteParams())):
            self.assertEqual(core.validate(spec), [])


    def test_single_level(self):
        spec = core.ModelSpec(core.DeviceSpec([0.0], [1.0]), core.SystemSpec(np.eye(2)), core.CouplingSpec())
        violations = core.validate(spec)
        self.assertEqual(len(violations), 1)
        self.assertIn("at least 2 levels", violations[0])


    def test_non_hermitian_hamiltonian(self):
        spec = _two_level_spec(hamiltonian=np.array([[0, 1], [0, 0]]))
        violations = core.validate(spec)
        self.assertTrue(any("system.H_Q" in violation for violation in violations))


    def test_negative_rate(self):
        spec = core.ModelSpec(core.DeviceSpec([0.0, 0.0], [1.0, -1.0]), core.SystemSpec(np.zeros((1, 1))),
                              core.CouplingSpec())
        self.assertTrue(any("dephasing_rates" in violation for violation in core.validate(spec)))


    def test_block_errors(self):
        spec = _two_level_spec({(1, 0): np.eye(2), (0, 1): 2 * np.eye(2), (1, 1): np.eye(2), (2, 0): np.eye(2)})
        violations = core.validate(spec)
        self.assertTrue(any("(0,1): not the adjoint" in violation for violation in violations))
        self.assertTrue(any("(1,1): diagonal block" in violation for violation in violations))
        self.assertTrue(any("(2,0): level index" in violation for violation in violations))


    def test_block_shape(self):
        spec = _two_level_spec({(1, 0): np.eye(3)})
        self.assertTrue(any("shape" in violation for violation in core.validate(spec)))



class TestBlockDensityMatrix(unittest.TestCase):

    def test_product(self):
        rho = core.BlockDensityMatrix.product(np.diag([0.25, 0.75]), 3, level=1)
        self.assertEqual(rho.num_levels, 3)
        self.assertEqual(rho.dim, 2)
        self.assertAlmostEqual(rho.trace(), 1.0)
        np.testing.assert_array_equal(rho.block(1, 1), np.diag([0.25, 0.75]))
        self.assertEqual(core.check_state(rho), [])


    def test_assemble_disassemble(self):
        rng = np.random.default_rng(1)
        blocks = rng.normal(size=(3, 3, 2, 2)) + 1j * rng.normal(size=(3, 3, 2, 2))
        rho = core.BlockDensityMatrix(blocks)
        full = core.assemble_full(rho)
        self.assertEqual(full.shape, (6, 6))
        np.testing.assert_array_equal(full[2:4, 4:6], blocks[1, 2])
        np.testing.assert_array_equal(core.disassemble(full, 3).blocks, blocks)


    def test_disassemble_dimension(self):
        with self.assertRaises(core.ConfigurationError):
            core.disassemble(np.eye(5), 2)


    def test_from_diagonal(self):
        rho = core.BlockDensityMatrix.from_diagonal({0: np.diag([0.5, 0]), 2: np.diag([0, 0.5])}, 3)
        diagonal = rho.diagonal()
        np.testing.assert_array_equal(diagonal[1], np.zeros((2, 2)))
        np.testing.assert_array_equal(diagonal[2], np.diag([0, 0.5]))


    def test_check_state(self):
        blocks = np.zeros((2, 2, 1, 1), dtype=complex)
        blocks[0, 0] = 1.5
        blocks[1, 1] = -0.5
        violations = core.check_state(core.BlockDensityMatrix(blocks))
        self.assertTrue(any("negative eigenvalue" in violation for violation in violations))
        self.assertTrue(any("p_0" in violation for violation in violations))

        blocks = np.zeros((2, 2, 1, 1), dtype=complex)
        blocks[0, 0] = 0.5
        violations = core.check_state(core.BlockDensityMatrix(blocks))
        self.assertTrue(any("total trace" in violation for violation in violations))


    def test_bad_shape(self):
        with self.assertRaises(core.ConfigurationError):
            core.BlockDensityMatrix(np.zeros((2, 3, 2, 2)))



if __name__ == '__main__':
    unittest.main()
