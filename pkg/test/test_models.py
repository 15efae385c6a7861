import sys
sys.path.append("..") # Adds the module to path

import logging
import unittest

import numpy as np

from ultradecoherence import models
from ultradecoherence.core import ConfigurationError, validate
from ultradecoherence.reduction import KMode, compute_reduced, transition_rates



class TestStates(unittest.TestCase):

    def test_parse_state(self):
        np.testing.assert_array_equal(models.parse_state("mixed", 3), np.eye(3) / 3)
        np.testing.assert_array_equal(models.parse_state("basis:1", 3), models.basis_state(3, 1))
        np.testing.assert_array_equal(models.parse_state("fock:2", 4), models.fock_state(2, 3))
        np.testing.assert_array_equal(models.parse_state("R", 2), [[0, 0], [0, 1]])
        np.testing.assert_allclose(models.parse_state("amplitudes:3,4j", 2), [[0.36, -0.48j], [0.48j, 0.64]])
        np.testing.assert_allclose(models.parse_state([1, 1], 2), np.full((2, 2), 0.5))


    def test_parse_state_errors(self):
        for description, dim in (("basis:3", 3), ("L", 3), ("amplitudes:1,2", 3), ("squeezed:1", 2),
                                 ("basis:x", 2), (np.eye(2), 2), (np.eye(2) / 2, 3)):
            with self.assertRaises(ConfigurationError, msg=repr(description)):
                models.parse_state(description, dim)


    def test_coherent_state(self):
        state = models.coherent_state(1.0, 20)
        self.assertAlmostEqual(np.trace(state).real, 1.0, places=12)
        number = np.sum(np.arange(21) * np.diag(state).real)
        self.assertAlmostEqual(number, 1.0, delta=1e-8)
        np.testing.assert_array_equal(models.coherent_state(0, 5), models.fock_state(0, 5))


    def test_coherent_truncation_warning(self):
        with self.assertLogs("ultradecoherence.models", level=logging.WARNING):
            models.coherent_state(2.0, 8)


    def test_truncation_weight(self):
        self.assertEqual(models.truncation_weight("coherent:2", 8), models.coherent_truncation_weight(2.0, 8))
        self.assertGreater(models.truncation_weight("coherent:2", 8), 1e-4)
        self.assertEqual(models.truncation_weight("fock:3", 8), 0.0)
        self.assertEqual(models.truncation_weight(models.fock_state(1, 8), 8), 0.0)



class TestVonNeumann(unittest.TestCase):

    def test_build(self):
        params = models.VonNeumannParams(3, coupling=2.0, dephasing_rate=40.0)
        spec = models.build_von_neumann(params)
        self.assertEqual(validate(spec), [])
        self.assertEqual(spec.num_levels, 4)
        self.assertEqual(spec.dim, 3)
        self.assertAlmostEqual(spec.metadata["chi"], 0.1)
        np.testing.assert_array_equal(spec.coupling_block(2, 0), 2.0 * models.basis_state(3, 1))
        np.testing.assert_array_equal(spec.coupling_block(2, 1), np.zeros((3, 3)))


    def test_invalid_params(self):
        with self.assertRaises(ConfigurationError):
            models.VonNeumannParams(0)
        with self.assertRaises(ConfigurationError):
            models.VonNeumannParams(2, dephasing_rate=-1.0)
        with self.assertRaises(ConfigurationError):
            models.VonNeumannParams(2, probe_basis=np.eye(3))
        with self.assertRaises(ConfigurationError):
            models.VonNeumannParams(2, probe_basis=[[1, 1], [0, 1]])


    def test_survival(self):
        self.assertAlmostEqual(models.analytic_survival_von_neumann(0.5, np.log(2)), 0.5, places=12)


    def test_populations(self):
        t = np.linspace(0, 10, 11)
        populations = models.von_neumann_populations(0.1, [0.36, 0.64], t)
        np.testing.assert_allclose(np.sum(populations, axis=1), 1.0, atol=1e-14)
        np.testing.assert_allclose(populations[:, 1] / 0.36, populations[:, 2] / 0.64, atol=1e-14)
        self.assertAlmostEqual(populations[0, 0], 1.0)



class TestPhotonDetector(unittest.TestCase):

    def test_build(self):
        params = models.PhotonDetectorParams(n_max=5)
        spec = models.build_photon_detector(params)
        self.assertEqual(validate(spec), [])
        self.assertEqual(spec.dim, 6)
        np.testing.assert_array_equal(spec.system.hamiltonian, np.diag(np.arange(6.0)))
        self.assertEqual(spec.metadata["truncation_weight"], 0.0)
        self.assertEqual(spec.metadata["top_level_population"], 0.0)


    def test_truncation_weight_warning(self):
        params = models.PhotonDetectorParams(n_max=4, field_state=models.fock_state(4, 4), truncation_weight=1e-3)
        with self.assertLogs("ultradecoherence.models", level=logging.WARNING):
            spec = models.build_photon_detector(params)
        self.assertEqual(spec.metadata["truncation_weight"], 1e-3)
        self.assertEqual(spec.metadata["top_level_population"], 1.0)


    def test_invalid_params(self):
        with self.assertRaises(ConfigurationError):
            models.PhotonDetectorParams(n_max=0)
        with self.assertRaises(ConfigurationError):
            models.PhotonDetectorParams(dephasing_rate=0.0)
        with self.assertRaises(ConfigurationError):
            models.PhotonDetectorParams(n_max=3, field_state=models.fock_state(0, 4))
        with self.assertRaises(ConfigurationError):
            models.PhotonDetectorParams(truncation_weight=1.0)


    def test_fock_linearity(self):
        params = models.PhotonDetectorParams(n_max=8)
        reduced = compute_reduced(models.build_photon_detector(params))
        for n in range(1, 6):
            rate = models.photon_click_rate(params, models.fock_state(n, 8))
            self.assertAlmostEqual(rate, n * 2 * params.chi, delta=1e-10)
            self.assertAlmostEqual(transition_rates(reduced, models.fock_state(n, 8), 0)[1], rate, delta=1e-10)


    def test_coherent_rate(self):
        params = models.PhotonDetectorParams(coupling=0.1, dephasing_rate=10.0, n_max=20)
        rate = models.photon_click_rate(params, models.coherent_state(1.0, 20))
        self.assertAlmostEqual(rate, 2 * 0.1 ** 2 / 10.0, delta=1e-8)


    def test_exact_mode_matches(self):
        spec = models.build_photon_detector(models.PhotonDetectorParams(n_max=6))
        resonant = compute_reduced(spec, KMode.RESONANT)
        exact = compute_reduced(spec, KMode.EXACT)
        np.testing.assert_allclose(exact.back_reaction(0), resonant.back_reaction(0), atol=1e-14)



class TestTwoSite(unittest.TestCase):

    def test_build(self):
        spec = models.build_two_site(models.TwoSiteParams.from_chi(1.0, 0.5))
        self.assertEqual(validate(spec), [])
        self.assertAlmostEqual(spec.metadata["chi"], 0.5)
        np.testing.assert_array_equal(spec.system.hamiltonian, [[0, -1], [-1, 0]])


    def test_invalid_params(self):
        with self.assertRaises(ConfigurationError):
            models.TwoSiteParams(hopping=0.0)
        with self.assertRaises(ConfigurationError):
            models.TwoSiteParams.from_chi(1.0, -1.0)
        with self.assertRaises(ConfigurationError):
            models.analytic_survival_two_site(1.0, 1.0, -1.0)


    def test_reference_value(self):
        self.assertAlmostEqual(models.analytic_survival_two_site(1.0, 1.0, 1.0), 0.7198, delta=1e-4)


    def test_underdamped_form(self):
        hopping, chi = 1.0, 1.0
        t = np.linspace(0, 10, 101)
        omega = np.sqrt(4 * hopping ** 2 - chi ** 2)
        direct = np.exp(-chi * t) * (4 * hopping ** 2 - chi ** 2 * np.cos(omega * t)
                                     + chi * omega * np.sin(omega * t)) / omega ** 2
        np.testing.assert_allclose(models.analytic_survival_two_site(hopping, chi, t), direct, atol=1e-12)


    def test_critical_continuity(self):
        t = np.linspace(0, 10, 201)
        critical = models.analytic_survival_two_site(1.0, 2.0, t)
        np.testing.assert_allclose(critical, np.exp(-2 * t) * (1 + 2 * t + 2 * t ** 2), atol=1e-9)
        for chi in (2.0 - 1e-6, 2.0 + 1e-6):
            nearby = models.analytic_survival_two_site(1.0, chi, t)
            self.assertLessEqual(np.max(np.abs(nearby - critical)), 1e-4)


    def test_density_is_derivative(self):
        for chi in (0.5, 2.0, 3.0):
            t = np.linspace(0, 10, 10001)
            survival = models.analytic_survival_two_site(1.0, chi, t)
            density = models.analytic_arrival_density_two_site(1.0, chi, t)
            np.testing.assert_allclose(-np.gradient(survival, t)[1:-1], density[1:-1], atol=1e-6)


    def test_scalar(self):
        self.assertIsInstance(models.analytic_survival_two_site(1.0, 1.0, 0.0), float)
        self.assertAlmostEqual(models.analytic_survival_two_site(1.0, 1.0, 0.0), 1.0)



class TestDispatch(unittest.TestCase):

    def test_analytic_survival(self):
        t = np.linspace(0, 5, 6)
        von_neumann = models.build_von_neumann(models.VonNeumannParams(2, 1.0, 10.0))
        np.testing.assert_allclose(models.analytic_survival(von_neumann, np.eye(2) / 2, t), np.exp(-0.2 * t))

        two_site = models.build_two_site(models.TwoSiteParams.from_chi(1.0, 1.0))
        np.testing.assert_allclose(models.analytic_survival(two_site, models.basis_state(2, 0), t),
                                   models.analytic_survival_two_site(1.0, 1.0, t))
        self.assertIsNone(models.analytic_survival(two_site, models.basis_state(2, 1), t))

        random_spec = models.RandomModel(seed=1).resolve()
        self.assertIsNone(models.analytic_survival(random_spec, np.eye(2) / 2, t))


    def test_get_device(self):
        self.assertIsInstance(models.get_device("two-site", chi=1.0), models.TwoSite)
        with self.assertRaises(ConfigurationError):
            models.get_device("double-slit")



if __name__ == '__main__':
    unittest.main()
