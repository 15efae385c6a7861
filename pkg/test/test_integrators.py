import sys
sys.path.append("..") # Adds the module to path

import unittest

import numpy as np

from ultradecoherence.core import ConfigurationError, IntegrationError
from ultradecoherence.integrators import IntegratorConfig, check_time_grid, integrate, propagate



def _rotation(omega, gamma):
    # dy/dt = (-i omega - gamma) y on two decoupled modes
    generator = np.diag([-1j * omega - gamma, 1j * omega - gamma])
    return generator, lambda t, y: generator @ y



class TestIntegratorConfig(unittest.TestCase):

    def test_defaults(self):
        config = IntegratorConfig()
        self.assertEqual(config.method, "RK45")
        self.assertEqual(config.rel_tol, 1e-8)
        self.assertEqual(config.abs_tol, 1e-10)
        self.assertEqual(config.max_step, 0.05)


    def test_method_case(self):
        self.assertEqual(IntegratorConfig(method="rk4").method, "RK4")
        self.assertEqual(IntegratorConfig(method="EXPM").method, "expm")


    def test_invalid(self):
        with self.assertRaises(ConfigurationError):
            IntegratorConfig(method="euler")
        with self.assertRaises(ConfigurationError):
            IntegratorConfig(max_step=0)
        with self.assertRaises(ConfigurationError):
            IntegratorConfig(rel_tol=-1e-8)


    def test_replace(self):
        config = IntegratorConfig().replace(method="RK4", max_step=0.01)
        self.assertEqual(config.method, "RK4")
        self.assertEqual(config.max_step, 0.01)


    def test_effective_max_step(self):
        config = IntegratorConfig(max_step=0.05)
        self.assertEqual(config.effective_max_step(0.0), 0.05)
        self.assertAlmostEqual(config.effective_max_step(800.0), 0.1 / 800)



class TestTimeGrid(unittest.TestCase):

    def test_valid(self):
        np.testing.assert_array_equal(check_time_grid([0, 1, 2]), [0.0, 1.0, 2.0])


    def test_invalid(self):
        for grid in ([], [1, 2], [0, 1, 1], [[0, 1]]):
            with self.assertRaises(ConfigurationError):
                check_time_grid(grid)



class TestIntegrate(unittest.TestCase):

    def test_methods_agree_with_closed_form(self):
        generator, rhs = _rotation(2.0, 0.5)
        y0 = np.array([1.0, 1.0j])
        t_grid = np.linspace(0, 5, 11)
        expected = np.exp(np.outer(t_grid, np.diag(generator))) * y0

        for config in (IntegratorConfig(), IntegratorConfig(method="RK4", max_step=0.01)):
            states = integrate(rhs, y0, t_grid, config)
            self.assertEqual(states.shape, (11, 2))
            np.testing.assert_allclose(states, expected, atol=1e-7)

        np.testing.assert_allclose(propagate(generator, y0, t_grid), expected, atol=1e-12)


    def test_shape_preserved(self):
        y0 = np.ones((2, 1), dtype=complex)
        states = integrate(lambda t, y: np.zeros_like(y), y0, [0, 1], IntegratorConfig())
        self.assertEqual(states.shape, (2,) + y0.shape)
        states = propagate(np.zeros((2, 2)), y0, [0, 0.5, 1.0])
        self.assertEqual(states.shape, (3,) + y0.shape)


    def test_single_point(self):
        _, rhs = _rotation(1.0, 1.0)
        states = integrate(rhs, np.array([1.0, 0.0]), [0.0], IntegratorConfig())
        np.testing.assert_array_equal(states, [[1.0, 0.0]])


    def test_rk4_stability(self):
        _, rhs = _rotation(0.0, 1000.0)
        with self.assertRaises(IntegrationError):
            integrate(rhs, np.array([1.0, 0.0]), [0, 1], IntegratorConfig(method="RK4", max_step=0.05), 1000.0)


    def test_expm_needs_propagate(self):
        _, rhs = _rotation(1.0, 1.0)
        with self.assertRaises(ConfigurationError):
            integrate(rhs, np.array([1.0, 0.0]), [0, 1], IntegratorConfig(method="expm"))


    def test_uneven_grid(self):
        generator, _ = _rotation(3.0, 0.2)
        y0 = np.array([1.0, 2.0])
        t_grid = np.array([0.0, 0.1, 0.5, 0.6, 2.0])
        expected = np.exp(np.outer(t_grid, np.diag(generator))) * y0
        np.testing.assert_allclose(propagate(generator, y0, t_grid), expected, atol=1e-12)



if __name__ == '__main__':
    unittest.main()
