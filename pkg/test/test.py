import sys
import unittest

loader = unittest.TestLoader()
start_dir = './'
suite = loader.discover(start_dir, pattern="test_*.py")

runner = unittest.TextTestRunner(verbosity=2)
result = runner.run(suite)

sys.exit(not result.wasSuccessful())
