import sys
sys.path.append("..") # Adds the module to path

import unittest

import ultradecoherence.utils as utils



class TestUtils(unittest.TestCase):

    def test_hasmethod(self):
        self.assertTrue(utils.hasmethod(utils, 'hasmethod'))
        self.assertFalse(utils.hasmethod(utils, 'this_is_definetely_not_a_method_of_utils'))


    def test_as_float_list(self):
        self.assertEqual(utils.as_float_list("50, 100, 200"), [50.0, 100.0, 200.0])
        self.assertEqual(utils.as_float_list("1;2"), [1.0, 2.0])
        self.assertEqual(utils.as_float_list(""), [])
        with self.assertRaises(ValueError):
            utils.as_float_list("1, two")


    def test_get_kwarg_names(self):

        def func1():
            pass
        self.assertEqual(utils.get_kwarg_names(func1), [])

        def func2(key1):
            pass
        self.assertEqual(utils.get_kwarg_names(func2), ['key1'])

        def func3(key1, key2=2):
            pass
        self.assertEqual(utils.get_kwarg_names(func3), ['key1', 'key2'])

        def func4(*args, key1=1):
            pass
        self.assertEqual(utils.get_kwarg_names(func4), ['key1'])

        def func5(key1, **kwargs):
            pass
        self.assertEqual(utils.get_kwarg_names(func5), ['key1'])



if __name__ == '__main__':
    unittest.main()
