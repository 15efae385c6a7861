'''Tools to manage the parameters of a device model

Classes
-------
Property
    The class `Property`, which represents the value of a parameter of a device.
    A Property can be:
    * A constant (initialization with, e.g., a number, a tuple, an array)
    * A list or dict of sampling rules, sampled element by element
    * A random variable (initialization with a function accepting `rng`)
    * A derived value (initialization with a function accepting the names
      of other properties)
PropertyDict
    The class `PropertyDict`, which is a dictionary with each element a Property.
    The class provides utility functions to update, sample and retrieve
    properties.
'''

import numpy as np
from ultradecoherence.utils import hasmethod, get_kwarg_names



class Property:
    '''Represents a parameter of a device

    The class `Property` wraps an input, which is treated
    internally as a sampling rule. This sampling rule is used
    to update the value of the property.
    The sampling rule can be, for example:
    * A constant (initialization with, e.g., a number or an array)
    * A list or dict whose elements are themselves sampling rules
    * A random variable (initialization with, e.g., ``lambda rng: rng.uniform(50, 800)``)
    * A value derived from other properties (``lambda g: g ** 2 / 100``)

    Parameters
    ----------
    sampling_rule : any
        Defines the sampling rule to update the value of the property.
        See method `sample()` for how different sampling rules are sampled.

    Attributes
    ----------
    sampling_rule : any
        The sampling rule to update the value of the property.
    current_value : any
        The current value obtained from the last call to the sampling rule.
    has_updated_since_last_resolve : bool
        Whether the property has been updated since the last resolve.

    '''

    def __init__(self, sampling_rule: any):
        self.sampling_rule = sampling_rule
        self.has_updated_since_last_resolve = False


    @property
    def current_value(self):
        '''Current value of the property

        `current_value` is the result of the latest `update()` call.
        Randomization only occurs when the method `update()` is called
        and, therefore, the current value does not change between calls.

        The getter calls the method `update()` if `current_value`
        has not been set yet.

        '''

        if not hasattr(self, "_current_value"):
            self.update()
        return self._current_value

    @current_value.setter
    def current_value(self, updated_current_value):
        self._current_value = updated_current_value


    def update(self, **kwargs) -> 'Property':
        '''Updates the current value

        The method `update()` sets the property `current_value`
        as the output of the method `sample()`. Will only update
        once per resolve.

        Returns
        -------
        Property
            Returns itself.

        '''

        if self.has_updated_since_last_resolve:
            return self

        self.has_updated_since_last_resolve = True

        self.current_value = self.sample(self.sampling_rule, **kwargs)

        return self


    def sample(self, sampling_rule, **kwargs):
        '''Samples the sampling rule

        Returns a sampled instance of the `sampling_rule` field.
        The logic behind the sampling depends on the type of
        `sampling_rule`. These are checked in the following order of
        priority:

        1. Any object with a callable `sample()` method has this
            method called and returned.
        2. If the rule is a ``dict``, sample each value and combine the
            result into a new ``dict`` using the original keys.
        3. If the rule is a ``list``, sample each element of the list and
            combine the result into a new ``list``.
        4. Tuples and arrays are returned as they are.
        5. If the rule is callable, call it with its accepted arguments.
            These are the random generator `rng` and the values of
            other properties.
        6. If none of the above apply, return the rule itself.

        Parameters
        ----------
        sampling_rule : any
            The rule to sample values from.
        **kwargs
            Arguments that will be passed on to functions that accept them.

        Returns
        -------
        any
            A sampled instance of the `sampling_rule`.

        '''

        if hasmethod(sampling_rule, "sample"):
            return sampling_rule.sample(**kwargs)

        elif isinstance(sampling_rule, dict):
            return {key: self.sample(val, **kwargs) for key, val in sampling_rule.items()}

        elif isinstance(sampling_rule, list):
            return [self.sample(item, **kwargs) for item in sampling_rule]

        elif isinstance(sampling_rule, (tuple, np.ndarray)):
            # tuples and arrays are elementary
            return sampling_rule

        elif callable(sampling_rule):
            function_input = {}

            for key in get_kwarg_names(sampling_rule):
                if key == "rng":
                    function_input[key] = kwargs.get("rng") or np.random.default_rng()
                elif key in kwargs:
                    value = kwargs[key]
                    if isinstance(value, Property):
                        # Dependent property, resolve it first
                        value.update(**kwargs)
                        value = value.current_value
                    function_input[key] = value

            return sampling_rule(**function_input)

        else:
            return sampling_rule



class PropertyDict(dict):
    ''' Dictionary with Property elements

    A dictionary of properties. It provides utility functions to update,
    sample and retrieve properties.

    Parameters
    ----------
    *args, **kwargs
        Arguments used to initialize a dict

    '''


    def current_value_dict(self, is_resolving=False) -> dict:
        ''' Retrieves the current value of all properties as a dictionary

        Parameters
        ----------
        is_resolving : bool
            If True, every property is marked as stale so that the next
            `update()` samples a new value.

        Returns
        -------
        dict
            A dictionary with the current value of all properties

        '''

        current_value_dict = {}
        for key, prop in self.items():
            current_value_dict[key] = prop.current_value

            if is_resolving:
                prop.has_updated_since_last_resolve = False

        return current_value_dict


    def update(self, **kwargs) -> 'PropertyDict':
        ''' Updates all properties

        Calls the method `update()` on each property in the dictionary.
        Other properties are passed along, so that derived properties
        can depend on them.

        Returns
        -------
        PropertyDict
            Returns itself

        '''

        for prop in self.values():
            prop.has_updated_since_last_resolve = False

        kwargs.update(self)
        for prop in self.values():
            prop.update(**kwargs)

        return self


    def sample(self, **kwargs) -> dict:
        ''' Samples all properties

        Returns
        -------
        dict
            A dictionary with each key-value pair the result of a
            `sample()` call on the property with the same key.

        '''

        return {key: prop.sample(prop.sampling_rule, **kwargs) for key, prop in self.items()}
