'''Base class Device

Provides the abstract description of a measurement device coupled to a
measured system. A device is defined by a set of properties, which are
resolved into a `ModelSpec` and an initial state of the measured system.

Classes
-------
Device
    Base abstract class. Implementations define `get()`, which builds the
    model from the current values of the properties, and `get_state()`,
    which builds the initial density operator of the measured system.
'''

import logging

from abc import ABC, abstractmethod
from dataclasses import replace
import numpy as np

from ultradecoherence.core import ModelSpec
from ultradecoherence.properties import Property, PropertyDict

logger = logging.getLogger(__name__)



class Device(ABC):
    ''' Base device class.

    Whenever a Device is initiated, all keyword arguments passed to the
    constructor are wrapped as a Property and stored in the `properties`
    field as a `PropertyDict`. When the device is resolved, the current
    value of each property is sent as input to the method `get()`.

    Properties can be constants, or sampling rules such as
    ``lambda rng: rng.uniform(50, 800)``, in which case a new value is
    drawn on each call to `update()`.

    Parameters
    ----------
    *args : dict, optional
        Dicts passed as nonkeyword arguments are deconstructed to key-value
        pairs and included in `properties` like keyword arguments.
    **kwargs
        All keyword arguments are wrapped as instances of ``Property``.

    Attributes
    ----------
    properties : PropertyDict
        The sampling rules of the device parameters.
    __model_name__ : str
        The name given to the resolved ModelSpec.
    '''

    __model_name__ = "custom"


    def __init__(self, *args: dict, **kwargs):
        super(Device, self).__init__()
        properties = getattr(self, "properties", {})

        all_dicts = (kwargs, ) + args

        for property_dict in all_dicts:
            for key, value in property_dict.items():
                if not isinstance(value, Property):
                    value = Property(value)

                properties[key] = value

        self.properties = PropertyDict(**properties)
        # Derived properties need their dependencies on first access
        self.properties.update()


    @abstractmethod
    def get(self, **kwargs) -> ModelSpec:
        ''' Build the model.

        Parameters
        ----------
        **kwargs
            The current value of all properties, as well as any global
            arguments passed to `resolve()`.

        Returns
        -------
        ModelSpec
        '''


    def get_state(self, **kwargs) -> np.ndarray:
        ''' Build the initial density operator of the measured system.

        Parameters
        ----------
        **kwargs
            The current value of all properties.

        Returns
        -------
        ndarray
        '''

        raise NotImplementedError("{0} does not define an initial state".format(type(self).__name__))


    def resolve(self, **global_kwargs) -> ModelSpec:
        ''' Creates the model.

        The properties of the device can be overruled by passing a
        different value as a keyword argument.

        Parameters
        ----------
        **global_kwargs
            Values that replace the current value of properties.

        Returns
        -------
        ModelSpec
            The model, named after the device, with the resolved parameter
            values stored in its metadata.
        '''

        device_input = self.properties.current_value_dict(is_resolving=True)
        device_input.update(global_kwargs)

        # Hook for subclasses to derive or rescale properties
        device_input = self._process_properties(device_input)

        spec = self.get(**device_input)

        metadata = dict(spec.metadata)
        for key, value in device_input.items():
            if isinstance(value, (bool, int, float, str)):
                metadata.setdefault(key, value)

        logger.debug("Resolved %s with %s", type(self).__name__, metadata)
        return replace(spec, name=self.__model_name__, metadata=metadata)


    def resolve_state(self, **global_kwargs) -> np.ndarray:
        ''' Creates the initial density operator of the measured system.

        Parameters
        ----------
        **global_kwargs
            Values that replace the current value of properties.

        Returns
        -------
        ndarray
        '''

        device_input = self.properties.current_value_dict()
        device_input.update(global_kwargs)
        device_input = self._process_properties(device_input)
        return self.get_state(**device_input)


    def update(self, **kwargs) -> "Device":
        '''Updates the state of all properties.

        Parameters
        ----------
        **kwargs
            Arguments passed to the Property method `update()`, such as
            the random generator `rng`.

        Returns
        -------
        self
        '''

        self.properties.update(**kwargs)
        return self


    def _process_properties(self, propertydict) -> dict:
        # Optional hook for subclasses to preprocess input before calling
        # the method .get()
        return propertydict
