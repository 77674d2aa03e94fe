import logging
from fractions import Fraction
from functools import wraps

log = logging.getLogger(__name__)


def exact_number(value):
    """
    The rational number a decimal input stands for: 2.5 -> 5/2, 4.0 -> 4.
    Keeps the classifier in exact arithmetic for the usual kappa and alpha.
    """
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return value
    number = Fraction(repr(float(value)))
    return number.numerator if number.denominator == 1 else number


def parse_complex(value):
    """
    Read a point of the plane from a config value or flag.

    Accepts numbers, [re, im] pairs and strings such as "0+1.5708i",
    "2j" or "-0.5+1.5i".
    """
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError("a point is a pair [re, im], got %r" % (value,))
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
        return complex(value)
    text = str(value).strip().replace(' ', '').replace('i', 'j')
    return complex(text)


def experiment(command, columns):
    """ Return a wrapped function with a `command` attribute set to
    `command` and the CSV column order in `columns`.

    Arguments:
    - `command`: the command-line name of the experiment
    - `columns`: the columns of its result rows, in output order
    """
    def inner(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            log.info("running %s", command)
            return func(*args, **kwargs)
        wrapper.command = command
        wrapper.columns = tuple(columns)
        return wrapper
    return inner
