# "errors.py" from libBOCDPy by the libBOCDPy Contributors
#
# Exception types raised across libBOCDPy. Plain validation problems still surface as ValueError subclasses so that
# callers who only catch ValueError keep working.


class ConfigError(ValueError):
    """
    Raised when hyperparameters, observation model settings, or a configuration file are invalid.
    """


class InputError(ValueError):
    """
    Raised when observations are malformed, out of order, or do not match the configured feature dimension.
    """


class HorizonError(RuntimeError):
    """
    Raised when a removal, reinsertion, or history lookup reaches further back than the retained checkpoints. This
    always means the search ranges and the checkpoint horizon are configured inconsistently.
    """
