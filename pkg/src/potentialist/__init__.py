"""Modal logic of finite potentialist systems.

Submodules: ``formula`` (syntax), ``kripke`` (semantics), ``theories``
(deciding K, S4, S4.2 and S5), ``controls`` (switches, buttons, dials and
labeling witnesses), ``multiverse`` (a toy system of transitive
hereditarily finite sets) and ``cli``.
"""

from .formula import FormulaSyntaxError, parse_fo, parse_prop, render, substitute
from .kripke import Frame, FrameProperty, Model, model_check, valid_on_frame, valid_on_model
from .theories import Countermodel, Inconclusive, Theory, Valid, decide

__all__ = [
    "Countermodel", "Frame", "FrameProperty", "FormulaSyntaxError", "Inconclusive", "Model",
    "Theory", "Valid", "decide", "model_check", "parse_fo", "parse_prop", "render",
    "substitute", "valid_on_frame", "valid_on_model",
]
__version__ = "0.1.0"
