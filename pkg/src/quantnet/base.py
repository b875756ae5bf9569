"""Estimator plumbing shared by every strategy class.

ParamsMixin implements get_params/set_params with scikit-learn semantics
(constructor arguments are the parameters, stored under the same names) so
strategies clone and compose with sklearn tooling without importing sklearn.
"""

from __future__ import annotations

import inspect

from .errors import ConfigError


class ParamsMixin:
    """get_params / set_params in the scikit-learn estimator idiom."""

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        ]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ConfigError(
                    f"invalid parameter {name!r} for {type(self).__name__}; "
                    f"valid parameters: {sorted(valid)}"
                )
            setattr(self, name, value)
        return self
